#include "cfx/codebook.hpp"
#include "cfx/dataset.hpp"
#include "cfx/engine.hpp"

#include <doctest.h>

#include <cmath>

using namespace cfx;

namespace {

Matrix digits_train() {
    const auto data = load_csv(std::filesystem::path(CFX_DATA_DIR) / "digits.csv", CsvSchema{});
    IndexSet rows;
    for (std::size_t i = 0; i < data.size(); i += 3) {
        rows.push_back(i);
    }
    return fit_standardizer(data, rows).apply(data.rows(rows));
}

Codebook small_codebook() {
    Codebook cb;
    cb.primitives.resize(4, 3);
    cb.primitives << 1, 0, 0,
                     0, 1, 0,
                     0, 0, 1,
                     0.5, -0.5, 0.25;
    cb.base = Vector::LinSpaced(4, -1, 1);
    return cb;
}

Vector random_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = scale * rng.normal();
    }
    return v;
}

}  // namespace

TEST_SUITE("codebook") {
    TEST_CASE("two distinct points are represented exactly") {
        Vector p(3), q(3);
        p << 1.0, 2.0, -1.0;
        q << -0.5, 0.0, 3.0;
        Matrix x(40, 3);
        for (int i = 0; i < 40; ++i) {
            x.row(i) = (i % 2 ? p : q).transpose();
        }
        CodebookTraining opts;
        opts.atoms = 2;
        opts.lambda = 0.0;
        opts.epochs = 20;
        const auto fit = learn_codebook(x, opts);
        for (int i = 0; i < 40; ++i) {
            const Vector xi = x.row(i).transpose();
            CHECK((decode(fit.codebook, encode(fit.codebook, xi)) - xi).norm() < 1e-6);
        }
    }

    TEST_CASE("zero epochs keep sampled rows minus the base") {
        const Matrix x = digits_train();
        CodebookTraining opts;
        opts.epochs = 0;
        opts.seed = 8;
        const auto fit = learn_codebook(x, opts);
        const Vector mean = x.colwise().mean().transpose();
        CHECK((fit.codebook.base - mean).cwiseAbs().maxCoeff() <= 1e-12);
        for (Eigen::Index k = 0; k < fit.codebook.primitives.cols(); ++k) {
            bool matched = false;
            for (Eigen::Index i = 0; i < x.rows() && !matched; ++i) {
                matched = (x.row(i).transpose() - mean - fit.codebook.primitives.col(k)).cwiseAbs().maxCoeff() <= 1e-12;
            }
            CHECK(matched);
        }
        CHECK(fit.objective_trace.empty());
    }

    TEST_CASE("digits objective does not increase") {
        CodebookTraining opts;
        opts.epochs = 15;
        const auto fit = learn_codebook(digits_train(), opts);
        REQUIRE(fit.objective_trace.size() == 15);
        for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
            CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-10);
        }
        CHECK(fit.codes.minCoeff() >= 0.0);
        for (Eigen::Index k = 0; k < fit.codebook.primitives.cols(); ++k) {
            CHECK(fit.codebook.primitives.col(k).norm() <= 1.0 + 1e-12);
        }
        CHECK_NOTHROW(fit.codebook.validate());
    }

    TEST_CASE("learning is deterministic and validates arguments") {
        const Matrix x = digits_train();
        CodebookTraining opts;
        opts.epochs = 3;
        const auto a = learn_codebook(x, opts);
        const auto b = learn_codebook(x, opts);
        CHECK(a.codebook.primitives == b.codebook.primitives);
        opts.atoms = static_cast<std::size_t>(x.rows()) + 1;
        CHECK_THROWS_AS(learn_codebook(x, opts), InvalidArgument);
        opts.atoms = 10;
        opts.lambda = -1.0;
        CHECK_THROWS_AS(learn_codebook(x, opts), InvalidArgument);
    }

    TEST_CASE("encoding an atom recovers its unit code") {
        const Codebook cb = small_codebook();
        for (Eigen::Index j = 0; j < 3; ++j) {
            const Vector ej = Vector::Unit(3, j);
            const Vector x = decode(cb, ej);
            CHECK((encode(cb, x) - ej).cwiseAbs().maxCoeff() <= 1e-4);
            CHECK((encode(cb, x, true) - ej).cwiseAbs().maxCoeff() <= 1e-4);
            // e_j attains zero error, so no grid point does better.
            double best = std::numeric_limits<double>::infinity();
            for (int a = 0; a <= 20; ++a) {
                for (int b = 0; b <= 20; ++b) {
                    for (int c = 0; c <= 20; ++c) {
                        Vector z(3);
                        z << a * 0.1, b * 0.1, c * 0.1;
                        best = std::min(best, (decode(cb, z) - x).squaredNorm());
                    }
                }
            }
            CHECK((decode(cb, ej) - x).squaredNorm() <= best);
        }
    }

    TEST_CASE("encoding the base gives the zero code") {
        const Codebook cb = small_codebook();
        CHECK(encode(cb, cb.base).isZero(0.0));
    }

    TEST_CASE("codes are nonnegative and simplex codes sum to one") {
        const Codebook cb = small_codebook();
        Rng rng(3);
        for (int t = 0; t < 100; ++t) {
            const Vector x = random_vector(rng, 4, 2.0);
            const Vector z = encode(cb, x);
            CHECK(z.minCoeff() >= 0.0);
            const Vector w = encode(cb, x, true);
            CHECK(w.minCoeff() >= 0.0);
            CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
        }
    }

    TEST_CASE("encoder matches the best grid code") {
        const Codebook cb = small_codebook();
        Rng rng(5);
        for (int t = 0; t < 10; ++t) {
            const Vector x = random_vector(rng, 4, 1.0);
            const double err = (decode(cb, encode(cb, x)) - x).squaredNorm();
            double best = std::numeric_limits<double>::infinity();
            for (int a = 0; a <= 40; ++a) {
                for (int b = 0; b <= 40; ++b) {
                    for (int c = 0; c <= 40; ++c) {
                        Vector z(3);
                        z << a * 0.1, b * 0.1, c * 0.1;
                        best = std::min(best, (decode(cb, z) - x).squaredNorm());
                    }
                }
            }
            CHECK(err <= best + 1e-12);
        }
    }

    TEST_CASE("simplex decodes lie in the hull") {
        CodebookTraining opts;
        opts.epochs = 5;
        const auto fit = learn_codebook(digits_train(), opts);
        Rng rng(9);
        for (int t = 0; t < 20; ++t) {
            const Vector x = random_vector(rng, 64, 1.0);
            const Vector w = encode(fit.codebook, x, true);
            CHECK(w.minCoeff() >= -1e-9);
            CHECK(std::abs(w.sum() - 1.0) <= 1e-9);
            const auto hull = hull_membership(fit.codebook, decode(fit.codebook, w), 1e-9);
            CHECK(hull.member);
        }
    }

    TEST_CASE("decode examples and affinity") {
        const Codebook cb = small_codebook();
        CHECK(decode(cb, Vector::Zero(3)) == cb.base);
        CHECK(decode(cb, Vector::Unit(3, 1)) == cb.primitives.col(1) + cb.base);
        Rng rng(2);
        for (int t = 0; t < 20; ++t) {
            const Vector z1 = random_vector(rng, 3).cwiseAbs();
            const Vector z2 = random_vector(rng, 3).cwiseAbs();
            const Vector lhs = decode(cb, z1 + z2) - decode(cb, z2);
            const Vector rhs = decode(cb, z1) - decode(cb, Vector::Zero(3));
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-14);
        }
        CHECK_THROWS_AS(decode(cb, Vector::Zero(2)), DimensionMismatch);
        CHECK_THROWS_AS(encode(cb, Vector::Zero(3)), DimensionMismatch);
    }

    TEST_CASE("held-out reconstruction error is bounded") {
        const auto data = load_csv(std::filesystem::path(CFX_DATA_DIR) / "digits.csv", CsvSchema{});
        const auto plan = make_folds(data.size(), 3, 0, &data.labels);
        const auto train = plan.train_rows(0);
        const auto scaler = fit_standardizer(data, train);
        CodebookTraining opts;
        opts.epochs = 10;
        const auto fit = learn_codebook(scaler.apply(data.rows(train)), opts);
        double train_err = 0.0;
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(train.size()); ++i) {
            const Vector x = scaler.apply(Vector(data.features.row(static_cast<Eigen::Index>(train[i])).transpose()));
            train_err += (decode(fit.codebook, encode(fit.codebook, x)) - x).norm();
        }
        train_err /= static_cast<double>(train.size());
        double test_err = 0.0;
        const auto test = plan.test_rows(0);
        for (auto idx : test) {
            const Vector x = scaler.apply(Vector(data.features.row(static_cast<Eigen::Index>(idx)).transpose()));
            test_err += (decode(fit.codebook, encode(fit.codebook, x)) - x).norm();
        }
        test_err /= static_cast<double>(test.size());
        MESSAGE("mean reconstruction error: train " << train_err << ", held-out " << test_err);
        // The baseline is encoding nothing: |x - b|.
        double null_err = 0.0;
        for (auto idx : test) {
            const Vector x = scaler.apply(Vector(data.features.row(static_cast<Eigen::Index>(idx)).transpose()));
            null_err += (x - fit.codebook.base).norm();
        }
        null_err /= static_cast<double>(test.size());
        CHECK(test_err < null_err);
        CHECK(test_err < 1.25 * train_err);
    }

    TEST_CASE("simplex projection") {
        Vector v(3);
        v << 0.5, 0.5, 0.5;
        CHECK(project_to_simplex(v).isApprox(Vector::Constant(3, 1.0 / 3.0)));
        v << 3.0, 0.0, -1.0;
        CHECK(project_to_simplex(v) == Vector::Unit(3, 0));
    }

    TEST_CASE("codebook documents round-trip") {
        const Codebook cb = small_codebook();
        const auto doc = to_json(cb);
        CHECK(doc["meta"]["m"] == 3);
        const Codebook back = codebook_from_json(nlohmann::json::parse(doc.dump()));
        CHECK(back.primitives == cb.primitives);
        CHECK(back.base == cb.base);
        Codebook dup = cb;
        dup.primitives.col(2) = dup.primitives.col(0);
        CHECK_THROWS_AS(dup.validate(), InvalidArgument);
    }
}

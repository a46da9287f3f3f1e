#include "cfx/codebook.hpp"
#include "cfx/covariance.hpp"
#include "cfx/dataset.hpp"
#include "cfx/engine.hpp"

#include <doctest.h>

#include <cmath>

using namespace cfx;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out(i++) = x;
    }
    return out;
}

SoftmaxRegression toy_softmax() {
    SoftmaxRegression m;
    m.weights.resize(2, 2);
    m.weights << 1, 0, -1, 0;
    m.biases = Vector::Zero(2);
    return m;
}

GlvqModel toy_glvq() {
    GlvqModel m;
    m.prototypes.resize(2, 2);
    m.prototypes << 1, 0, -1, 0;
    m.prototype_labels = {0, 1};
    return m;
}

EngineOptions no_margin() {
    EngineOptions o;
    o.margin = 0.0;
    return o;
}

struct Fitted {
    Matrix x;
    Labels y;
    Classifier softmax;
    Classifier glvq;
};

const Fitted& iris() {
    static const Fitted f = [] {
        Fitted out;
        const auto data = load_csv(std::filesystem::path(CFX_DATA_DIR) / "iris.csv", CsvSchema{});
        out.x = fit_standardizer(data.features).apply(data.features);
        out.y = data.labels;
        out.softmax = train_softmax(out.x, out.y, 3, SoftmaxTraining{});
        out.glvq = train_glvq(out.x, out.y, 3, GlvqTraining{});
        return out;
    }();
    return f;
}

// min |delta|_1 over a grid such that predict(x + delta) == target.
double grid_counterfactual(const Classifier& model, const Vector& x, int target, double r, double step) {
    double best = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(std::round(2 * r / step));
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            const Vector d = vec({-r + i * step, -r + j * step});
            if (d.cwiseAbs().sum() < best && predict(model, x + d) == target) {
                best = d.cwiseAbs().sum();
            }
        }
    }
    return best;
}

}  // namespace

TEST_SUITE("engine") {
    TEST_CASE("boundary projection under L1") {
        const Classifier m = toy_softmax();
        const auto r = baseline_counterfactual(m, vec({2, 0}), 1, no_margin());
        REQUIRE(r.found());
        CHECK(r.delta.isApprox(vec({-2, 0}), 1e-9));
        CHECK(r.x_cf.cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(r.objective == doctest::Approx(2.0));
        // With the default margin the point crosses strictly.
        const auto strict = baseline_counterfactual(m, vec({2, 0}), 1);
        REQUIRE(strict.found());
        CHECK(predict(m, strict.x_cf) == 1);
    }

    TEST_CASE("requests for the current class are rejected") {
        const Classifier m = toy_softmax();
        CHECK_THROWS_AS(baseline_counterfactual(m, vec({2, 0}), 0), InvalidArgument);
        CounterfactualRequest req{vec({2, 0}), 0, ActionMapping::identity(vec({2, 0})), {}};
        CHECK_THROWS_AS(compute_counterfactual(m, req), InvalidArgument);
        CHECK_THROWS_AS(baseline_counterfactual(m, vec({2, 0}), 5), InvalidArgument);
    }

    TEST_CASE("glvq toy matches a grid search") {
        const Classifier m = toy_glvq();
        const Vector x = vec({1.5, 0.3});
        const auto r = baseline_counterfactual(m, x, 1);
        REQUIRE(r.found());
        const double grid = grid_counterfactual(m, x, 1, 2.5, 0.0005);
        CHECK(std::abs(r.objective - grid) <= 1e-3);
        CHECK(predict(m, r.x_cf) == 1);
    }

    TEST_CASE("glvq branch exactness") {
        GlvqModel g;
        g.prototypes.resize(4, 2);
        g.prototypes << 0, 0, 4, 0, -3, 1, 0, 5;
        g.prototype_labels = {0, 1, 1, 1};
        const Classifier m = g;
        const Vector x = vec({0.5, 0.5});
        const auto sets = target_constraints(m, 1);
        REQUIRE(sets.size() == 3);
        double best = std::numeric_limits<double>::infinity();
        int best_branch = -1;
        const auto l1 = l1_epigraph(2);
        for (std::size_t k = 0; k < sets.size(); ++k) {
            LinearProgram lp(4);
            lp.c = l1.objective;
            lp.add_inequalities(l1.inequalities, l1.rhs);
            Matrix region = Matrix::Zero(sets[k].a.rows(), 4);
            region.leftCols(2) = sets[k].a;
            lp.add_inequalities(region, sets[k].b - sets[k].a * x);
            const auto sol = solve_lp(lp);
            if (sol.optimal() && sol.objective < best) {
                best = sol.objective;
                best_branch = static_cast<int>(k);
            }
        }
        const auto r = baseline_counterfactual(m, x, 1);
        REQUIRE(r.found());
        CHECK(r.objective == doctest::Approx(best).epsilon(1e-8));
        CHECK(r.branch == best_branch);
        const double grid = grid_counterfactual(m, x, 1, 3.0, 0.001);
        CHECK(std::abs(r.objective - grid) <= 2e-3);
    }

    TEST_CASE("identity mapping collapses to the baseline") {
        const auto& f = iris();
        Rng rng(31);
        int compared = 0;
        for (const Classifier* model : {&f.softmax, &f.glvq}) {
            for (int i = 0; i < 150 && compared < 100; i += 3) {
                const Vector x = f.x.row(i).transpose();
                const int current = predict(*model, x);
                const int target = (current + 1 + static_cast<int>(rng.below(2))) % 3;
                const auto base = baseline_counterfactual(*model, x, target);
                CounterfactualRequest req{x, target, ActionMapping::identity(x), {}};
                const auto mapped = compute_counterfactual(*model, req);
                REQUIRE(base.found() == mapped.found());
                if (base.found()) {
                    CHECK(std::abs(base.objective - mapped.objective) <= 1e-8);
                    CHECK((base.delta - mapped.delta).cwiseAbs().maxCoeff() <= 1e-6);
                }
                ++compared;
            }
        }
    }

    TEST_CASE("correlation mapping application") {
        Matrix s(2, 2);
        s << 1, 0.5, 0.5, 1;
        const Vector x = vec({0.3, -1.0});
        const auto map = ActionMapping::correlation(x, s);
        CHECK(map.apply(vec({1, 0})) == x + vec({1, 0.5}));
        CHECK(map.matrix() == s);
        CHECK(map.offset() == x);
        CHECK_THROWS_AS(ActionMapping::correlation(x, Matrix::Identity(3, 3)), DimensionMismatch);
        CHECK_THROWS_AS(map.apply(vec({1, 2, 3})), DimensionMismatch);
    }

    TEST_CASE("correlation counterfactuals are valid and affine") {
        const auto& f = iris();
        const Matrix corr =
            correlation_from_covariance(graphical_lasso(empirical_covariance(f.x), 0.3).sigma_hat).sigma_tilde;
        for (const Classifier* model : {&f.softmax, &f.glvq}) {
            for (int i = 0; i < 150; i += 5) {
                const Vector x = f.x.row(i).transpose();
                const int target = (predict(*model, x) + 1) % 3;
                CounterfactualRequest req{x, target, ActionMapping::correlation(x, corr), {}};
                const auto r = compute_counterfactual(*model, req);
                if (r.found()) {
                    CHECK(predict(*model, r.x_cf) == target);
                    CHECK((r.x_cf - (corr * r.delta + x)).cwiseAbs().maxCoeff() == 0.0);
                    CHECK(r.objective == doctest::Approx(r.delta.cwiseAbs().sum()));
                }
            }
        }
    }

    TEST_CASE("weighted regularizer") {
        const Classifier m = toy_softmax();
        SoftmaxRegression two;
        two.weights.resize(2, 2);
        two.weights << 1, 1, -1, -1;
        two.biases = Vector::Zero(2);
        const Vector x = vec({1, 1});
        CounterfactualRequest req{x, 1, ActionMapping::identity(x), vec({1.0, 3.0})};
        const auto r = compute_counterfactual(Classifier(two), req, no_margin());
        REQUIRE(r.found());
        // Moving the cheap coordinate is optimal.
        CHECK(r.delta(0) == doctest::Approx(-2.0));
        CHECK(std::abs(r.delta(1)) <= 1e-9);
        req.weights = vec({1.0});
        CHECK_THROWS_AS(compute_counterfactual(Classifier(two), req), DimensionMismatch);
    }

    TEST_CASE("hull membership") {
        Codebook cb;
        cb.primitives.resize(3, 3);
        cb.primitives << 1, 0, 0, 0, 1, 0, 0, 0, 0;
        cb.base = vec({0.5, 0.5, 0.5});
        for (Eigen::Index j = 0; j < 3; ++j) {
            const auto h = hull_membership(cb, decode(cb, Vector::Unit(3, j)));
            CHECK(h.member);
            CHECK((h.weights - Vector::Unit(3, j)).cwiseAbs().maxCoeff() <= 1e-6);
        }
        CHECK(hull_membership(cb, decode(cb, Vector::Constant(3, 1.0 / 3))).member);
        // Third coordinate is outside the atom span.
        const Vector outside = cb.base + 10.0 * Vector::Unit(3, 2);
        const auto h = hull_membership(cb, outside);
        CHECK_FALSE(h.member);
        CHECK(h.distance == doctest::Approx(10.0));
        CHECK_FALSE(hull_membership(cb, outside, 1.0).member);
    }

    TEST_CASE("codebook counterfactuals stay in the hull") {
        Codebook cb;
        cb.primitives.resize(2, 3);
        cb.primitives << 2, -2, 0, 0, 0, 2;
        cb.base = vec({0, -0.5});
        const Classifier m = toy_softmax();  // class 1 iff x1 < 0
        const Vector x = vec({1.0, 0.0});
        const Vector z0 = encode(cb, x);
        for (auto mode : {HullMode::HullExact, HullMode::LemmaStrict}) {
            CounterfactualRequest req{x, 1, ActionMapping::codebook(cb, z0, mode), {}};
            const auto r = compute_counterfactual(m, req);
            if (r.found()) {
                CHECK(predict(m, r.x_cf) == 1);
                CHECK(hull_membership(cb, r.x_cf).member);
                CHECK(std::abs((z0 + r.delta).sum() - 1.0) <= 1e-9);
                if (mode == HullMode::LemmaStrict) {
                    CHECK(r.delta.minCoeff() >= -1e-9);
                }
            }
        }
    }

    TEST_CASE("lemma mode is never cheaper than exact mode") {
        Rng rng(41);
        int both = 0;
        for (int t = 0; t < 200; ++t) {
            Codebook cb;
            cb.primitives.resize(2, 4);
            for (Eigen::Index i = 0; i < cb.primitives.size(); ++i) {
                cb.primitives(i) = 2.0 * rng.normal();
            }
            cb.base = vec({0.2 * rng.normal(), 0.2 * rng.normal()});
            const Vector x = vec({0.5 + rng.uniform(), rng.normal()});
            // Small codes so that sum(z0) <= 1 is common.
            Vector z0(4);
            for (Eigen::Index i = 0; i < 4; ++i) {
                z0(i) = 0.2 * rng.uniform();
            }
            const Classifier m = toy_softmax();
            CounterfactualRequest exact{x, 1, ActionMapping::codebook(cb, z0, HullMode::HullExact), {}};
            CounterfactualRequest lemma{x, 1, ActionMapping::codebook(cb, z0, HullMode::LemmaStrict), {}};
            const auto a = compute_counterfactual(m, exact);
            const auto b = compute_counterfactual(m, lemma);
            if (b.found()) {
                CHECK(a.found());
            }
            if (a.found() && b.found()) {
                ++both;
                CHECK(b.objective >= a.objective - 1e-9);
            }
        }
        MESSAGE(both << " requests with both modes feasible");
        CHECK(both > 20);
    }

    TEST_CASE("program sink sees every branch") {
        const auto& f = iris();
        const Vector x = f.x.row(0).transpose();
        std::vector<int> branches;
        EngineOptions opts;
        opts.sink = [&](const LinearProgram& lp, int b) {
            CHECK(lp.vars() == 8);
            branches.push_back(b);
        };
        baseline_counterfactual(f.glvq, x, 2, opts);
        CHECK(branches == std::vector<int>{0, 1, 2});
    }
}

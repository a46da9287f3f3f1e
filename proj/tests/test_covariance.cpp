#include "cfx/covariance.hpp"
#include "cfx/dataset.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>

using namespace cfx;

namespace {

Matrix standardized(const std::string& name) {
    const auto data = load_csv(std::filesystem::path(CFX_DATA_DIR) / (name + ".csv"), CsvSchema{});
    return fit_standardizer(data.features).apply(data.features);
}

int off_diagonal_nonzeros(const Matrix& m, double tol = 1e-12) {
    int count = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            count += (i != j && std::abs(m(i, j)) > tol) ? 1 : 0;
        }
    }
    return count;
}

// Objective over 2x2 precision matrices theta = [[a, c], [c, d]].
double objective_2x2(const Matrix& s, double alpha, const Vector& p) {
    Matrix t(2, 2);
    t << p(0), p(2), p(2), p(1);
    return glasso_objective(s, t, alpha);
}

}  // namespace

TEST_SUITE("covariance") {
    TEST_CASE("empirical covariance examples") {
        Matrix x(2, 2);
        x << 1, 0, -1, 0;
        Matrix expect(2, 2);
        expect << 1, 0, 0, 0;
        CHECK(empirical_covariance(x).isApprox(expect));
        Matrix same(5, 3);
        same.rowwise() = Vector::LinSpaced(3, 1, 3).transpose();
        CHECK(empirical_covariance(same).isZero(1e-15));
        CHECK_THROWS_AS(empirical_covariance(Matrix::Ones(1, 3)), InvalidArgument);
    }

    TEST_CASE("empirical covariance matches the loop definition") {
        Rng rng(2);
        Matrix x(8, 3);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x(i) = rng.normal();
        }
        const Matrix s = empirical_covariance(x);
        CHECK((s - oracle::covariance_loops(x)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().minCoeff() >= -1e-12);
    }

    TEST_CASE("identity is a fixed point") {
        for (double alpha : {0.01, 0.8, 5.0}) {
            const auto est = graphical_lasso(Matrix::Identity(5, 5), alpha);
            CHECK((est.theta - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-8);
            CHECK((est.sigma_hat - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-8);
            CHECK(est.converged);
        }
    }

    TEST_CASE("2x2 estimate matches a direct minimization") {
        Matrix s(2, 2);
        s << 1, 0.6, 0.6, 1;
        for (double alpha : {0.8, 0.3, 0.1}) {
            CAPTURE(alpha);
            const auto est = graphical_lasso(s, alpha, GlassoOptions{1e-10, 1000, 10000, 1e-14});
            const auto f = [&](const Vector& p) { return objective_2x2(s, alpha, p); };
            Vector lo(3), hi(3);
            lo << 0.1, 0.1, -3.0;
            hi << 4.0, 4.0, 3.0;
            const Vector best = oracle::pattern_search(f, lo, hi, 40);
            CHECK(std::abs(est.theta(0, 0) - best(0)) <= 1e-4);
            CHECK(std::abs(est.theta(1, 1) - best(1)) <= 1e-4);
            CHECK(std::abs(est.theta(0, 1) - best(2)) <= 1e-4);
        }
    }

    TEST_CASE("large alpha gives a diagonal precision") {
        for (const char* name : {"iris", "wine", "breastcancer"}) {
            CAPTURE(name);
            const Matrix s = empirical_covariance(standardized(name));
            const auto est = graphical_lasso(s, 10.0);
            CHECK(off_diagonal_nonzeros(est.theta) == 0);
            // The diagonal candidate beats small symmetric perturbations.
            const double f0 = glasso_objective(s, est.theta, 10.0);
            Rng rng(1);
            for (int t = 0; t < 20; ++t) {
                Matrix p = est.theta;
                const auto i = static_cast<Eigen::Index>(rng.below(s.rows()));
                const auto j = static_cast<Eigen::Index>(rng.below(s.rows()));
                const double e = 1e-3 * (rng.uniform() - 0.5);
                p(i, j) += e;
                if (i != j) {
                    p(j, i) += e;
                }
                CHECK(glasso_objective(s, p, 10.0) >= f0 - 1e-12);
            }
        }
    }

    TEST_CASE("estimate invariants on standardized data") {
        for (const char* name : {"iris", "wine", "breastcancer"}) {
            CAPTURE(name);
            const Matrix s = empirical_covariance(standardized(name));
            const auto est = graphical_lasso(s, 0.8);
            CHECK(est.converged);
            CHECK((est.theta - est.theta.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK((est.sigma_hat - est.sigma_hat.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(est.theta).eigenvalues().minCoeff() > 0.0);
            const Matrix id = Matrix::Identity(s.rows(), s.cols());
            CHECK((est.theta * est.sigma_hat - id).cwiseAbs().maxCoeff() <= 1e-6);
        }
    }

    TEST_CASE("sparsity is monotone in alpha") {
        const Matrix s = empirical_covariance(standardized("iris"));
        int prev = std::numeric_limits<int>::max();
        for (double alpha : {0.1, 0.2, 0.4, 0.8, 1.6}) {
            const int nz = off_diagonal_nonzeros(graphical_lasso(s, alpha).theta);
            CHECK(nz <= prev);
            prev = nz;
        }
    }

    TEST_CASE("objective certificate") {
        for (const char* name : {"iris", "wine"}) {
            CAPTURE(name);
            const Matrix s = empirical_covariance(standardized(name));
            for (double alpha : {0.1, 0.4, 0.8}) {
                CAPTURE(alpha);
                const auto est = graphical_lasso(s, alpha);
                const double f = glasso_objective(s, est.theta, alpha);
                const Matrix inv = s.inverse();
                const Matrix diag = s.diagonal().cwiseInverse().asDiagonal();
                CHECK(f <= glasso_objective(s, inv, alpha) + 1e-9);
                CHECK(f <= glasso_objective(s, diag, alpha) + 1e-9);
            }
        }
    }

    TEST_CASE("iris correlation pattern") {
        const auto data = load_csv(std::filesystem::path(CFX_DATA_DIR) / "iris.csv", CsvSchema{});
        const auto plan = make_folds(data.size(), 3, 0, &data.labels);
        for (std::size_t f = 0; f < 3; ++f) {
            const auto train = plan.train_rows(f);
            const Matrix x = fit_standardizer(data, train).apply(data.rows(train));
            const Matrix corr =
                correlation_from_covariance(graphical_lasso(empirical_covariance(x), 0.8).sigma_hat).sigma_tilde;
            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < 4; ++j) {
                    const bool expect_nonzero = i == j || (i != 1 && j != 1);
                    CHECK((std::abs(corr(i, j)) > 1e-12) == expect_nonzero);
                }
            }
        }
    }

    TEST_CASE("correlation examples") {
        Matrix s(2, 2);
        s << 4, 2, 2, 1;
        CHECK(correlation_from_covariance(s).sigma_tilde.isApprox(Matrix::Ones(2, 2)));
        const Matrix d = Vector::LinSpaced(4, 1, 7).asDiagonal();
        CHECK(correlation_from_covariance(d).sigma_tilde == Matrix::Identity(4, 4));
        Matrix bad(2, 2);
        bad << 1, 0, 0, 0;
        CHECK_THROWS_AS(correlation_from_covariance(bad), InvalidArgument);
    }

    TEST_CASE("correlation is idempotent with unit diagonal") {
        const Matrix s = empirical_covariance(standardized("wine"));
        const auto est = graphical_lasso(s, 0.3);
        const Matrix once = correlation_from_covariance(est.sigma_hat).sigma_tilde;
        const Matrix twice = correlation_from_covariance(once).sigma_tilde;
        CHECK((once - twice).cwiseAbs().maxCoeff() <= 1e-12);
        for (Eigen::Index i = 0; i < once.rows(); ++i) {
            CHECK(once(i, i) == 1.0);
        }
        CHECK(once.cwiseAbs().maxCoeff() <= 1.0);
        CHECK(once == once.transpose());
        // Same sparsity pattern as the input.
        for (Eigen::Index i = 0; i < once.size(); ++i) {
            CHECK((est.sigma_hat(i) == 0.0) == (once(i) == 0.0));
        }
    }

    TEST_CASE("permutation equivariance") {
        const Matrix x = standardized("wine");
        std::vector<Eigen::Index> perm(static_cast<std::size_t>(x.cols()));
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(4);
        rng.shuffle(perm);
        Matrix xp(x.rows(), x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            xp.col(j) = x.col(perm[static_cast<std::size_t>(j)]);
        }
        const Matrix s = empirical_covariance(x);
        const Matrix sp = empirical_covariance(xp);
        const auto est = graphical_lasso(s, 0.4, GlassoOptions{1e-10, 1000, 10000, 1e-14});
        const auto estp = graphical_lasso(sp, 0.4, GlassoOptions{1e-10, 1000, 10000, 1e-14});
        const Matrix corr = correlation_from_covariance(est.sigma_hat).sigma_tilde;
        const Matrix corrp = correlation_from_covariance(estp.sigma_hat).sigma_tilde;
        for (Eigen::Index i = 0; i < x.cols(); ++i) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                const auto pi = perm[static_cast<std::size_t>(i)];
                const auto pj = perm[static_cast<std::size_t>(j)];
                CHECK(sp(i, j) == doctest::Approx(s(pi, pj)).epsilon(1e-12));
                CHECK(std::abs(estp.theta(i, j) - est.theta(pi, pj)) <= 1e-6);
                CHECK(std::abs(corrp(i, j) - corr(pi, pj)) <= 1e-6);
            }
        }
    }

    TEST_CASE("input validation") {
        Matrix s(2, 2);
        s << 1, 0.5, 0.4, 1;
        CHECK_THROWS_AS(graphical_lasso(s, 0.1), InvalidArgument);
        CHECK_THROWS_AS(graphical_lasso(Matrix::Identity(2, 2), 0.0), InvalidArgument);
    }

    TEST_CASE("non-convergence is reported") {
        const Matrix s = empirical_covariance(standardized("breastcancer"));
        GlassoOptions opts;
        opts.max_iter = 1;
        const auto est = graphical_lasso(s, 0.05, opts);
        CHECK_FALSE(est.converged);
        CHECK(est.iterations == 1);
    }

    TEST_CASE("matrix csv round trip") {
        const auto path = std::filesystem::temp_directory_path() / "cfx_matrix_test.csv";
        const Matrix m = correlation_from_covariance(empirical_covariance(standardized("iris"))).sigma_tilde;
        save_matrix_csv(m, path);
        CHECK(load_matrix_csv(path) == m);
        std::filesystem::remove(path);
    }
}

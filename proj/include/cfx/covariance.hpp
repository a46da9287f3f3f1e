#pragma once

#include "cfx/common.hpp"

#include <filesystem>

namespace cfx {

/// Result of sparse inverse covariance estimation.
struct CovarianceEstimate {
    Matrix sigma_emp;  // empirical covariance that was fitted
    Matrix theta;      // sparse precision matrix
    Matrix sigma_hat;  // theta^-1
    double alpha = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Covariance rescaled to unit diagonal.
struct CorrelationMatrix {
    Matrix sigma_tilde;
};

struct GlassoOptions {
    double tol = 1e-5;          // mean absolute change of theta per sweep
    std::size_t max_iter = 200; // sweeps over all columns
    std::size_t lasso_max_iter = 1000;
    double lasso_tol = 1e-8;
};

/// Maximum-likelihood (1/n) covariance of the rows of x.
Matrix empirical_covariance(const Matrix& x);

/// Penalized Gaussian log-likelihood objective
///   tr(S theta) - log det theta + alpha * sum_{i != j} |theta_ij|.
/// Returns +inf when theta is not positive definite.
double glasso_objective(const Matrix& sigma_emp, const Matrix& theta, double alpha);

/// Graphical lasso by block coordinate descent over columns, each column an
/// L1-regularized regression solved with cyclic coordinate descent. The
/// diagonal of theta is not penalized.
CovarianceEstimate graphical_lasso(const Matrix& sigma_emp, double alpha, const GlassoOptions& opts = {});

CorrelationMatrix correlation_from_covariance(const Matrix& sigma);

/// d x d matrix as comma-separated rows without a header.
Matrix load_matrix_csv(const std::filesystem::path& path);
void save_matrix_csv(const Matrix& m, const std::filesystem::path& path);

}  // namespace cfx

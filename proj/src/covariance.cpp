#include "cfx/covariance.hpp"

#include "cfx/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cfx {

namespace {

void require_symmetric(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw DimensionMismatch(std::string(what) + " must be a non-empty square matrix");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw InvalidArgument(std::string(what) + " is not symmetric");
    }
}

double soft_threshold(double x, double t) {
    if (x > t) {
        return x - t;
    }
    if (x < -t) {
        return x + t;
    }
    return 0.0;
}

// Cyclic coordinate descent on 0.5 b'Wb - s'b + alpha |b|_1, warm-started
// from `beta`.
void lasso_cd(const Matrix& w, const Vector& s, double alpha, Vector& beta, std::size_t max_iter, double tol) {
    const Eigen::Index p = s.size();
    for (std::size_t it = 0; it < max_iter; ++it) {
        double max_change = 0.0;
        for (Eigen::Index k = 0; k < p; ++k) {
            const double partial = s(k) - w.row(k).dot(beta) + w(k, k) * beta(k);
            const double updated = soft_threshold(partial, alpha) / w(k, k);
            max_change = std::max(max_change, std::abs(updated - beta(k)));
            beta(k) = updated;
        }
        if (max_change < tol) {
            return;
        }
    }
}

// Copy of m without row and column j.
Matrix drop_index(const Matrix& m, Eigen::Index j) {
    const Eigen::Index d = m.rows();
    Matrix out(d - 1, d - 1);
    for (Eigen::Index r = 0, ro = 0; r < d; ++r) {
        if (r == j) {
            continue;
        }
        for (Eigen::Index c = 0, co = 0; c < d; ++c) {
            if (c == j) {
                continue;
            }
            out(ro, co++) = m(r, c);
        }
        ++ro;
    }
    return out;
}

Vector drop_entry(const Vector& v, Eigen::Index j) {
    Vector out(v.size() - 1);
    for (Eigen::Index r = 0, ro = 0; r < v.size(); ++r) {
        if (r != j) {
            out(ro++) = v(r);
        }
    }
    return out;
}

}  // namespace

Matrix empirical_covariance(const Matrix& x) {
    if (x.rows() < 2) {
        throw InvalidArgument("empirical covariance needs at least two rows");
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - mean;
    Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows());
    return 0.5 * (cov + cov.transpose());
}

double glasso_objective(const Matrix& sigma_emp, const Matrix& theta, double alpha) {
    Eigen::LLT<Matrix> llt(theta);
    if (llt.info() != Eigen::Success) {
        return std::numeric_limits<double>::infinity();
    }
    const Matrix& l = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) {
            return std::numeric_limits<double>::infinity();
        }
        log_det += 2.0 * std::log(l(i, i));
    }
    const double off_diag = theta.cwiseAbs().sum() - theta.diagonal().cwiseAbs().sum();
    return (sigma_emp.cwiseProduct(theta)).sum() - log_det + alpha * off_diag;
}

CovarianceEstimate graphical_lasso(const Matrix& sigma_emp, double alpha, const GlassoOptions& opts) {
    require_symmetric(sigma_emp, "empirical covariance");
    if (!(alpha > 0.0)) {
        throw InvalidArgument("graphical lasso needs alpha > 0");
    }
    const Eigen::Index d = sigma_emp.rows();
    Matrix s = 0.5 * (sigma_emp + sigma_emp.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < 1e-10) {
        s.diagonal().array() += 1e-8;
    }
    if ((s.diagonal().array() <= 0.0).any()) {
        throw InvalidArgument("empirical covariance has a non-positive diagonal entry");
    }

    CovarianceEstimate est;
    est.sigma_emp = sigma_emp;
    est.alpha = alpha;

    Matrix w = s;
    Matrix theta = s.inverse();
    // Per-column regression coefficients, kept for warm starts.
    std::vector<Vector> betas(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
        betas[static_cast<std::size_t>(j)] = drop_entry(-theta.col(j) / theta(j, j), j);
    }

    if (d == 1) {
        est.theta = theta;
        est.sigma_hat = s;
        est.converged = true;
        return est;
    }

    for (std::size_t sweep = 0; sweep < opts.max_iter; ++sweep) {
        const Matrix theta_prev = theta;
        for (Eigen::Index j = 0; j < d; ++j) {
            const Matrix w11 = drop_index(w, j);
            const Vector s12 = drop_entry(s.col(j), j);
            Vector& beta = betas[static_cast<std::size_t>(j)];
            lasso_cd(w11, s12, alpha, beta, opts.lasso_max_iter, opts.lasso_tol);
            const Vector w12 = w11 * beta;
            const double theta_jj = 1.0 / (w(j, j) - w12.dot(beta));
            for (Eigen::Index r = 0, ro = 0; r < d; ++r) {
                if (r == j) {
                    continue;
                }
                w(r, j) = w12(ro);
                w(j, r) = w12(ro);
                theta(r, j) = -beta(ro) * theta_jj;
                theta(j, r) = theta(r, j);
                ++ro;
            }
            theta(j, j) = theta_jj;
        }
        est.iterations = sweep + 1;
        const double change = (theta - theta_prev).cwiseAbs().mean();
        if (change < opts.tol) {
            est.converged = true;
            break;
        }
    }
    if (!est.converged) {
        log::warn("graphical lasso did not converge within " + std::to_string(opts.max_iter) + " sweeps");
    }

    theta = 0.5 * (theta + theta.transpose());
    Eigen::LLT<Matrix> llt(theta);
    if (llt.info() != Eigen::Success) {
        // Column updates of theta only agree with w^-1 at a fixed point; an
        // early stop can leave them indefinite while w itself stays PD.
        const Matrix w_sym = 0.5 * (w + w.transpose());
        Eigen::LLT<Matrix> wllt(w_sym);
        if (est.converged || wllt.info() != Eigen::Success) {
            throw Error("graphical lasso produced a precision matrix that is not positive definite");
        }
        theta = wllt.solve(Matrix::Identity(d, d));
        theta = 0.5 * (theta + theta.transpose());
        llt.compute(theta);
    }
    est.theta = theta;
    Matrix sigma_hat = llt.solve(Matrix::Identity(d, d));
    est.sigma_hat = 0.5 * (sigma_hat + sigma_hat.transpose());
    return est;
}

CorrelationMatrix correlation_from_covariance(const Matrix& sigma) {
    require_symmetric(sigma, "covariance");
    const Eigen::Index d = sigma.rows();
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(sigma(i, i) > 0.0)) {
            throw InvalidArgument("covariance diagonal entry " + std::to_string(i) + " is not positive");
        }
    }
    const Vector inv_sd = sigma.diagonal().cwiseSqrt().cwiseInverse();
    CorrelationMatrix out;
    out.sigma_tilde = inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = std::clamp(0.5 * (out.sigma_tilde(i, j) + out.sigma_tilde(j, i)), -1.0, 1.0);
            out.sigma_tilde(i, j) = v;
            out.sigma_tilde(j, i) = v;
        }
        out.sigma_tilde(i, i) = 1.0;
    }
    return out;
}

Matrix load_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) {
                    throw std::invalid_argument(cell);
                }
            } catch (const std::exception&) {
                throw MalformedInput("non-numeric matrix entry '" + cell + "'", line_no);
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw MalformedInput("ragged matrix row", line_no);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.size() != rows.front().size()) {
        throw MalformedInput("matrix file must hold a non-empty square matrix", line_no);
    }
    const auto d = static_cast<Eigen::Index>(rows.size());
    Matrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return m;
}

void save_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out << (j ? "," : "") << format_number(m(i, j));
        }
        out << '\n';
    }
}

}  // namespace cfx

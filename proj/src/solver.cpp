#include "cfx/solver.hpp"

#include "cfx/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cfx {

LinearProgram::LinearProgram(Eigen::Index vars)
    : c(Vector::Zero(vars)), g(0, vars), h(0), a_eq(0, vars), b_eq(0) {}

void LinearProgram::add_inequalities(const Matrix& rows, const Vector& rhs) {
    if (rows.cols() != vars() || rows.rows() != rhs.size()) {
        throw DimensionMismatch("inequality block has inconsistent shape");
    }
    Matrix g_new(g.rows() + rows.rows(), vars());
    g_new << g, rows;
    Vector h_new(h.size() + rhs.size());
    h_new << h, rhs;
    g = std::move(g_new);
    h = std::move(h_new);
}

void LinearProgram::add_equalities(const Matrix& rows, const Vector& rhs) {
    if (rows.cols() != vars() || rows.rows() != rhs.size()) {
        throw DimensionMismatch("equality block has inconsistent shape");
    }
    Matrix a_new(a_eq.rows() + rows.rows(), vars());
    a_new << a_eq, rows;
    Vector b_new(b_eq.size() + rhs.size());
    b_new << b_eq, rhs;
    a_eq = std::move(a_new);
    b_eq = std::move(b_new);
}

void LinearProgram::validate() const {
    const auto p = c.size();
    if (g.cols() != p || a_eq.cols() != p || g.rows() != h.size() || a_eq.rows() != b_eq.size()) {
        throw DimensionMismatch("linear program has inconsistent dimensions");
    }
    if (!c.allFinite() || !g.allFinite() || !h.allFinite() || !a_eq.allFinite() || !b_eq.allFinite()) {
        throw InvalidArgument("linear program has non-finite entries");
    }
}

const char* to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal:
            return "optimal";
        case LpStatus::Infeasible:
            return "infeasible";
        case LpStatus::Unbounded:
            return "unbounded";
        case LpStatus::NumericalFailure:
            return "numerical_failure";
    }
    return "unknown";
}

double max_violation(const LinearProgram& lp, const Vector& v) {
    double worst = 0.0;
    if (lp.g.rows() > 0) {
        worst = std::max(worst, (lp.g * v - lp.h).maxCoeff());
    }
    if (lp.a_eq.rows() > 0) {
        worst = std::max(worst, (lp.a_eq * v - lp.b_eq).cwiseAbs().maxCoeff());
    }
    return worst;
}

bool verify_farkas(const LinearProgram& lp, const Vector& u_in, double tol) {
    const auto q = lp.g.rows();
    const auto e = lp.a_eq.rows();
    if (u_in.size() != q + e || !u_in.allFinite()) {
        return false;
    }
    const double scale = u_in.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) {
        return false;
    }
    Vector u = u_in / scale;
    if (q > 0 && u.head(q).minCoeff() < -tol) {
        return false;
    }
    if (q > 0) {
        u.head(q) = u.head(q).cwiseMax(0.0);
    }
    Vector combo = Vector::Zero(lp.vars());
    double gap = 0.0;
    if (q > 0) {
        combo += lp.g.transpose() * u.head(q);
        gap += lp.h.dot(u.head(q));
    }
    if (e > 0) {
        combo += lp.a_eq.transpose() * u.tail(e);
        gap += lp.b_eq.dot(u.tail(e));
    }
    const double residual = combo.size() > 0 ? combo.cwiseAbs().maxCoeff() : 0.0;
    return residual <= tol && gap < -std::max(tol, 10.0 * residual);
}

namespace {

struct ScaledProgram {
    LinearProgram lp;
    // Original row index of each kept row and the factor it was divided by.
    std::vector<Eigen::Index> ineq_rows;
    std::vector<Eigen::Index> eq_rows;
    Vector ineq_scale;
    Vector eq_scale;
    double objective_scale = 1.0;
};

LpSolution trivially_infeasible(const LinearProgram& lp, Eigen::Index row, double sign) {
    LpSolution sol;
    sol.status = LpStatus::Infeasible;
    Vector u = Vector::Zero(lp.g.rows() + lp.a_eq.rows());
    u(row) = sign;
    sol.certificate = u;
    return sol;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts) {
    lp.validate();
    const auto p = lp.vars();
    const auto q = lp.g.rows();
    const auto e = lp.a_eq.rows();
    const double zero_tol = 1e-12;

    ScaledProgram s;
    std::vector<Eigen::Index> keep_ineq;
    std::vector<Eigen::Index> keep_eq;
    for (Eigen::Index i = 0; i < q; ++i) {
        const double norm = lp.g.row(i).cwiseAbs().maxCoeff();
        if (norm <= zero_tol) {
            if (lp.h(i) < -opts.feasibility_tol) {
                return trivially_infeasible(lp, i, 1.0);
            }
            continue;
        }
        keep_ineq.push_back(i);
    }
    for (Eigen::Index i = 0; i < e; ++i) {
        const double norm = lp.a_eq.row(i).cwiseAbs().maxCoeff();
        if (norm <= zero_tol) {
            if (std::abs(lp.b_eq(i)) > opts.feasibility_tol) {
                return trivially_infeasible(lp, q + i, lp.b_eq(i) > 0 ? -1.0 : 1.0);
            }
            continue;
        }
        keep_eq.push_back(i);
    }

    s.lp = LinearProgram(p);
    s.lp.g.resize(static_cast<Eigen::Index>(keep_ineq.size()), p);
    s.lp.h.resize(static_cast<Eigen::Index>(keep_ineq.size()));
    s.ineq_scale.resize(static_cast<Eigen::Index>(keep_ineq.size()));
    for (std::size_t r = 0; r < keep_ineq.size(); ++r) {
        const auto i = keep_ineq[r];
        const auto ri = static_cast<Eigen::Index>(r);
        const double norm = lp.g.row(i).cwiseAbs().maxCoeff();
        s.lp.g.row(ri) = lp.g.row(i) / norm;
        s.lp.h(ri) = lp.h(i) / norm;
        s.ineq_scale(ri) = norm;
    }
    s.lp.a_eq.resize(static_cast<Eigen::Index>(keep_eq.size()), p);
    s.lp.b_eq.resize(static_cast<Eigen::Index>(keep_eq.size()));
    s.eq_scale.resize(static_cast<Eigen::Index>(keep_eq.size()));
    for (std::size_t r = 0; r < keep_eq.size(); ++r) {
        const auto i = keep_eq[r];
        const auto ri = static_cast<Eigen::Index>(r);
        const double norm = lp.a_eq.row(i).cwiseAbs().maxCoeff();
        s.lp.a_eq.row(ri) = lp.a_eq.row(i) / norm;
        s.lp.b_eq(ri) = lp.b_eq(i) / norm;
        s.eq_scale(ri) = norm;
    }
    const double c_norm = p > 0 ? lp.c.cwiseAbs().maxCoeff() : 0.0;
    s.objective_scale = c_norm > 0.0 ? c_norm : 1.0;
    s.lp.c = lp.c / s.objective_scale;

    auto run = [&](LpMethod method) {
        return method == LpMethod::InteriorPoint ? solve_interior_point(s.lp, opts) : solve_simplex(s.lp, opts);
    };

    LpSolution sol = run(opts.method == LpMethod::InteriorPoint ? LpMethod::InteriorPoint : LpMethod::Simplex);
    if (sol.optimal() && max_violation(s.lp, sol.v) > opts.feasibility_tol) {
        log::debug("LP solution violates scaled constraints; discarding");
        sol.status = LpStatus::NumericalFailure;
    }
    if (sol.status == LpStatus::NumericalFailure && opts.method == LpMethod::Auto) {
        log::debug("simplex failed numerically; retrying with interior point");
        sol = run(LpMethod::InteriorPoint);
        if (sol.optimal() && max_violation(s.lp, sol.v) > opts.feasibility_tol) {
            sol.status = LpStatus::NumericalFailure;
        }
    }

    if (sol.optimal()) {
        sol.objective = lp.c.dot(sol.v);
        sol.certificate.reset();
    } else {
        sol.v.resize(0);
    }
    if (sol.status == LpStatus::Infeasible) {
        if (!sol.certificate) {
            sol.status = LpStatus::NumericalFailure;
            return sol;
        }
        // Map multipliers of the scaled rows back onto the original rows.
        const Vector& us = *sol.certificate;
        Vector u = Vector::Zero(q + e);
        for (std::size_t r = 0; r < keep_ineq.size(); ++r) {
            u(keep_ineq[r]) = us(static_cast<Eigen::Index>(r)) / s.ineq_scale(static_cast<Eigen::Index>(r));
        }
        for (std::size_t r = 0; r < keep_eq.size(); ++r) {
            const auto ri = static_cast<Eigen::Index>(keep_ineq.size() + r);
            u(q + keep_eq[r]) = us(ri) / s.eq_scale(static_cast<Eigen::Index>(r));
        }
        sol.certificate = u;
    }
    return sol;
}

L1Epigraph l1_epigraph(Eigen::Index p) { return l1_epigraph(Vector::Ones(p)); }

L1Epigraph l1_epigraph(const Vector& weights) {
    const auto p = weights.size();
    if (p < 1) {
        throw InvalidArgument("L1 epigraph needs at least one variable");
    }
    if ((weights.array() < 0.0).any()) {
        throw InvalidArgument("L1 weights must be non-negative");
    }
    L1Epigraph out;
    out.objective = Vector::Zero(2 * p);
    out.objective.tail(p) = weights;
    out.inequalities = Matrix::Zero(2 * p, 2 * p);
    const Matrix eye = Matrix::Identity(p, p);
    out.inequalities.topLeftCorner(p, p) = eye;
    out.inequalities.topRightCorner(p, p) = -eye;
    out.inequalities.bottomLeftCorner(p, p) = -eye;
    out.inequalities.bottomRightCorner(p, p) = -eye;
    out.rhs = Vector::Zero(2 * p);
    return out;
}

std::string to_text(const LinearProgram& lp) {
    std::ostringstream out;
    out << lp.vars() << ' ' << lp.inequalities() << ' ' << lp.equalities() << '\n';
    auto row = [&](const auto& coeffs, std::optional<double> rhs) {
        for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
            out << (j ? " " : "") << format_number(coeffs(j));
        }
        if (rhs) {
            out << ' ' << format_number(*rhs);
        }
        out << '\n';
    };
    row(lp.c, std::nullopt);
    for (Eigen::Index i = 0; i < lp.g.rows(); ++i) {
        row(lp.g.row(i), lp.h(i));
    }
    for (Eigen::Index i = 0; i < lp.a_eq.rows(); ++i) {
        row(lp.a_eq.row(i), lp.b_eq(i));
    }
    return out.str();
}

LinearProgram lp_from_text(const std::string& text) {
    std::istringstream in(text);
    Eigen::Index p = 0;
    Eigen::Index q = 0;
    Eigen::Index e = 0;
    if (!(in >> p >> q >> e) || p < 0 || q < 0 || e < 0) {
        throw MalformedInput("LP dump header must be 'p q e'", 1);
    }
    LinearProgram lp(p);
    lp.g.resize(q, p);
    lp.h.resize(q);
    lp.a_eq.resize(e, p);
    lp.b_eq.resize(e);
    auto read = [&](double& v, std::size_t line) {
        if (!(in >> v)) {
            throw MalformedInput("LP dump truncated", line);
        }
    };
    for (Eigen::Index j = 0; j < p; ++j) {
        read(lp.c(j), 2);
    }
    for (Eigen::Index i = 0; i < q; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            read(lp.g(i, j), static_cast<std::size_t>(3 + i));
        }
        read(lp.h(i), static_cast<std::size_t>(3 + i));
    }
    for (Eigen::Index i = 0; i < e; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            read(lp.a_eq(i, j), static_cast<std::size_t>(3 + q + i));
        }
        read(lp.b_eq(i), static_cast<std::size_t>(3 + q + i));
    }
    return lp;
}

void dump_lp(const LinearProgram& lp, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << to_text(lp);
}

}  // namespace cfx

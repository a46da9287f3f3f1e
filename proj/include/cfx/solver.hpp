#pragma once

#include "cfx/common.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace cfx {

/// minimize c'v  subject to  G v <= h,  A_eq v = b_eq,  v free.
struct LinearProgram {
    Vector c;
    Matrix g;
    Vector h;
    Matrix a_eq;
    Vector b_eq;

    LinearProgram() = default;
    /// Empty program over `vars` variables with zero objective.
    explicit LinearProgram(Eigen::Index vars);

    Eigen::Index vars() const { return c.size(); }
    Eigen::Index inequalities() const { return g.rows(); }
    Eigen::Index equalities() const { return a_eq.rows(); }

    void add_inequalities(const Matrix& rows, const Vector& rhs);
    void add_equalities(const Matrix& rows, const Vector& rhs);

    /// Throws DimensionMismatch / InvalidArgument on malformed programs.
    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(LpStatus status);

struct LpSolution {
    LpStatus status = LpStatus::NumericalFailure;
    Vector v;  // set iff Optimal
    double objective = 0.0;
    /// Verified Farkas multipliers (u_ineq >= 0, u_eq) when Infeasible.
    std::optional<Vector> certificate;
    std::size_t iterations = 0;

    bool optimal() const { return status == LpStatus::Optimal; }
};

enum class LpMethod {
    /// Dense two-phase simplex; interior point when it fails numerically.
    Auto,
    Simplex,
    InteriorPoint,
};

struct LpOptions {
    LpMethod method = LpMethod::Auto;
    double tol = 1e-9;
    /// Largest primal violation (after row scaling) accepted for Optimal.
    double feasibility_tol = 1e-6;
};

/// Solves the program after equilibrating every row to unit infinity norm.
/// An Optimal result is re-checked for primal feasibility on the scaled
/// rows; an Infeasible result carries a Farkas certificate that has been
/// verified with a positive margin.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts = {});

LpSolution solve_simplex(const LinearProgram& lp, const LpOptions& opts);
LpSolution solve_interior_point(const LinearProgram& lp, const LpOptions& opts);

/// Checks u = (u_ineq, u_eq): u_ineq >= 0, G'u_ineq + A'u_eq = 0 and
/// h'u_ineq + b'u_eq < 0, each to `tol`, with the last needing margin > tol.
bool verify_farkas(const LinearProgram& lp, const Vector& u, double tol);

/// Largest violation of G v <= h and |A v - b| = 0.
double max_violation(const LinearProgram& lp, const Vector& v);

/// Standard L1 split over p action variables followed by p auxiliaries t:
/// objective sum(w_i t_i), rows  delta - t <= 0  and  -delta - t <= 0.
struct L1Epigraph {
    Vector objective;      // length 2p
    Matrix inequalities;   // 2p x 2p
    Vector rhs;            // 2p zeros
};
L1Epigraph l1_epigraph(Eigen::Index p);
L1Epigraph l1_epigraph(const Vector& weights);

/// Plain-text dump: "p q e" on the first line, then the objective row, the
/// inequality rows (coefficients then rhs) and the equality rows, each
/// space-separated.
std::string to_text(const LinearProgram& lp);
LinearProgram lp_from_text(const std::string& text);
void dump_lp(const LinearProgram& lp, const std::filesystem::path& path);

}  // namespace cfx

#include "cfx/solver.hpp"

#include <cmath>
#include <limits>

namespace cfx {

namespace {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPivotTol = 1e-9;

// Dense tableau over the standard form  [A | I_art] x = rhs,  x >= 0, with
// the structural columns v+ (p), v- (p) and one slack per inequality row.
class SimplexTableau {
  public:
    SimplexTableau(const LinearProgram& lp, double tol) : tol_(tol) {
        p_ = lp.vars();
        q_ = lp.g.rows();
        rows_ = q_ + lp.a_eq.rows();
        structural_ = 2 * p_ + q_;

        sign_.resize(rows_);
        std::vector<bool> needs_artificial(static_cast<std::size_t>(rows_), false);
        for (Eigen::Index i = 0; i < rows_; ++i) {
            const double rhs = i < q_ ? lp.h(i) : lp.b_eq(i - q_);
            sign_(i) = rhs < 0.0 ? -1.0 : 1.0;
            needs_artificial[static_cast<std::size_t>(i)] = i >= q_ || sign_(i) < 0.0;
        }
        artificial_count_ = 0;
        for (bool need : needs_artificial) {
            artificial_count_ += need ? 1 : 0;
        }
        cols_ = structural_ + artificial_count_;

        standard_ = Matrix::Zero(rows_, cols_);
        rhs_.resize(rows_);
        basis_.resize(static_cast<std::size_t>(rows_));
        Eigen::Index next_artificial = structural_;
        for (Eigen::Index i = 0; i < rows_; ++i) {
            const Eigen::RowVectorXd coeffs = i < q_ ? Eigen::RowVectorXd(lp.g.row(i)) : Eigen::RowVectorXd(lp.a_eq.row(i - q_));
            const double rhs = i < q_ ? lp.h(i) : lp.b_eq(i - q_);
            standard_.block(i, 0, 1, p_) = sign_(i) * coeffs;
            standard_.block(i, p_, 1, p_) = -sign_(i) * coeffs;
            if (i < q_) {
                standard_(i, 2 * p_ + i) = sign_(i);
            }
            rhs_(i) = sign_(i) * rhs;
            if (needs_artificial[static_cast<std::size_t>(i)]) {
                standard_(i, next_artificial) = 1.0;
                basis_[static_cast<std::size_t>(i)] = next_artificial++;
            } else {
                basis_[static_cast<std::size_t>(i)] = 2 * p_ + i;
            }
        }
        table_.resize(rows_, cols_ + 1);
        table_.leftCols(cols_) = standard_;
        table_.col(cols_) = rhs_;
    }

    // Phase I: minimize the sum of artificials. Returns false when the
    // iteration limit is hit.
    bool phase_one(std::size_t& iterations) {
        Vector cost = Vector::Zero(cols_);
        cost.tail(artificial_count_).setOnes();
        set_costs(cost);
        return iterate(false, iterations) == Outcome::Optimal;
    }

    double phase_one_objective() const {
        double total = 0.0;
        for (Eigen::Index i = 0; i < rows_; ++i) {
            if (is_artificial(basis_[static_cast<std::size_t>(i)])) {
                total += table_(i, cols_);
            }
        }
        return total;
    }

    // Multipliers of the current basis for `cost`, in original row
    // orientation: y solves B'y = c_B, and the row sign flips are undone.
    Vector duals(const Vector& cost) const {
        Matrix basis_matrix(rows_, rows_);
        Vector basis_cost(rows_);
        for (Eigen::Index i = 0; i < rows_; ++i) {
            const auto col = basis_[static_cast<std::size_t>(i)];
            basis_matrix.col(i) = standard_.col(col);
            basis_cost(i) = cost(col);
        }
        Vector y = basis_matrix.transpose().partialPivLu().solve(basis_cost);
        return y.cwiseProduct(sign_);
    }

    Vector phase_one_cost() const {
        Vector cost = Vector::Zero(cols_);
        cost.tail(artificial_count_).setOnes();
        return cost;
    }

    // Pivots zero-valued artificials out of the basis where a structural
    // column allows it; rows where none does are redundant and keep theirs.
    void drive_out_artificials() {
        for (Eigen::Index i = 0; i < rows_; ++i) {
            if (!is_artificial(basis_[static_cast<std::size_t>(i)])) {
                continue;
            }
            Eigen::Index best = -1;
            double best_abs = kPivotTol;
            for (Eigen::Index j = 0; j < structural_; ++j) {
                if (std::abs(table_(i, j)) > best_abs) {
                    best_abs = std::abs(table_(i, j));
                    best = j;
                }
            }
            if (best >= 0) {
                pivot(i, best);
            }
        }
    }

    enum class Outcome { Optimal, Unbounded, IterationLimit };

    Outcome phase_two(const Vector& c, std::size_t& iterations) {
        Vector cost = Vector::Zero(cols_);
        cost.head(p_) = c;
        cost.segment(p_, p_) = -c;
        set_costs(cost);
        return iterate(true, iterations);
    }

    Vector primal() const {
        // Recompute the basic values from the original data for accuracy.
        Matrix basis_matrix(rows_, rows_);
        for (Eigen::Index i = 0; i < rows_; ++i) {
            basis_matrix.col(i) = standard_.col(basis_[static_cast<std::size_t>(i)]);
        }
        Vector values = table_.col(cols_);
        if (rows_ > 0) {
            Eigen::PartialPivLU<Matrix> lu(basis_matrix);
            const Vector refined = lu.solve(rhs_);
            if (refined.allFinite() && refined.minCoeff() >= -1e-9) {
                values = refined.cwiseMax(0.0);
            }
        }
        Vector x = Vector::Zero(cols_);
        for (Eigen::Index i = 0; i < rows_; ++i) {
            x(basis_[static_cast<std::size_t>(i)]) = values(i);
        }
        return x.head(p_) - x.segment(p_, p_);
    }

  private:
    bool is_artificial(Eigen::Index col) const { return col >= structural_; }

    void set_costs(const Vector& cost) {
        reduced_ = Eigen::RowVectorXd::Zero(cols_ + 1);
        reduced_.head(cols_) = cost.transpose();
        for (Eigen::Index i = 0; i < rows_; ++i) {
            const double cb = cost(basis_[static_cast<std::size_t>(i)]);
            if (cb != 0.0) {
                reduced_ -= cb * table_.row(i);
            }
        }
    }

    void pivot(Eigen::Index row, Eigen::Index col) {
        const Eigen::RowVectorXd pivot_row = table_.row(row) / table_(row, col);
        const Vector column = table_.col(col);
        table_.noalias() -= column * pivot_row;
        table_.row(row) = pivot_row;
        table_.col(col).setZero();
        table_(row, col) = 1.0;
        reduced_ -= reduced_(col) * pivot_row;
        reduced_(col) = 0.0;
        basis_[static_cast<std::size_t>(row)] = col;
    }

    Outcome iterate(bool phase_two, std::size_t& iterations) {
        const std::size_t limit = 50 * static_cast<std::size_t>(rows_ + cols_) + 1000;
        const Eigen::Index eligible = phase_two ? structural_ : cols_;
        std::size_t stalled = 0;
        double last_objective = -reduced_(cols_);
        while (true) {
            if (iterations >= limit) {
                return Outcome::IterationLimit;
            }
            // Dantzig pricing; Bland's rule while the objective stalls.
            const bool bland = stalled > 50;
            Eigen::Index enter = -1;
            double best = -tol_;
            for (Eigen::Index j = 0; j < eligible; ++j) {
                if (reduced_(j) < best) {
                    enter = j;
                    if (bland) {
                        break;
                    }
                    best = reduced_(j);
                }
            }
            if (enter < 0) {
                return Outcome::Optimal;
            }
            Eigen::Index leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < rows_; ++i) {
                const double a = table_(i, enter);
                if (a <= kPivotTol) {
                    continue;
                }
                const double ratio = std::max(table_(i, cols_), 0.0) / a;
                if (leave < 0 || ratio < best_ratio - 1e-12) {
                    leave = i;
                    best_ratio = ratio;
                } else if (ratio <= best_ratio + 1e-12) {
                    const bool prefer = bland ? basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]
                                              : a > table_(leave, enter);
                    if (prefer) {
                        leave = i;
                        best_ratio = std::min(best_ratio, ratio);
                    }
                }
            }
            if (leave < 0) {
                return Outcome::Unbounded;
            }
            pivot(leave, enter);
            ++iterations;
            const double objective = -reduced_(cols_);
            if (objective < last_objective - 1e-12 * (1.0 + std::abs(last_objective))) {
                stalled = 0;
                last_objective = objective;
            } else {
                ++stalled;
            }
        }
    }

    double tol_;
    Eigen::Index p_ = 0;
    Eigen::Index q_ = 0;
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    Eigen::Index structural_ = 0;
    Eigen::Index artificial_count_ = 0;
    Vector sign_;
    Matrix standard_;
    Vector rhs_;
    Tableau table_;
    Eigen::RowVectorXd reduced_;
    std::vector<Eigen::Index> basis_;
};

}  // namespace

LpSolution solve_simplex(const LinearProgram& lp, const LpOptions& opts) {
    LpSolution sol;
    SimplexTableau tableau(lp, opts.tol);

    const double rhs_scale = 1.0 + std::max(lp.h.size() ? lp.h.cwiseAbs().maxCoeff() : 0.0,
                                            lp.b_eq.size() ? lp.b_eq.cwiseAbs().maxCoeff() : 0.0);
    if (!tableau.phase_one(sol.iterations)) {
        sol.status = LpStatus::NumericalFailure;
        return sol;
    }
    if (tableau.phase_one_objective() > 1e-9 * rhs_scale) {
        // Phase I duals y satisfy A'y <= 0 and rhs'y > 0; u = -y certifies
        // infeasibility of the original rows.
        const Vector u = -tableau.duals(tableau.phase_one_cost());
        if (verify_farkas(lp, u, 1e-7)) {
            sol.status = LpStatus::Infeasible;
            sol.certificate = u;
        } else {
            sol.status = LpStatus::NumericalFailure;
        }
        return sol;
    }
    tableau.drive_out_artificials();
    switch (tableau.phase_two(lp.c, sol.iterations)) {
        case SimplexTableau::Outcome::Optimal:
            sol.status = LpStatus::Optimal;
            sol.v = tableau.primal();
            sol.objective = lp.c.dot(sol.v);
            break;
        case SimplexTableau::Outcome::Unbounded:
            sol.status = LpStatus::Unbounded;
            break;
        case SimplexTableau::Outcome::IterationLimit:
            sol.status = LpStatus::NumericalFailure;
            break;
    }
    return sol;
}

}  // namespace cfx

#include "cfx/solver.hpp"

#include <cmath>
#include <limits>

namespace cfx {

namespace {

// Largest step in (0, 1] keeping x + step * dx > 0.
double max_step(const Vector& x, const Vector& dx) {
    double step = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (dx(i) < 0.0) {
            step = std::min(step, -x(i) / dx(i));
        }
    }
    return step;
}

}  // namespace

// Mehrotra predictor-corrector on the inequality form
//   min c'v  s.t.  G v + s = h,  A v = b,  s >= 0
// with multipliers z >= 0 (inequalities) and y (equalities). Each Newton
// system is reduced to the saddle-point system
//   [G' D G  A'] [dv]   [r1]
//   [A       0 ] [dy] = [r2],   D = Z S^-1.
LpSolution solve_interior_point(const LinearProgram& lp, const LpOptions& opts) {
    const auto p = lp.vars();
    const auto q = lp.g.rows();
    const auto e = lp.a_eq.rows();
    LpSolution sol;

    Vector v = Vector::Zero(p);
    Vector s = (lp.h - lp.g * v).cwiseMax(1.0);
    Vector z = Vector::Ones(q);
    Vector y = Vector::Zero(e);

    const double scale_c = 1.0 + (p ? lp.c.cwiseAbs().maxCoeff() : 0.0);
    const double scale_b = 1.0 + std::max(q ? lp.h.cwiseAbs().maxCoeff() : 0.0, e ? lp.b_eq.cwiseAbs().maxCoeff() : 0.0);
    const double tol = std::max(opts.tol, 1e-12);

    auto solve_newton = [&](const Vector& d, const Vector& r1, const Vector& r2, Vector& dv, Vector& dy) {
        Matrix kkt = Matrix::Zero(p + e, p + e);
        kkt.topLeftCorner(p, p) = lp.g.transpose() * d.asDiagonal() * lp.g;
        kkt.topLeftCorner(p, p).diagonal().array() += 1e-12;
        if (e > 0) {
            kkt.topRightCorner(p, e) = lp.a_eq.transpose();
            kkt.bottomLeftCorner(e, p) = lp.a_eq;
            kkt.bottomRightCorner(e, e).diagonal().array() -= 1e-12;
        }
        Vector rhs(p + e);
        rhs << r1, r2;
        const Vector sol_vec = kkt.fullPivLu().solve(rhs);
        dv = sol_vec.head(p);
        dy = sol_vec.tail(e);
        return sol_vec.allFinite();
    };

    for (std::size_t it = 0; it < 200; ++it) {
        sol.iterations = it;
        const Vector r_dual = lp.c + lp.g.transpose() * z + (e ? Vector(lp.a_eq.transpose() * y) : Vector::Zero(p));
        const Vector r_ineq = lp.g * v + s - lp.h;
        const Vector r_eq = e ? Vector(lp.a_eq * v - lp.b_eq) : Vector(0);
        const double mu = q ? s.dot(z) / static_cast<double>(q) : 0.0;

        const double primal_res = std::max(q ? r_ineq.cwiseAbs().maxCoeff() : 0.0, e ? r_eq.cwiseAbs().maxCoeff() : 0.0);
        const double dual_res = p ? r_dual.cwiseAbs().maxCoeff() : 0.0;
        const double objective = lp.c.dot(v);
        if (primal_res <= tol * scale_b && dual_res <= tol * scale_c && mu <= tol * (1.0 + std::abs(objective))) {
            sol.status = LpStatus::Optimal;
            sol.v = v;
            sol.objective = objective;
            return sol;
        }
        // Diverging multipliers with a negative dual gap indicate infeasibility.
        if (q + e > 0) {
            Vector u(q + e);
            u << z, y;
            if (u.cwiseAbs().maxCoeff() > 1e8 && verify_farkas(lp, u, 1e-7)) {
                sol.status = LpStatus::Infeasible;
                sol.certificate = u;
                return sol;
            }
        }

        const Vector d = z.cwiseQuotient(s);
        auto direction = [&](const Vector& r_comp, Vector& dv, Vector& ds, Vector& dz, Vector& dy) {
            // dz = S^-1 (-r_comp + Z r_ineq + Z G dv),  ds = -r_ineq - G dv
            const Vector tmp = (-r_comp + z.cwiseProduct(r_ineq)).cwiseQuotient(s);
            const Vector r1 = -r_dual - lp.g.transpose() * tmp;
            const Vector r2 = -r_eq;
            if (!solve_newton(d, r1, r2, dv, dy)) {
                return false;
            }
            ds = -r_ineq - lp.g * dv;
            dz = tmp + d.cwiseProduct(lp.g * dv);
            return true;
        };

        Vector dv_aff, ds_aff, dz_aff, dy_aff;
        if (!direction(s.cwiseProduct(z), dv_aff, ds_aff, dz_aff, dy_aff)) {
            break;
        }
        const double alpha_p = max_step(s, ds_aff);
        const double alpha_d = max_step(z, dz_aff);
        const double mu_aff =
            q ? (s + alpha_p * ds_aff).dot(z + alpha_d * dz_aff) / static_cast<double>(q) : 0.0;
        const double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3.0) : 0.0;

        const Vector r_comp =
            s.cwiseProduct(z) + ds_aff.cwiseProduct(dz_aff) - Vector::Constant(q, sigma * mu);
        Vector dv, ds, dz, dy;
        if (!direction(r_comp, dv, ds, dz, dy)) {
            break;
        }
        const double step_p = std::min(1.0, 0.99 * max_step(s, ds));
        const double step_d = std::min(1.0, 0.99 * max_step(z, dz));
        v += step_p * dv;
        s += step_p * ds;
        z += step_d * dz;
        y += step_d * dy;
        if (!v.allFinite() || !z.allFinite()) {
            break;
        }
    }
    sol.status = LpStatus::NumericalFailure;
    return sol;
}

}  // namespace cfx

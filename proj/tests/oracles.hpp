#pragma once

// Independent brute-force reference implementations used by the tests.

#include "cfx/common.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

using cfx::Matrix;
using cfx::Vector;

struct Stats {
    Vector mean;
    Vector var;
};

// Two-pass population mean and variance, one column at a time.
inline Stats two_pass(const Matrix& x) {
    Stats s{Vector::Zero(x.cols()), Vector::Zero(x.cols())};
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            sum += x(i, j);
        }
        const double mean = sum / static_cast<double>(x.rows());
        double ss = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            ss += (x(i, j) - mean) * (x(i, j) - mean);
        }
        s.mean(j) = mean;
        s.var(j) = ss / static_cast<double>(x.rows());
    }
    return s;
}

// E[(x - mu)(x - mu)'] written as explicit loops.
inline Matrix covariance_loops(const Matrix& x) {
    const auto n = x.rows();
    const auto d = x.cols();
    std::vector<double> mu(d, 0.0);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index j = 0; j < d; ++j) {
            mu[j] += x(k, j) / static_cast<double>(n);
        }
    }
    Matrix out(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < d; ++b) {
            double acc = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                acc += (x(k, a) - mu[a]) * (x(k, b) - mu[b]);
            }
            out(a, b) = acc / static_cast<double>(n);
        }
    }
    return out;
}

// Minimizes a convex function of a few variables: coarse grid, then a
// compass search with a shrinking step.
inline Vector pattern_search(const std::function<double(const Vector&)>& f, Vector lo, Vector hi, int grid,
                             double final_step = 1e-10) {
    const auto n = lo.size();
    Vector best = lo;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<int> idx(n, 0);
    while (true) {
        Vector p(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            p(i) = lo(i) + (hi(i) - lo(i)) * idx[i] / static_cast<double>(grid);
        }
        const double v = f(p);
        if (v < best_val) {
            best_val = v;
            best = p;
        }
        Eigen::Index k = 0;
        while (k < n && ++idx[k] > grid) {
            idx[k] = 0;
            ++k;
        }
        if (k == n) {
            break;
        }
    }
    double step = (hi - lo).maxCoeff() / grid;
    while (step > final_step) {
        bool moved = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (double sgn : {1.0, -1.0}) {
                Vector p = best;
                p(i) += sgn * step;
                const double v = f(p);
                if (v < best_val) {
                    best_val = v;
                    best = p;
                    moved = true;
                }
            }
        }
        if (!moved) {
            step /= 2.0;
        }
    }
    return best;
}

struct VertexResult {
    bool feasible = false;
    double objective = std::numeric_limits<double>::infinity();
    Vector v;
};

// Minimum of c'v over the basic feasible points of {G v <= h, A v = b}:
// every choice of p - e inequality rows made active together with the
// equalities. Exact for bounded programs whose constraint matrix has full
// column rank.
inline VertexResult vertex_enumeration(const Vector& c, const Matrix& g, const Vector& h, const Matrix& a,
                                       const Vector& b, double tol = 1e-9) {
    const auto p = c.size();
    const auto q = g.rows();
    const auto e = a.rows();
    VertexResult out;
    const auto need = p - e;
    if (need < 0 || need > q) {
        return out;
    }
    std::vector<bool> pick(static_cast<std::size_t>(q), false);
    std::fill(pick.begin(), pick.begin() + need, true);
    do {
        Matrix m(p, p);
        Vector r(p);
        Eigen::Index row = 0;
        for (Eigen::Index i = 0; i < q; ++i) {
            if (pick[static_cast<std::size_t>(i)]) {
                m.row(row) = g.row(i);
                r(row++) = h(i);
            }
        }
        for (Eigen::Index i = 0; i < e; ++i) {
            m.row(row) = a.row(i);
            r(row++) = b(i);
        }
        Eigen::FullPivLU<Matrix> lu(m);
        if (lu.rank() < p) {
            continue;
        }
        const Vector v = lu.solve(r);
        const bool ok = (q == 0 || ((g * v - h).array() <= tol).all()) &&
                        (e == 0 || ((a * v - b).cwiseAbs().array() <= tol).all());
        if (ok) {
            out.feasible = true;
            const double obj = c.dot(v);
            if (obj < out.objective) {
                out.objective = obj;
                out.v = v;
            }
        }
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return out;
}

// min |delta|_1 over {A delta <= b} for p <= 2: dense grid on [-r, r]^p,
// then a local grid at 1e-4 spacing around the best point.
inline double grid_l1(const Matrix& a, const Vector& b, double r, double coarse = 0.01) {
    const auto p = a.cols();
    auto feasible = [&](const Vector& d) { return ((a * d - b).array() <= 0.0).all(); };
    auto scan = [&](const Vector& center, double half, double step, Vector& best, double& best_val) {
        const int n = static_cast<int>(std::round(2.0 * half / step));
        Vector d(p);
        if (p == 1) {
            for (int i = 0; i <= n; ++i) {
                d(0) = center(0) - half + i * step;
                if (feasible(d) && d.cwiseAbs().sum() < best_val) {
                    best_val = d.cwiseAbs().sum();
                    best = d;
                }
            }
            return;
        }
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j <= n; ++j) {
                d(0) = center(0) - half + i * step;
                d(1) = center(1) - half + j * step;
                if (feasible(d) && d.cwiseAbs().sum() < best_val) {
                    best_val = d.cwiseAbs().sum();
                    best = d;
                }
            }
        }
    };
    Vector best = Vector::Zero(p);
    double best_val = std::numeric_limits<double>::infinity();
    scan(Vector::Zero(p), r, coarse, best, best_val);
    if (!std::isfinite(best_val)) {
        return best_val;
    }
    const Vector center = best;
    scan(center, 2.0 * coarse, 1e-4, best, best_val);
    return best_val;
}

struct RandomProgram {
    Vector c;
    Matrix g;
    Vector h;
    Matrix a;
    Vector b;
};

// Random program with p <= 4 variables and q <= 8 inequality rows, at most
// one equality. The objective is a nonnegative combination of the rows, so
// it is bounded below on the feasible set. With `feasible` a random interior
// point is planted; otherwise h is drawn independently and may be infeasible.
inline RandomProgram random_program(cfx::Rng& rng, bool feasible) {
    RandomProgram lp;
    const auto p = static_cast<Eigen::Index>(1 + rng.below(4));
    const auto e = static_cast<Eigen::Index>(p > 1 ? rng.below(2) : 0);
    const auto q = static_cast<Eigen::Index>(p + rng.below(static_cast<std::size_t>(9 - p)));
    lp.g.resize(q, p);
    for (Eigen::Index i = 0; i < lp.g.size(); ++i) {
        lp.g(i) = std::round(4.0 * rng.normal()) / 2.0;
    }
    lp.a.resize(e, p);
    for (Eigen::Index i = 0; i < lp.a.size(); ++i) {
        lp.a(i) = std::round(4.0 * rng.normal()) / 2.0;
    }
    Vector x0(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        x0(i) = 2.0 * rng.normal();
    }
    lp.h.resize(q);
    for (Eigen::Index i = 0; i < q; ++i) {
        lp.h(i) = feasible ? lp.g.row(i).dot(x0) + 0.1 + 3.0 * rng.uniform() : 3.0 * rng.normal();
    }
    lp.b = lp.a * x0;
    Vector y(q);
    for (Eigen::Index i = 0; i < q; ++i) {
        y(i) = rng.uniform();
    }
    Vector lam(e);
    for (Eigen::Index i = 0; i < e; ++i) {
        lam(i) = rng.normal();
    }
    lp.c = -(lp.g.transpose() * y) + lp.a.transpose() * lam;
    return lp;
}

}  // namespace oracle

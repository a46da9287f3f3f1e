#include "cfx/engine.hpp"

#include <cmath>
#include <limits>

namespace cfx {

const char* to_string(HullMode mode) { return mode == HullMode::HullExact ? "exact" : "lemma"; }

const char* to_string(ActionMapping::Kind kind) {
    switch (kind) {
        case ActionMapping::Kind::Identity:
            return "identity";
        case ActionMapping::Kind::Correlation:
            return "correlation";
        case ActionMapping::Kind::Codebook:
            return "codebook";
    }
    return "unknown";
}

const char* to_string(CfStatus status) { return status == CfStatus::Found ? "found" : "none_feasible"; }

ActionMapping ActionMapping::identity(const Vector& x_orig) {
    ActionMapping m;
    m.kind_ = Kind::Identity;
    m.matrix_ = Matrix::Identity(x_orig.size(), x_orig.size());
    m.offset_ = x_orig;
    return m;
}

ActionMapping ActionMapping::correlation(const Vector& x_orig, const Matrix& sigma_tilde) {
    if (sigma_tilde.rows() != x_orig.size() || sigma_tilde.cols() != x_orig.size()) {
        throw DimensionMismatch("correlation matrix must be " + std::to_string(x_orig.size()) + " x " +
                                std::to_string(x_orig.size()));
    }
    ActionMapping m;
    m.kind_ = Kind::Correlation;
    m.matrix_ = sigma_tilde;
    m.offset_ = x_orig;
    return m;
}

ActionMapping ActionMapping::codebook(const Codebook& cb, const Vector& z0, HullMode mode) {
    if (static_cast<std::size_t>(z0.size()) != cb.atoms()) {
        throw DimensionMismatch("code length differs from the atom count");
    }
    ActionMapping m;
    m.kind_ = Kind::Codebook;
    m.matrix_ = cb.primitives;
    m.offset_ = cb.primitives * z0 + cb.base;
    m.z0_ = z0;
    m.mode_ = mode;
    return m;
}

Vector ActionMapping::apply(const Vector& delta) const {
    if (delta.size() != matrix_.cols()) {
        throw DimensionMismatch("action vector has length " + std::to_string(delta.size()) + ", mapping expects " +
                                std::to_string(matrix_.cols()));
    }
    return matrix_ * delta + offset_;
}

namespace {

double weighted_l1(const Vector& delta, const Vector& weights) {
    return weights.size() == 0 ? delta.cwiseAbs().sum() : delta.cwiseAbs().dot(weights);
}

void check_request(const Classifier& model, const Vector& x_orig, int y_cf) {
    if (static_cast<std::size_t>(x_orig.size()) != dim(model)) {
        throw DimensionMismatch("sample has " + std::to_string(x_orig.size()) + " features, model expects " +
                                std::to_string(dim(model)));
    }
    if (y_cf < 0 || y_cf >= n_classes(model)) {
        throw InvalidArgument("invalid target label " + std::to_string(y_cf));
    }
    if (predict(model, x_orig) == y_cf) {
        throw InvalidArgument("sample is already predicted as the target label " + std::to_string(y_cf));
    }
}

// Keeps the cheapest valid branch; ties go to the lowest branch index. With a
// zero margin the region is closed and its optimum sits on the decision
// boundary, where the tie rule may pick another class; membership of the
// closed set then stands in for the prediction check.
void consider(CounterfactualResult& best, const Classifier& model, int y_cf, const AffineConstraintSet& set,
              double margin, Vector delta, Vector x_cf, double objective, int branch) {
    const bool reached = predict(model, x_cf) == y_cf || (margin <= 0.0 && set.contains(x_cf, 1e-9));
    if (!reached) {
        log::warn("branch " + std::to_string(branch) + " solution does not reach the target class; discarded");
        return;
    }
    if (best.found() && !(objective < best.objective)) {
        return;
    }
    best.status = CfStatus::Found;
    best.delta = std::move(delta);
    best.x_cf = std::move(x_cf);
    best.objective = objective;
    best.branch = branch;
}

}  // namespace

CounterfactualResult baseline_counterfactual(const Classifier& model, const Vector& x_orig, int y_cf,
                                             const EngineOptions& opts) {
    check_request(model, x_orig, y_cf);
    const auto d = x_orig.size();
    const L1Epigraph l1 = l1_epigraph(d);
    CounterfactualResult best;
    const auto sets = target_constraints(model, y_cf, opts.margin);
    for (std::size_t k = 0; k < sets.size(); ++k) {
        // Variables (x, t):  |x - x_orig| <= t,  A x <= b.
        LinearProgram lp(2 * d);
        lp.c = l1.objective;
        Vector rhs(2 * d);
        rhs << x_orig, -x_orig;
        lp.add_inequalities(l1.inequalities, rhs);
        Matrix region = Matrix::Zero(sets[k].a.rows(), 2 * d);
        region.leftCols(d) = sets[k].a;
        lp.add_inequalities(region, sets[k].b);
        if (opts.sink) {
            opts.sink(lp, static_cast<int>(k));
        }
        const LpSolution sol = solve_lp(lp, opts.lp);
        if (!sol.optimal()) {
            continue;
        }
        Vector delta = sol.v.head(d) - x_orig;
        Vector x_cf = x_orig + delta;
        const double objective = delta.cwiseAbs().sum();
        consider(best, model, y_cf, sets[k], opts.margin, std::move(delta), std::move(x_cf), objective,
                 static_cast<int>(k));
    }
    return best;
}

CounterfactualResult compute_counterfactual(const Classifier& model, const CounterfactualRequest& req,
                                            const EngineOptions& opts) {
    check_request(model, req.x_orig, req.y_cf);
    const ActionMapping& map = req.mapping;
    if (static_cast<std::size_t>(map.matrix().rows()) != dim(model)) {
        throw DimensionMismatch("action mapping output dimension differs from the model input dimension");
    }
    const auto q = map.action_dim();
    const Vector weights = req.weights.size() == 0 ? Vector::Ones(q) : req.weights;
    if (weights.size() != q) {
        throw DimensionMismatch("regularizer weights differ in length from the action vector");
    }
    const L1Epigraph l1 = l1_epigraph(weights);

    CounterfactualResult best;
    const auto sets = target_constraints(model, req.y_cf, opts.margin);
    for (std::size_t k = 0; k < sets.size(); ++k) {
        // Variables (delta, t). Region rows after substitution:
        //   A M delta <= b - A offset.
        LinearProgram lp(2 * q);
        lp.c = l1.objective;
        lp.add_inequalities(l1.inequalities, l1.rhs);
        Matrix region = Matrix::Zero(sets[k].a.rows(), 2 * q);
        region.leftCols(q) = sets[k].a * map.matrix();
        lp.add_inequalities(region, sets[k].b - sets[k].a * map.offset());
        if (map.kind() == ActionMapping::Kind::Codebook) {
            Matrix nonneg = Matrix::Zero(q, 2 * q);
            nonneg.leftCols(q) = -Matrix::Identity(q, q);
            const Vector bound = map.hull_mode() == HullMode::HullExact ? map.base_code() : Vector::Zero(q);
            lp.add_inequalities(nonneg, bound);
            Matrix sum_row = Matrix::Zero(1, 2 * q);
            sum_row.leftCols(q).setOnes();
            lp.add_equalities(sum_row, Vector::Constant(1, 1.0 - map.base_code().sum()));
        }
        if (opts.sink) {
            opts.sink(lp, static_cast<int>(k));
        }
        const LpSolution sol = solve_lp(lp, opts.lp);
        if (!sol.optimal()) {
            continue;
        }
        Vector delta = sol.v.head(q);
        Vector x_cf = map.apply(delta);
        const double objective = weighted_l1(delta, weights);
        consider(best, model, req.y_cf, sets[k], opts.margin, std::move(delta), std::move(x_cf), objective,
                 static_cast<int>(k));
    }
    return best;
}

HullMembership hull_membership(const Codebook& cb, const Vector& x, double tol) {
    if (static_cast<std::size_t>(x.size()) != cb.dim()) {
        throw DimensionMismatch("sample dimension differs from the codebook dimension");
    }
    const auto m = static_cast<Eigen::Index>(cb.atoms());
    const auto d = x.size();
    // Variables (w, s): minimize s  s.t.  |P w + b - x| <= s,  w >= 0,  sum w = 1.
    LinearProgram lp(m + 1);
    lp.c(m) = 1.0;
    Matrix rows = Matrix::Zero(2 * d + m, m + 1);
    Vector rhs = Vector::Zero(2 * d + m);
    rows.topLeftCorner(d, m) = cb.primitives;
    rows.block(0, m, d, 1).setConstant(-1.0);
    rhs.head(d) = x - cb.base;
    rows.block(d, 0, d, m) = -cb.primitives;
    rows.block(d, m, d, 1).setConstant(-1.0);
    rhs.segment(d, d) = cb.base - x;
    rows.bottomLeftCorner(m, m) = -Matrix::Identity(m, m);
    lp.add_inequalities(rows, rhs);
    Matrix sum_row = Matrix::Zero(1, m + 1);
    sum_row.leftCols(m).setOnes();
    lp.add_equalities(sum_row, Vector::Ones(1));

    HullMembership out;
    const LpSolution sol = solve_lp(lp);
    if (!sol.optimal()) {
        out.distance = std::numeric_limits<double>::infinity();
        return out;
    }
    const Vector w = sol.v.head(m);
    out.distance = (cb.primitives * w + cb.base - x).cwiseAbs().maxCoeff();
    out.member = out.distance <= tol && w.minCoeff() >= -tol && std::abs(w.sum() - 1.0) <= tol;
    if (out.member) {
        out.weights = w;
    }
    return out;
}

}  // namespace cfx

#pragma once

#include "cfx/codebook.hpp"
#include "cfx/common.hpp"
#include "cfx/models.hpp"
#include "cfx/solver.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace cfx {

enum class HullMode {
    /// sum(z0 + delta) = 1 and z0 + delta >= 0: exactly the convex hull.
    HullExact,
    /// sum(z0 + delta) = 1 and delta >= 0, the literal lemma constraints.
    LemmaStrict,
};

const char* to_string(HullMode mode);

/// Affine map from an action vector delta to a point: x_cf = M delta + offset.
class ActionMapping {
  public:
    enum class Kind { Identity, Correlation, Codebook };

    /// x_cf = x_orig + delta.
    static ActionMapping identity(const Vector& x_orig);
    /// x_cf = x_orig + Sigma~ delta.
    static ActionMapping correlation(const Vector& x_orig, const Matrix& sigma_tilde);
    /// x_cf = P (z0 + delta) + b.
    static ActionMapping codebook(const Codebook& cb, const Vector& z0, HullMode mode);

    Kind kind() const { return kind_; }
    const Matrix& matrix() const { return matrix_; }
    const Vector& offset() const { return offset_; }
    /// Code of the original sample (codebook mappings only).
    const Vector& base_code() const { return z0_; }
    HullMode hull_mode() const { return mode_; }

    Eigen::Index action_dim() const { return matrix_.cols(); }
    Vector apply(const Vector& delta) const;

  private:
    Kind kind_ = Kind::Identity;
    Matrix matrix_;
    Vector offset_;
    Vector z0_;
    HullMode mode_ = HullMode::HullExact;
};

const char* to_string(ActionMapping::Kind kind);

struct CounterfactualRequest {
    Vector x_orig;  // standardized scale
    int y_cf = 0;
    ActionMapping mapping;
    /// Per-coordinate weights of the L1 regularizer; empty means uniform.
    Vector weights;
};

enum class CfStatus { Found, NoneFeasible };

const char* to_string(CfStatus status);

struct CounterfactualResult {
    CfStatus status = CfStatus::NoneFeasible;
    Vector delta;
    Vector x_cf;
    double objective = 0.0;
    /// Index of the winning constraint set (GLVQ prototype of the target).
    int branch = -1;

    bool found() const { return status == CfStatus::Found; }
};

/// Receives every program the engine builds, tagged with its branch index.
using ProgramSink = std::function<void(const LinearProgram&, int branch)>;

struct EngineOptions {
    LpOptions lp;
    double margin = kDecisionMargin;
    ProgramSink sink;
};

/// Closest counterfactual in x-space: minimize |x - x_orig|_1 subject to the
/// target-region constraints on x. Throws InvalidArgument when the model
/// already predicts y_cf for x_orig.
CounterfactualResult baseline_counterfactual(const Classifier& model, const Vector& x_orig, int y_cf,
                                             const EngineOptions& opts = {});

/// For each target-region set (A, b), minimizes the weighted |delta|_1 subject
/// to A (M delta + offset) <= b and the mapping's own constraints; returns
/// the feasible branch with the smallest objective (lowest index on ties).
/// Every Found result is re-checked with the classifier (with a zero margin,
/// membership of the closed target set is accepted instead).
CounterfactualResult compute_counterfactual(const Classifier& model, const CounterfactualRequest& req,
                                            const EngineOptions& opts = {});

struct HullMembership {
    bool member = false;
    /// Infinity-norm distance from x to the closest hull point found.
    double distance = 0.0;
    Vector weights;  // simplex witness, set when member
};

/// Whether x = P w + b for some w >= 0 with sum(w) = 1 (to `tol` in the
/// infinity norm), decided by a linear program minimizing that distance.
HullMembership hull_membership(const Codebook& cb, const Vector& x, double tol = 1e-6);

}  // namespace cfx

#pragma once

#include "cfx/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <variant>
#include <vector>

namespace cfx {

/// Decision margin on the standardized logit / distance scale.
inline constexpr double kDecisionMargin = 1e-4;

/// Linear multi-class model: predict = argmax(W x + b).
struct SoftmaxRegression {
    Matrix weights;  // K x d
    Vector biases;   // K
    std::uint64_t seed = 0;
    std::size_t epochs = 0;

    int n_classes() const { return static_cast<int>(weights.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(weights.cols()); }
};

/// Generalized learning vector quantization: predict = label of the nearest
/// prototype under squared Euclidean distance.
struct GlvqModel {
    Matrix prototypes;  // (K*r) x d
    std::vector<int> prototype_labels;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;

    int n_classes() const;
    std::size_t dim() const { return static_cast<std::size_t>(prototypes.cols()); }
};

using Classifier = std::variant<SoftmaxRegression, GlvqModel>;

/// Every feasible x satisfies a * x <= b componentwise.
struct AffineConstraintSet {
    Matrix a;  // c x d
    Vector b;  // c

    AffineConstraintSet(Matrix a, Vector b);
    bool contains(const Vector& x, double tol = 0.0) const;
};

struct SoftmaxTraining {
    std::size_t epochs = 2000;
    double lr = 0.5;
    std::uint64_t seed = 0;
    /// Weight decay: adds l2/2 * |W|_F^2 to the mean cross-entropy (biases unpenalized).
    double l2 = 0.01;
};

/// Full-batch gradient descent on the mean cross-entropy plus weight decay. Initial weights are
/// drawn N(0, 0.01^2) from the seed; biases start at zero.
SoftmaxRegression train_softmax(const Matrix& x, const Labels& y, int n_classes, const SoftmaxTraining& opts);

/// Mean cross-entropy of (W, b) on (x, y).
double softmax_loss(const Matrix& weights, const Vector& biases, const Matrix& x, const Labels& y);
/// Gradient of softmax_loss with respect to W and b.
void softmax_gradient(const Matrix& weights, const Vector& biases, const Matrix& x, const Labels& y, Matrix& grad_w,
                      Vector& grad_b);

struct GlvqTraining {
    std::size_t prototypes_per_class = 3;
    std::size_t epochs = 100;
    double lr = 0.05;
    std::uint64_t seed = 0;
    std::size_t kmeans_iterations = 50;
};

/// Prototypes start at seeded class-conditional k-means centers and are then
/// refined by stochastic GLVQ updates on the cost sum_i sigmoid(mu_i),
/// mu = (d+ - d-) / (d+ + d-), with per-epoch shuffling and a linearly
/// decaying learning rate.
GlvqModel train_glvq(const Matrix& x, const Labels& y, int n_classes, const GlvqTraining& opts);

/// Seeded Lloyd k-means on the rows of x; returns k x d centers.
Matrix kmeans(const Matrix& x, std::size_t k, std::size_t iterations, Rng& rng);

int predict(const SoftmaxRegression& model, const Vector& x);
int predict(const GlvqModel& model, const Vector& x);
int predict(const Classifier& model, const Vector& x);

int n_classes(const Classifier& model);
std::size_t dim(const Classifier& model);

/// Affine description of the region predicted as `target`.
///
/// Softmax yields one set with K-1 rows. GLVQ yields one set per prototype of
/// the target class (a disjunction); a point inside any returned set is
/// predicted as `target`. Sets that are trivially infeasible (a zero row with
/// negative right-hand side, e.g. from coincident prototypes) are dropped.
std::vector<AffineConstraintSet> target_constraints(const Classifier& model, int target,
                                                    double margin = kDecisionMargin);

nlohmann::json to_json(const Classifier& model);
Classifier classifier_from_json(const nlohmann::json& doc);

}  // namespace cfx

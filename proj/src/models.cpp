#include "cfx/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cfx {

namespace {

void check_training_input(const Matrix& x, const Labels& y, int n_classes) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) {
        throw DimensionMismatch("training rows and labels differ in count");
    }
    if (x.rows() == 0 || x.cols() == 0) {
        throw InvalidArgument("empty training matrix");
    }
    if (n_classes < 2) {
        throw InvalidArgument("at least two classes are required");
    }
    for (int label : y) {
        if (label < 0 || label >= n_classes) {
            throw InvalidArgument("label out of range: " + std::to_string(label));
        }
    }
}

// Row-wise softmax probabilities of X W^T + b, together with the mean
// cross-entropy.
double softmax_probabilities(const Matrix& weights, const Vector& biases, const Matrix& x, const Labels& y,
                             Matrix& probs) {
    probs = x * weights.transpose();
    probs.rowwise() += biases.transpose();
    double loss = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double shift = probs.row(i).maxCoeff();
        probs.row(i).array() -= shift;
        const double log_norm = std::log(probs.row(i).array().exp().sum());
        loss -= probs(i, y[static_cast<std::size_t>(i)]) - log_norm;
        probs.row(i) = (probs.row(i).array() - log_norm).exp();
    }
    return loss / static_cast<double>(x.rows());
}

double squared_distance(const Vector& x, const Matrix& prototypes, Eigen::Index j) {
    return (prototypes.row(j).transpose() - x).squaredNorm();
}

Matrix to_matrix(const nlohmann::json& rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = n == 0 ? 0 : static_cast<Eigen::Index>(rows.at(0).size());
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != d) {
            throw MalformedInput("ragged matrix in model document", 0);
        }
        for (Eigen::Index j = 0; j < d; ++j) {
            m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
        }
    }
    return m;
}

nlohmann::json from_matrix(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

int GlvqModel::n_classes() const {
    if (prototype_labels.empty()) {
        return 0;
    }
    return *std::max_element(prototype_labels.begin(), prototype_labels.end()) + 1;
}

AffineConstraintSet::AffineConstraintSet(Matrix a_in, Vector b_in) : a(std::move(a_in)), b(std::move(b_in)) {
    if (a.rows() < 1) {
        throw InvalidArgument("constraint set needs at least one row");
    }
    if (a.rows() != b.size()) {
        throw DimensionMismatch("constraint matrix and right-hand side differ in rows");
    }
    if (!a.allFinite() || !b.allFinite()) {
        throw InvalidArgument("constraint set has non-finite entries");
    }
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (a.row(i).isZero(0.0) && b(i) < 0.0) {
            throw InvalidArgument("constraint row " + std::to_string(i) + " is trivially infeasible");
        }
    }
}

bool AffineConstraintSet::contains(const Vector& x, double tol) const {
    return ((a * x - b).array() <= tol).all();
}

double softmax_loss(const Matrix& weights, const Vector& biases, const Matrix& x, const Labels& y) {
    Matrix probs;
    return softmax_probabilities(weights, biases, x, y, probs);
}

void softmax_gradient(const Matrix& weights, const Vector& biases, const Matrix& x, const Labels& y, Matrix& grad_w,
                      Vector& grad_b) {
    Matrix probs;
    softmax_probabilities(weights, biases, x, y, probs);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        probs(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    }
    probs /= static_cast<double>(x.rows());
    grad_w = probs.transpose() * x;
    grad_b = probs.colwise().sum().transpose();
}

SoftmaxRegression train_softmax(const Matrix& x, const Labels& y, int n_classes, const SoftmaxTraining& opts) {
    check_training_input(x, y, n_classes);
    Rng rng(opts.seed);
    SoftmaxRegression model;
    model.seed = opts.seed;
    model.epochs = opts.epochs;
    model.weights.resize(n_classes, x.cols());
    for (Eigen::Index i = 0; i < model.weights.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.weights.cols(); ++j) {
            model.weights(i, j) = 0.01 * rng.normal();
        }
    }
    model.biases = Vector::Zero(n_classes);

    Matrix probs;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        const double loss = softmax_probabilities(model.weights, model.biases, x, y, probs);
        if (!std::isfinite(loss)) {
            throw DivergenceError("softmax training diverged at epoch " + std::to_string(epoch) +
                                  "; use a smaller learning rate");
        }
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            probs(i, y[static_cast<std::size_t>(i)]) -= 1.0;
        }
        probs /= static_cast<double>(x.rows());
        model.weights -= opts.lr * (probs.transpose() * x + opts.l2 * model.weights);
        model.biases -= opts.lr * probs.colwise().sum().transpose();
    }
    if (!model.weights.allFinite() || !model.biases.allFinite()) {
        throw DivergenceError("softmax training produced non-finite weights; use a smaller learning rate");
    }
    return model;
}

Matrix kmeans(const Matrix& x, std::size_t k, std::size_t iterations, Rng& rng) {
    if (k == 0 || static_cast<std::size_t>(x.rows()) < k) {
        throw InvalidArgument("k-means needs at least k rows");
    }
    std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const auto kk = static_cast<Eigen::Index>(k);
    Matrix centers(kk, x.cols());
    for (Eigen::Index c = 0; c < kk; ++c) {
        centers.row(c) = x.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(c)]));
    }
    std::vector<Eigen::Index> assignment(static_cast<std::size_t>(x.rows()), -1);
    for (std::size_t it = 0; it < iterations; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            Eigen::Index best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (Eigen::Index c = 0; c < kk; ++c) {
                const double dist = (x.row(i) - centers.row(c)).squaredNorm();
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            if (assignment[static_cast<std::size_t>(i)] != best) {
                assignment[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
        Matrix sums = Matrix::Zero(kk, x.cols());
        std::vector<std::size_t> counts(k, 0);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const auto c = assignment[static_cast<std::size_t>(i)];
            sums.row(c) += x.row(i);
            ++counts[static_cast<std::size_t>(c)];
        }
        for (Eigen::Index c = 0; c < kk; ++c) {
            // Empty clusters keep their previous center.
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
    }
    return centers;
}

GlvqModel train_glvq(const Matrix& x, const Labels& y, int n_classes, const GlvqTraining& opts) {
    check_training_input(x, y, n_classes);
    const std::size_t r = opts.prototypes_per_class;
    if (r == 0) {
        throw InvalidArgument("at least one prototype per class is required");
    }
    Rng rng(opts.seed);
    GlvqModel model;
    model.seed = opts.seed;
    model.epochs = opts.epochs;
    model.prototypes.resize(static_cast<Eigen::Index>(r) * n_classes, x.cols());
    for (int c = 0; c < n_classes; ++c) {
        IndexSet members;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == c) {
                members.push_back(i);
            }
        }
        if (members.size() < r) {
            throw InvalidArgument("class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                                  " training samples, fewer than " + std::to_string(r) + " prototypes");
        }
        Matrix class_rows(static_cast<Eigen::Index>(members.size()), x.cols());
        for (std::size_t i = 0; i < members.size(); ++i) {
            class_rows.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(members[i]));
        }
        const Matrix centers = kmeans(class_rows, r, opts.kmeans_iterations, rng);
        for (std::size_t j = 0; j < r; ++j) {
            model.prototypes.row(static_cast<Eigen::Index>(c * r + j)) = centers.row(static_cast<Eigen::Index>(j));
            model.prototype_labels.push_back(c);
        }
    }

    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), 0);
    const auto n_protos = model.prototypes.rows();
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        const double lr = opts.lr * (1.0 - static_cast<double>(epoch) / static_cast<double>(opts.epochs));
        rng.shuffle(order);
        for (auto i : order) {
            const Vector xi = x.row(static_cast<Eigen::Index>(i)).transpose();
            Eigen::Index plus = -1;
            Eigen::Index minus = -1;
            double d_plus = std::numeric_limits<double>::infinity();
            double d_minus = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n_protos; ++j) {
                const double dist = squared_distance(xi, model.prototypes, j);
                if (model.prototype_labels[static_cast<std::size_t>(j)] == y[i]) {
                    if (dist < d_plus) {
                        d_plus = dist;
                        plus = j;
                    }
                } else if (dist < d_minus) {
                    d_minus = dist;
                    minus = j;
                }
            }
            const double denom = (d_plus + d_minus) * (d_plus + d_minus);
            if (denom <= 0.0) {
                continue;
            }
            const double mu = (d_plus - d_minus) / (d_plus + d_minus);
            const double s = 1.0 / (1.0 + std::exp(-mu));
            const double slope = s * (1.0 - s);
            const Vector w_plus = model.prototypes.row(plus).transpose();
            const Vector w_minus = model.prototypes.row(minus).transpose();
            model.prototypes.row(plus) += (lr * slope * 4.0 * d_minus / denom) * (xi - w_plus).transpose();
            model.prototypes.row(minus) -= (lr * slope * 4.0 * d_plus / denom) * (xi - w_minus).transpose();
        }
    }
    if (!model.prototypes.allFinite()) {
        throw DivergenceError("GLVQ training produced non-finite prototypes; use a smaller learning rate");
    }
    return model;
}

int predict(const SoftmaxRegression& model, const Vector& x) {
    if (static_cast<std::size_t>(x.size()) != model.dim()) {
        throw DimensionMismatch("input has " + std::to_string(x.size()) + " features, model expects " +
                                std::to_string(model.dim()));
    }
    const Vector logits = model.weights * x + model.biases;
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < logits.size(); ++k) {
        if (logits(k) > logits(best)) {
            best = k;
        }
    }
    return static_cast<int>(best);
}

int predict(const GlvqModel& model, const Vector& x) {
    if (static_cast<std::size_t>(x.size()) != model.dim()) {
        throw DimensionMismatch("input has " + std::to_string(x.size()) + " features, model expects " +
                                std::to_string(model.dim()));
    }
    double best_d = std::numeric_limits<double>::infinity();
    int best_label = std::numeric_limits<int>::max();
    for (Eigen::Index j = 0; j < model.prototypes.rows(); ++j) {
        const double dist = squared_distance(x, model.prototypes, j);
        const int label = model.prototype_labels[static_cast<std::size_t>(j)];
        if (dist < best_d || (dist == best_d && label < best_label)) {
            best_d = dist;
            best_label = label;
        }
    }
    return best_label;
}

int predict(const Classifier& model, const Vector& x) {
    return std::visit([&](const auto& m) { return predict(m, x); }, model);
}

int n_classes(const Classifier& model) {
    return std::visit([](const auto& m) { return m.n_classes(); }, model);
}

std::size_t dim(const Classifier& model) {
    return std::visit([](const auto& m) { return m.dim(); }, model);
}

namespace {

bool trivially_infeasible(const Matrix& a, const Vector& b) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (a.row(i).isZero(0.0) && b(i) < 0.0) {
            return true;
        }
    }
    return false;
}

std::vector<AffineConstraintSet> constraints_for(const SoftmaxRegression& model, int target, double margin) {
    const int k = model.n_classes();
    Matrix a(k - 1, model.weights.cols());
    Vector b(k - 1);
    Eigen::Index row = 0;
    for (int j = 0; j < k; ++j) {
        if (j == target) {
            continue;
        }
        a.row(row) = model.weights.row(j) - model.weights.row(target);
        b(row) = (model.biases(target) - model.biases(j)) - margin;
        ++row;
    }
    if (trivially_infeasible(a, b)) {
        return {};
    }
    return {AffineConstraintSet(std::move(a), std::move(b))};
}

std::vector<AffineConstraintSet> constraints_for(const GlvqModel& model, int target, double margin) {
    std::vector<Eigen::Index> own;
    std::vector<Eigen::Index> others;
    for (Eigen::Index j = 0; j < model.prototypes.rows(); ++j) {
        (model.prototype_labels[static_cast<std::size_t>(j)] == target ? own : others).push_back(j);
    }
    std::vector<AffineConstraintSet> sets;
    for (auto t : own) {
        const Vector pt = model.prototypes.row(t).transpose();
        Matrix a(static_cast<Eigen::Index>(others.size()), model.prototypes.cols());
        Vector b(static_cast<Eigen::Index>(others.size()));
        for (std::size_t r = 0; r < others.size(); ++r) {
            const Vector pj = model.prototypes.row(others[r]).transpose();
            // |x - pt|^2 <= |x - pj|^2 - margin, with the |x|^2 terms cancelled.
            a.row(static_cast<Eigen::Index>(r)) = 2.0 * (pj - pt).transpose();
            b(static_cast<Eigen::Index>(r)) = pj.squaredNorm() - pt.squaredNorm() - margin;
        }
        if (!trivially_infeasible(a, b)) {
            sets.emplace_back(std::move(a), std::move(b));
        }
    }
    return sets;
}

}  // namespace

std::vector<AffineConstraintSet> target_constraints(const Classifier& model, int target, double margin) {
    if (target < 0 || target >= n_classes(model)) {
        throw InvalidArgument("invalid target label " + std::to_string(target));
    }
    return std::visit([&](const auto& m) { return constraints_for(m, target, margin); }, model);
}

nlohmann::json to_json(const Classifier& model) {
    nlohmann::json doc;
    doc["version"] = 1;
    if (const auto* s = std::get_if<SoftmaxRegression>(&model)) {
        doc["type"] = "softmax";
        doc["weights"] = from_matrix(s->weights);
        doc["biases"] = std::vector<double>(s->biases.data(), s->biases.data() + s->biases.size());
        doc["meta"] = {{"seed", s->seed}, {"epochs", s->epochs}};
    } else {
        const auto& g = std::get<GlvqModel>(model);
        doc["type"] = "glvq";
        doc["prototypes"] = from_matrix(g.prototypes);
        doc["prototype_labels"] = g.prototype_labels;
        doc["meta"] = {{"seed", g.seed}, {"epochs", g.epochs}};
    }
    return doc;
}

Classifier classifier_from_json(const nlohmann::json& doc) {
    try {
        if (doc.value("version", 1) != 1) {
            throw InvalidArgument("unsupported model document version");
        }
        const auto type = doc.at("type").get<std::string>();
        if (type == "softmax") {
            SoftmaxRegression m;
            m.weights = to_matrix(doc.at("weights"));
            const auto biases = doc.at("biases").get<std::vector<double>>();
            m.biases = Eigen::Map<const Vector>(biases.data(), static_cast<Eigen::Index>(biases.size()));
            if (m.biases.size() != m.weights.rows() || m.weights.rows() < 2) {
                throw InvalidArgument("softmax document has inconsistent shapes");
            }
            m.seed = doc.at("meta").value("seed", std::uint64_t{0});
            m.epochs = doc.at("meta").value("epochs", std::size_t{0});
            return m;
        }
        if (type == "glvq") {
            GlvqModel m;
            m.prototypes = to_matrix(doc.at("prototypes"));
            m.prototype_labels = doc.at("prototype_labels").get<std::vector<int>>();
            if (static_cast<Eigen::Index>(m.prototype_labels.size()) != m.prototypes.rows()) {
                throw InvalidArgument("glvq document has inconsistent shapes");
            }
            m.seed = doc.at("meta").value("seed", std::uint64_t{0});
            m.epochs = doc.at("meta").value("epochs", std::size_t{0});
            return m;
        }
        throw InvalidArgument("unknown model type '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed model document: ") + e.what());
    }
}

}  // namespace cfx

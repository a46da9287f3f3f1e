#include "cfx/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace cfx {

void Codebook::validate() const {
    if (primitives.rows() != base.size()) {
        throw DimensionMismatch("codebook primitives and base differ in dimension");
    }
    if (primitives.cols() < 1) {
        throw InvalidArgument("codebook needs at least one atom");
    }
    if (!primitives.allFinite() || !base.allFinite()) {
        throw InvalidArgument("codebook has non-finite entries");
    }
    for (Eigen::Index i = 0; i < primitives.cols(); ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            if ((primitives.col(i) - primitives.col(j)).cwiseAbs().maxCoeff() <= 1e-8) {
                throw InvalidArgument("codebook atoms " + std::to_string(j) + " and " + std::to_string(i) +
                                      " coincide");
            }
        }
    }
}

void nonnegative_code(const Matrix& gram, const Vector& correlation, double lambda, Vector& z, std::size_t max_sweeps,
                      double tol) {
    const Eigen::Index m = z.size();
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) {
            if (gram(k, k) <= 0.0) {
                z(k) = 0.0;
                continue;
            }
            const double partial = correlation(k) - gram.row(k).dot(z) + gram(k, k) * z(k);
            const double updated = std::max(0.0, (partial - 0.5 * lambda) / gram(k, k));
            max_change = std::max(max_change, std::abs(updated - z(k)));
            z(k) = updated;
        }
        if (max_change <= tol) {
            return;
        }
    }
}

Vector project_to_simplex(const Vector& v) {
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double shift = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cumulative += sorted[i];
        const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (sorted[i] - candidate > 0.0) {
            shift = candidate;
        }
    }
    return (v.array() - shift).max(0.0).matrix();
}

namespace {

Vector simplex_code(const Matrix& gram, const Vector& correlation) {
    const Eigen::Index m = gram.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lipschitz = 2.0 * std::max(eig.eigenvalues().maxCoeff(), 1e-12);
    Vector z = Vector::Constant(m, 1.0 / static_cast<double>(m));
    Vector y = z;
    double t = 1.0;
    for (int it = 0; it < 20000; ++it) {
        const Vector grad = 2.0 * (gram * y - correlation);
        const Vector next = project_to_simplex(y - grad / lipschitz);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = next + ((t - 1.0) / t_next) * (next - z);
        const double change = (next - z).cwiseAbs().maxCoeff();
        z = next;
        t = t_next;
        if (change < 1e-14) {
            break;
        }
    }
    return z;
}

}  // namespace

Vector encode(const Codebook& cb, const Vector& x, bool simplex) {
    if (static_cast<std::size_t>(x.size()) != cb.dim()) {
        throw DimensionMismatch("sample has " + std::to_string(x.size()) + " features, codebook expects " +
                                std::to_string(cb.dim()));
    }
    const Matrix gram = cb.primitives.transpose() * cb.primitives;
    const Vector correlation = cb.primitives.transpose() * (x - cb.base);
    if (simplex) {
        return simplex_code(gram, correlation);
    }
    Vector z = Vector::Zero(static_cast<Eigen::Index>(cb.atoms()));
    nonnegative_code(gram, correlation, 0.0, z, 100000, 1e-14);
    return z;
}

Vector decode(const Codebook& cb, const Vector& z) {
    if (static_cast<std::size_t>(z.size()) != cb.atoms()) {
        throw DimensionMismatch("code has " + std::to_string(z.size()) + " entries, codebook has " +
                                std::to_string(cb.atoms()) + " atoms");
    }
    return cb.primitives * z + cb.base;
}

CodebookFit learn_codebook(const Matrix& x, const CodebookTraining& opts) {
    const auto n = x.rows();
    const auto m = static_cast<Eigen::Index>(opts.atoms);
    if (m < 1) {
        throw InvalidArgument("codebook needs at least one atom");
    }
    if (m > n) {
        throw InvalidArgument("atom count " + std::to_string(m) + " exceeds sample count " + std::to_string(n));
    }
    if (opts.lambda < 0.0) {
        throw InvalidArgument("sparsity weight must be non-negative");
    }

    CodebookFit fit;
    Codebook& cb = fit.codebook;
    cb.lambda = opts.lambda;
    cb.seed = opts.seed;
    cb.base = x.colwise().mean().transpose();
    const Matrix residual_target = (x.rowwise() - cb.base.transpose()).transpose();  // d x n

    Rng rng(opts.seed);
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    cb.primitives.resize(x.cols(), m);
    Eigen::Index filled = 0;
    for (auto idx : order) {
        if (filled == m) {
            break;
        }
        const Vector candidate = residual_target.col(static_cast<Eigen::Index>(idx));
        bool duplicate = false;
        for (Eigen::Index j = 0; j < filled; ++j) {
            duplicate = duplicate || (cb.primitives.col(j) - candidate).cwiseAbs().maxCoeff() <= 1e-8;
        }
        if (!duplicate) {
            cb.primitives.col(filled++) = candidate;
        }
    }
    if (filled < m) {
        throw InvalidArgument("not enough distinct samples to initialize " + std::to_string(m) + " atoms");
    }

    Matrix& codes = fit.codes;
    codes = Matrix::Zero(m, n);
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        const Matrix gram = cb.primitives.transpose() * cb.primitives;
        const Matrix correlations = cb.primitives.transpose() * residual_target;
        for (Eigen::Index i = 0; i < n; ++i) {
            Vector z = codes.col(i);
            nonnegative_code(gram, correlations.col(i), opts.lambda, z, opts.code_sweeps, 1e-10);
            codes.col(i) = z;
        }

        Matrix residual = residual_target - cb.primitives * codes;
        for (Eigen::Index k = 0; k < m; ++k) {
            const double weight = codes.row(k).squaredNorm();
            if (weight <= 0.0) {
                continue;
            }
            const Vector old_atom = cb.primitives.col(k);
            Vector atom = old_atom + residual * codes.row(k).transpose() / weight;
            const double norm = atom.norm();
            if (norm > opts.max_atom_norm) {
                atom *= opts.max_atom_norm / norm;
            }
            residual += (old_atom - atom) * codes.row(k);
            cb.primitives.col(k) = atom;
        }
        const double objective =
            (residual.colwise().squaredNorm().sum() + opts.lambda * codes.sum()) / static_cast<double>(n);
        fit.objective_trace.push_back(objective);
        log::debug("codebook epoch " + std::to_string(epoch) + " objective " + std::to_string(objective));
    }
    cb.validate();
    return fit;
}

nlohmann::json to_json(const Codebook& cb) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < cb.primitives.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < cb.primitives.cols(); ++j) {
            row.push_back(cb.primitives(i, j));
        }
        rows.push_back(std::move(row));
    }
    nlohmann::json doc;
    doc["P"] = std::move(rows);
    doc["b"] = std::vector<double>(cb.base.data(), cb.base.data() + cb.base.size());
    doc["meta"] = {{"m", cb.atoms()}, {"lambda", cb.lambda}, {"seed", cb.seed}};
    return doc;
}

Codebook codebook_from_json(const nlohmann::json& doc) {
    Codebook cb;
    try {
        const auto& rows = doc.at("P");
        const auto base = doc.at("b").get<std::vector<double>>();
        const auto d = static_cast<Eigen::Index>(rows.size());
        const auto m = d == 0 ? 0 : static_cast<Eigen::Index>(rows.at(0).size());
        cb.primitives.resize(d, m);
        for (Eigen::Index i = 0; i < d; ++i) {
            const auto& row = rows.at(static_cast<std::size_t>(i));
            if (static_cast<Eigen::Index>(row.size()) != m) {
                throw InvalidArgument("codebook document has ragged rows");
            }
            for (Eigen::Index j = 0; j < m; ++j) {
                cb.primitives(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
            }
        }
        cb.base = Eigen::Map<const Vector>(base.data(), static_cast<Eigen::Index>(base.size()));
        if (doc.contains("meta")) {
            cb.lambda = doc["meta"].value("lambda", 0.0);
            cb.seed = doc["meta"].value("seed", std::uint64_t{0});
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed codebook document: ") + e.what());
    }
    cb.validate();
    return cb;
}

Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("codebook file is not valid JSON: ") + e.what());
    }
    return codebook_from_json(doc);
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << to_json(cb).dump(2) << '\n';
}

}  // namespace cfx

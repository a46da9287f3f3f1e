#pragma once

#include "cfx/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cfx {

/// Primitives P (columns, d x m) and base vector b; samples are modelled as
/// P z + b with z >= 0.
struct Codebook {
    Matrix primitives;  // d x m
    Vector base;        // d
    double lambda = 0.0;
    std::uint64_t seed = 0;

    std::size_t atoms() const { return static_cast<std::size_t>(primitives.cols()); }
    std::size_t dim() const { return static_cast<std::size_t>(primitives.rows()); }

    /// Throws when entries are non-finite or two atoms coincide (to 1e-8).
    void validate() const;
};

struct CodebookTraining {
    std::size_t atoms = 10;
    double lambda = 0.1;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;
    double max_atom_norm = 1.0;
    std::size_t code_sweeps = 50;
};

struct CodebookFit {
    Codebook codebook;
    /// Mean objective (1/n) sum_i |x_i - P z_i - b|^2 + lambda |z_i|_1 after
    /// each epoch.
    std::vector<double> objective_trace;
    Matrix codes;  // m x n, nonnegative
};

/// Alternating minimization: nonnegative coordinate descent on the codes
/// (warm-started), then block coordinate descent over atoms, each atom the
/// least-squares update projected onto the ball of radius max_atom_norm.
/// The base is fixed to the column mean of x. Atoms start at randomly chosen
/// training rows minus the base.
CodebookFit learn_codebook(const Matrix& x, const CodebookTraining& opts);

/// argmin_{z >= 0} |x - (P z + b)|^2, additionally with sum(z) = 1 when
/// `simplex` is set. Coordinate descent from z = 0 (projected gradient from
/// the simplex barycenter in simplex mode).
Vector encode(const Codebook& cb, const Vector& x, bool simplex = false);

/// P z + b.
Vector decode(const Codebook& cb, const Vector& z);

/// Nonnegative lasso code for one sample, warm-started from `z`.
void nonnegative_code(const Matrix& gram, const Vector& correlation, double lambda, Vector& z, std::size_t max_sweeps,
                      double tol);

/// Euclidean projection onto the probability simplex.
Vector project_to_simplex(const Vector& v);

nlohmann::json to_json(const Codebook& cb);
Codebook codebook_from_json(const nlohmann::json& doc);
Codebook load_codebook(const std::filesystem::path& path);
void save_codebook(const Codebook& cb, const std::filesystem::path& path);

}  // namespace cfx

#pragma once

#include "cfx/codebook.hpp"
#include "cfx/common.hpp"
#include "cfx/dataset.hpp"
#include "cfx/engine.hpp"
#include "cfx/models.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cfx {

/// Threshold below which an action-vector entry counts as unchanged.
inline constexpr double kOverlapEps = 1e-4;

struct ExperimentConfig {
    std::string experiment = "dependency";  // dependency | plausibility
    std::string dataset = "iris";           // iris | wine | breastcancer | digits
    std::string model = "softmax";          // softmax | glvq
    std::size_t folds = 3;
    std::uint64_t seed = 0;
    double alpha = 0.8;
    std::size_t atoms = 10;
    double lambda = 0.1;
    std::size_t codebook_epochs = 30;
    HullMode hull_mode = HullMode::HullExact;
    /// Plausibility experiment: number of sampled test digits.
    std::size_t samples = 100;
    std::size_t jobs = 1;

    SoftmaxTraining softmax;
    GlvqTraining glvq;

    std::filesystem::path data_dir;
    std::optional<std::filesystem::path> corr_matrix;
    std::optional<std::filesystem::path> codebook;
    std::optional<std::filesystem::path> dump_lp;
    /// Per-sample correlation matrix (dataset row index); nullopt falls back
    /// to the fold matrix.
    std::function<std::optional<Matrix>(std::size_t)> corr_lookup;

    void validate() const;
    nlohmann::ordered_json to_json() const;
};

struct SampleRecord {
    std::size_t sample = 0;  // row index in the dataset
    std::size_t fold = 0;
    int y_orig = 0;
    int y_cf = 0;
    Vector x_orig;      // standardized
    Vector x_orig_raw;  // raw units
    CounterfactualResult baseline;
    CounterfactualResult mapped;  // correlation- or codebook-mapped
    /// Plausibility runs: the same request under the other hull mode.
    std::optional<CounterfactualResult> alternate;
    Vector baseline_raw;
    Vector mapped_raw;
    /// Filled when both baseline and mapped were found; NaN / -1 otherwise.
    double distance = std::numeric_limits<double>::quiet_NaN();
    double delta_distance = std::numeric_limits<double>::quiet_NaN();
    int overlap = -1;
    std::optional<bool> hull_member;
    std::optional<bool> alternate_hull_member;

    bool paired() const { return baseline.found() && mapped.found(); }
};

struct FoldSummary {
    std::size_t fold = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t n_correct = 0;
    bool skipped = false;
    std::string note;
    /// Correlation matrix used for this fold (dependency runs).
    Matrix sigma_tilde;
};

struct Aggregates {
    std::size_t n_records = 0;
    std::size_t n_pairs = 0;
    double median_distance = std::numeric_limits<double>::quiet_NaN();
    double median_delta_distance = std::numeric_limits<double>::quiet_NaN();
    std::array<double, 3> overlap_quartiles{};
    double mean_overlap = std::numeric_limits<double>::quiet_NaN();
    /// Mean of (dimension - overlap) over pairs.
    double mean_disagreement = std::numeric_limits<double>::quiet_NaN();
    double baseline_feasibility = 0.0;
    double mapped_feasibility = 0.0;
    double feasibility_rate = 0.0;  // fraction of records with both found
    double validity_rate = 1.0;     // fraction of found results predicting y_cf
};

struct ExperimentReport {
    ExperimentConfig config;
    std::size_t dim = 0;
    std::vector<FoldSummary> folds;
    std::vector<SampleRecord> records;
    Aggregates aggregates;
    /// Plausibility runs.
    std::vector<double> codebook_objective;
    double reconstruction_error_mean = std::numeric_limits<double>::quiet_NaN();
    double reconstruction_error_max = std::numeric_limits<double>::quiet_NaN();
    std::optional<Codebook> codebook;
};

/// Indices where both vectors are zero, or both nonzero, at threshold eps.
int feature_overlap(const Vector& d1, const Vector& d2, double eps = kOverlapEps);

/// Linear-interpolation quantile (numpy's default) of unsorted values.
double quantile(std::vector<double> values, double q);

Aggregates compute_aggregates(const std::vector<SampleRecord>& records, std::size_t dim);

/// Uniform draw from the classes other than `current`, seeded per sample.
int draw_target(std::uint64_t seed, std::size_t sample, int current, int n_classes);

LabeledDataset load_named_dataset(const std::filesystem::path& data_dir, const std::string& name);

/// Cross-validated closest vs. correlation-mapped counterfactuals.
ExperimentReport run_dependency_experiment(const ExperimentConfig& cfg);

/// Closest vs. codebook-mapped counterfactuals on the Digits data.
ExperimentReport run_plausibility_experiment(const ExperimentConfig& cfg);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

nlohmann::ordered_json to_json(const ExperimentReport& report);
std::string report_json_text(const ExperimentReport& report);

/// A fold with records none of which found a mapped counterfactual.
bool has_infeasible_only_fold(const ExperimentReport& report);

/// report.json, records.csv, folds.csv and, for plausibility runs, images.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Plain PGM (P2), 8 x 8, maxval 16; pixels are clipped to [0, 16] and
/// rounded to the nearest integer.
std::string to_pgm(const Vector& pixels);
/// Parses a P2 PGM into its pixel values (row-major).
std::vector<int> parse_pgm(const std::string& text);
std::vector<int> quantize_pixels(const Vector& pixels);

/// One PGM per original / closest / plausible image, named
/// {sample}_{orig|closest|plausible}_{label}.pgm, plus contact_sheet.csv.
void emit_images(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace cfx

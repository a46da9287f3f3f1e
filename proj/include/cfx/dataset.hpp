#pragma once

#include "cfx/common.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cfx {

/// Numeric feature matrix (raw units) with contiguous integer class labels.
struct LabeledDataset {
    Matrix features;  // n x d
    Labels labels;    // n entries in [0, n_classes)
    std::vector<std::string> feature_names;
    int n_classes = 0;

    std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

    /// Rows selected by `rows`, in order.
    Matrix rows(const IndexSet& rows) const;
    Labels labels_at(const IndexSet& rows) const;

    /// Throws InvalidArgument when an invariant does not hold.
    void validate() const;
};

/// How a CSV file maps onto a LabeledDataset.
struct CsvSchema {
    bool has_header = true;
    /// Column index, or header name when the file has a header.
    std::variant<std::size_t, std::string> label_col = std::string("label");
};

LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
LabeledDataset parse_csv(const std::string& text, const CsvSchema& schema);

/// Writes header (feature names then "label") and rows with shortest
/// round-trip number formatting; the label is the last column.
std::string to_csv(const LabeledDataset& data);
void save_csv(const LabeledDataset& data, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// Per-feature affine standardization fitted on a subset of rows.
struct Standardizer {
    Vector mean;
    Vector std;
    /// True where the fitted feature had zero variance (std forced to 1).
    std::vector<bool> constant;

    Vector apply(const Vector& x) const;
    Matrix apply(const Matrix& x) const;
    Vector invert(const Vector& z) const;
    Matrix invert(const Matrix& z) const;
};

/// Population (1/n) mean and standard deviation over `rows`.
Standardizer fit_standardizer(const LabeledDataset& data, const IndexSet& rows);
Standardizer fit_standardizer(const Matrix& x);

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;
    std::uint64_t seed = 0;

    IndexSet test_rows(std::size_t fold) const;
    IndexSet train_rows(std::size_t fold) const;
    std::vector<std::size_t> fold_sizes() const;
};

/// Seeded k-fold assignment. With labels the folds are stratified: each class
/// is shuffled and the concatenation dealt round-robin, so both the per-class
/// and the overall fold sizes differ by at most one.
FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed, const Labels* labels = nullptr);

}  // namespace cfx

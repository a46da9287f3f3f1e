#include "cfx/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace cfx {

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& cell) {
    const std::string t = trim(cell);
    if (t.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    if (*begin == '+') {
        ++begin;
    }
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

Matrix LabeledDataset::rows(const IndexSet& idx) const {
    Matrix out(static_cast<Eigen::Index>(idx.size()), features.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(idx[i]));
    }
    return out;
}

Labels LabeledDataset::labels_at(const IndexSet& idx) const {
    Labels out;
    out.reserve(idx.size());
    for (auto i : idx) {
        out.push_back(labels[i]);
    }
    return out;
}

void LabeledDataset::validate() const {
    if (features.cols() < 1) {
        throw InvalidArgument("dataset needs at least one feature");
    }
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw DimensionMismatch("feature rows and label count differ");
    }
    if (!features.allFinite()) {
        throw InvalidArgument("dataset contains non-finite values");
    }
    std::set<int> seen(labels.begin(), labels.end());
    if (seen.empty() || *seen.begin() != 0 || *seen.rbegin() != static_cast<int>(seen.size()) - 1) {
        throw InvalidArgument("labels must cover a contiguous range starting at 0");
    }
    if (n_classes != static_cast<int>(seen.size())) {
        throw InvalidArgument("n_classes does not match the labels");
    }
    if (size() < static_cast<std::size_t>(n_classes)) {
        throw InvalidArgument("fewer samples than classes");
    }
}

LabeledDataset parse_csv(const std::string& text, const CsvSchema& schema) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    std::optional<std::size_t> label_col;
    std::size_t n_cols = 0;

    if (const auto* idx = std::get_if<std::size_t>(&schema.label_col)) {
        label_col = *idx;
    }

    if (schema.has_header) {
        while (std::getline(in, line)) {
            ++line_no;
            if (!trim(line).empty()) {
                break;
            }
        }
        if (trim(line).empty()) {
            throw MalformedInput("no rows", line_no);
        }
        for (auto& c : split_row(trim(line))) {
            header.push_back(trim(c));
        }
        n_cols = header.size();
        if (!label_col) {
            const auto& name = std::get<std::string>(schema.label_col);
            auto it = std::find(header.begin(), header.end(), name);
            if (it == header.end()) {
                throw MalformedInput("label column '" + name + "' not found in header", line_no);
            }
            label_col = static_cast<std::size_t>(it - header.begin());
        }
    } else if (!label_col) {
        throw InvalidArgument("a named label column requires a header row");
    }

    std::vector<std::vector<double>> rows;
    Labels labels;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) {
            continue;
        }
        auto cells = split_row(t);
        if (n_cols == 0) {
            n_cols = cells.size();
        }
        if (cells.size() != n_cols) {
            throw MalformedInput("expected " + std::to_string(n_cols) + " columns, found " + std::to_string(cells.size()),
                                 line_no);
        }
        if (*label_col >= n_cols) {
            throw MalformedInput("label column index out of range", line_no);
        }
        std::vector<double> row;
        row.reserve(n_cols - 1);
        for (std::size_t c = 0; c < n_cols; ++c) {
            auto v = parse_double(cells[c]);
            if (c == *label_col) {
                if (!v || *v != static_cast<double>(static_cast<int>(*v)) || *v < 0) {
                    throw MalformedInput("label '" + trim(cells[c]) + "' is not a non-negative integer", line_no);
                }
                labels.push_back(static_cast<int>(*v));
                continue;
            }
            if (!v) {
                throw NonNumericFeature(trim(cells[c]), line_no, c);
            }
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw MalformedInput("no rows", line_no);
    }

    LabeledDataset data;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(n_cols - 1);
    data.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            data.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    data.labels = std::move(labels);
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (c == *label_col) {
            continue;
        }
        data.feature_names.push_back(header.empty() ? "x" + std::to_string(data.feature_names.size()) : header[c]);
    }
    data.n_classes = *std::max_element(data.labels.begin(), data.labels.end()) + 1;
    data.validate();
    return data;
}

LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), schema);
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw Error("number formatting failed");
    }
    return std::string(buf, ptr);
}

std::string to_csv(const LabeledDataset& data) {
    std::string out;
    for (const auto& name : data.feature_names) {
        out += name;
        out += ',';
    }
    out += "label\n";
    for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
            out += format_number(data.features(i, j));
            out += ',';
        }
        out += std::to_string(data.labels[static_cast<std::size_t>(i)]);
        out += '\n';
    }
    return out;
}

void save_csv(const LabeledDataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << to_csv(data);
}

Vector Standardizer::apply(const Vector& x) const {
    if (x.size() != mean.size()) {
        throw DimensionMismatch("standardizer dimension mismatch");
    }
    return (x - mean).cwiseQuotient(std);
}

Matrix Standardizer::apply(const Matrix& x) const {
    if (x.cols() != mean.size()) {
        throw DimensionMismatch("standardizer dimension mismatch");
    }
    return (x.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

Vector Standardizer::invert(const Vector& z) const {
    if (z.size() != mean.size()) {
        throw DimensionMismatch("standardizer dimension mismatch");
    }
    return z.cwiseProduct(std) + mean;
}

Matrix Standardizer::invert(const Matrix& z) const {
    if (z.cols() != mean.size()) {
        throw DimensionMismatch("standardizer dimension mismatch");
    }
    Matrix out = z.array().rowwise() * std.transpose().array();
    out.rowwise() += mean.transpose();
    return out;
}

Standardizer fit_standardizer(const Matrix& x) {
    if (x.rows() == 0) {
        throw InvalidArgument("cannot fit a standardizer on zero rows");
    }
    Standardizer s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().sum().transpose() / n;
    s.std.resize(x.cols());
    s.constant.assign(static_cast<std::size_t>(x.cols()), false);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
        if (var > 0.0) {
            s.std(j) = std::sqrt(var);
        } else {
            s.std(j) = 1.0;
            s.constant[static_cast<std::size_t>(j)] = true;
        }
    }
    const auto n_const = std::count(s.constant.begin(), s.constant.end(), true);
    if (n_const > 0) {
        log::warn(std::to_string(n_const) + " constant feature(s); std forced to 1");
    }
    return s;
}

Standardizer fit_standardizer(const LabeledDataset& data, const IndexSet& rows) {
    if (rows.empty()) {
        throw InvalidArgument("cannot fit a standardizer on zero rows");
    }
    return fit_standardizer(data.rows(rows));
}

IndexSet FoldPlan::test_rows(std::size_t fold) const {
    IndexSet out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == fold) {
            out.push_back(i);
        }
    }
    return out;
}

IndexSet FoldPlan::train_rows(std::size_t fold) const {
    IndexSet out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] != fold) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) {
        ++sizes[a];
    }
    return sizes;
}

FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed, const Labels* labels) {
    if (k < 2) {
        throw InvalidArgument("fold count must be at least 2");
    }
    if (k > n) {
        throw InvalidArgument("fold count " + std::to_string(k) + " exceeds sample count " + std::to_string(n));
    }
    if (labels && labels->size() != n) {
        throw DimensionMismatch("label count differs from n");
    }
    Rng rng(seed);
    std::vector<std::size_t> order;
    order.reserve(n);
    if (labels) {
        const int n_classes = labels->empty() ? 0 : *std::max_element(labels->begin(), labels->end()) + 1;
        for (int c = 0; c < n_classes; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < n; ++i) {
                if ((*labels)[i] == c) {
                    members.push_back(i);
                }
            }
            rng.shuffle(members);
            order.insert(order.end(), members.begin(), members.end());
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            order.push_back(i);
        }
        rng.shuffle(order);
    }
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(n, 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        plan.assignments[order[pos]] = pos % k;
    }
    return plan;
}

}  // namespace cfx

#include "cfx/harness.hpp"

#include "cfx/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

namespace cfx {

namespace {

const std::set<std::string> kDatasets = {"iris", "wine", "breastcancer", "digits"};

// Stream identifiers for derive_seed.
constexpr std::uint64_t kTargetStream = 7;
constexpr std::uint64_t kModelStream = 100;
constexpr std::uint64_t kCodebookStream = 200;
constexpr std::uint64_t kSampleStream = 300;

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(jobs, n); ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

nlohmann::ordered_json vector_json(const Vector& v) {
    auto out = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

nlohmann::ordered_json matrix_json(const Matrix& m) {
    auto out = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out.push_back(vector_json(m.row(i).transpose()));
    }
    return out;
}

nlohmann::ordered_json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json result_json(const CounterfactualResult& r, const Vector& raw) {
    nlohmann::ordered_json out;
    out["status"] = to_string(r.status);
    if (r.found()) {
        out["objective"] = r.objective;
        out["branch"] = r.branch;
        out["delta"] = vector_json(r.delta);
        out["x_cf"] = vector_json(r.x_cf);
        if (raw.size() > 0) {
            out["x_cf_raw"] = vector_json(raw);
        }
    }
    return out;
}

Classifier train_model(const ExperimentConfig& cfg, const Matrix& x, const Labels& y, int n_classes, std::size_t fold) {
    const std::uint64_t seed = derive_seed(cfg.seed, kModelStream + fold);
    if (cfg.model == "softmax") {
        SoftmaxTraining opts = cfg.softmax;
        opts.seed = seed;
        return train_softmax(x, y, n_classes, opts);
    }
    GlvqTraining opts = cfg.glvq;
    opts.seed = seed;
    return train_glvq(x, y, n_classes, opts);
}

bool all_classes_present(const Labels& labels, int n_classes) {
    std::set<int> seen(labels.begin(), labels.end());
    return static_cast<int>(seen.size()) == n_classes;
}

EngineOptions engine_options(const ExperimentConfig& cfg, std::size_t fold, std::size_t sample, const char* kind) {
    EngineOptions opts;
    if (cfg.dump_lp) {
        const auto dir = *cfg.dump_lp;
        const std::string stem = std::to_string(fold) + "_" + std::to_string(sample) + "_" + kind + "_";
        opts.sink = [dir, stem](const LinearProgram& lp, int branch) {
            dump_lp(lp, dir / (stem + std::to_string(branch) + ".lp"));
        };
    }
    return opts;
}

void fill_pair_metrics(SampleRecord& rec, bool compare_deltas) {
    if (!rec.paired()) {
        return;
    }
    rec.distance = (rec.baseline.x_cf - rec.mapped.x_cf).norm();
    if (compare_deltas) {
        rec.delta_distance = (rec.baseline.delta - rec.mapped.delta).norm();
        rec.overlap = feature_overlap(rec.baseline.delta, rec.mapped.delta);
    } else {
        // Action spaces differ; compare the realized changes instead.
        const Vector effect_b = rec.baseline.x_cf - rec.x_orig;
        const Vector effect_m = rec.mapped.x_cf - rec.x_orig;
        rec.delta_distance = (effect_b - effect_m).norm();
        rec.overlap = feature_overlap(effect_b, effect_m);
    }
}

// Re-checks every found result with the classifier; returns (valid, total).
std::pair<std::size_t, std::size_t> count_valid(const Classifier& model, const SampleRecord& rec) {
    std::size_t valid = 0;
    std::size_t total = 0;
    auto check = [&](const CounterfactualResult& r) {
        if (r.found()) {
            ++total;
            valid += predict(model, r.x_cf) == rec.y_cf ? 1 : 0;
        }
    };
    check(rec.baseline);
    check(rec.mapped);
    if (rec.alternate) {
        check(*rec.alternate);
    }
    return {valid, total};
}

}  // namespace

void ExperimentConfig::validate() const {
    if (experiment != "dependency" && experiment != "plausibility") {
        throw InvalidArgument("unknown experiment '" + experiment + "'");
    }
    if (!kDatasets.count(dataset)) {
        throw InvalidArgument("unknown dataset '" + dataset + "'");
    }
    if (model != "softmax" && model != "glvq") {
        throw InvalidArgument("unknown model '" + model + "'");
    }
    if (folds < 2) {
        throw InvalidArgument("fold count must be at least 2");
    }
    if (!(alpha > 0.0)) {
        throw InvalidArgument("alpha must be positive");
    }
    if (experiment == "dependency" && dataset == "digits") {
        throw InvalidArgument("the dependency experiment runs on iris, wine or breastcancer");
    }
    if (experiment == "plausibility" && (dataset != "digits" || model != "softmax")) {
        throw InvalidArgument("the plausibility experiment runs on digits with the softmax model");
    }
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
    nlohmann::ordered_json out;
    out["experiment"] = experiment;
    out["dataset"] = dataset;
    out["model"] = model;
    out["folds"] = folds;
    out["seed"] = seed;
    out["alpha"] = alpha;
    out["atoms"] = atoms;
    out["lambda"] = lambda;
    out["codebook_epochs"] = codebook_epochs;
    out["hull_mode"] = to_string(hull_mode);
    out["samples"] = samples;
    out["softmax"] = {{"epochs", softmax.epochs}, {"lr", softmax.lr}};
    out["glvq"] = {{"prototypes_per_class", glvq.prototypes_per_class},
                   {"epochs", glvq.epochs},
                   {"lr", glvq.lr},
                   {"kmeans_iterations", glvq.kmeans_iterations}};
    out["decision_margin"] = kDecisionMargin;
    out["overlap_eps"] = kOverlapEps;
    out["corr_matrix"] = corr_matrix ? nlohmann::ordered_json(corr_matrix->filename().string()) : nullptr;
    out["corr_lookup"] = static_cast<bool>(corr_lookup);
    out["codebook"] = codebook ? nlohmann::ordered_json(codebook->filename().string()) : nullptr;
    out["codebook_scope"] = "training portion of fold 0";
    return out;
}

int feature_overlap(const Vector& d1, const Vector& d2, double eps) {
    if (d1.size() != d2.size()) {
        throw DimensionMismatch("overlap needs vectors of equal length");
    }
    int count = 0;
    for (Eigen::Index i = 0; i < d1.size(); ++i) {
        count += (std::abs(d1(i)) <= eps) == (std::abs(d2(i)) <= eps) ? 1 : 0;
    }
    return count;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Aggregates compute_aggregates(const std::vector<SampleRecord>& records, std::size_t dim) {
    Aggregates agg;
    agg.n_records = records.size();
    std::vector<double> distances;
    std::vector<double> delta_distances;
    std::vector<double> overlaps;
    std::size_t baseline_found = 0;
    std::size_t mapped_found = 0;
    for (const auto& r : records) {
        baseline_found += r.baseline.found() ? 1 : 0;
        mapped_found += r.mapped.found() ? 1 : 0;
        if (r.paired()) {
            distances.push_back(r.distance);
            delta_distances.push_back(r.delta_distance);
            overlaps.push_back(static_cast<double>(r.overlap));
        }
    }
    agg.n_pairs = distances.size();
    if (!records.empty()) {
        const double n = static_cast<double>(records.size());
        agg.baseline_feasibility = static_cast<double>(baseline_found) / n;
        agg.mapped_feasibility = static_cast<double>(mapped_found) / n;
        agg.feasibility_rate = static_cast<double>(agg.n_pairs) / n;
    }
    if (!distances.empty()) {
        agg.median_distance = quantile(distances, 0.5);
        agg.median_delta_distance = quantile(delta_distances, 0.5);
        agg.overlap_quartiles = {quantile(overlaps, 0.25), quantile(overlaps, 0.5), quantile(overlaps, 0.75)};
        double sum = 0.0;
        for (double o : overlaps) {
            sum += o;
        }
        agg.mean_overlap = sum / static_cast<double>(overlaps.size());
        agg.mean_disagreement = static_cast<double>(dim) - agg.mean_overlap;
    } else {
        agg.overlap_quartiles.fill(std::numeric_limits<double>::quiet_NaN());
    }
    return agg;
}

int draw_target(std::uint64_t seed, std::size_t sample, int current, int n_classes) {
    if (n_classes < 2) {
        throw InvalidArgument("need at least two classes to draw a target");
    }
    Rng rng(derive_seed(derive_seed(seed, kTargetStream), sample));
    const int pick = static_cast<int>(rng.below(static_cast<std::size_t>(n_classes - 1)));
    return pick >= current ? pick + 1 : pick;
}

LabeledDataset load_named_dataset(const std::filesystem::path& data_dir, const std::string& name) {
    if (!kDatasets.count(name)) {
        throw InvalidArgument("unknown dataset '" + name + "'");
    }
    CsvSchema schema;
    schema.has_header = true;
    schema.label_col = std::string("label");
    return load_csv(data_dir / (name + ".csv"), schema);
}

ExperimentReport run_dependency_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.experiment != "dependency") {
        throw InvalidArgument("configuration is not a dependency experiment");
    }
    const LabeledDataset data = load_named_dataset(cfg.data_dir, cfg.dataset);
    const FoldPlan plan = make_folds(data.size(), cfg.folds, cfg.seed, &data.labels);
    std::optional<Matrix> external_corr;
    if (cfg.corr_matrix) {
        external_corr = load_matrix_csv(*cfg.corr_matrix);
        if (static_cast<std::size_t>(external_corr->rows()) != data.dim()) {
            throw DimensionMismatch("supplied correlation matrix does not match the dataset dimension");
        }
    }
    if (cfg.dump_lp) {
        std::filesystem::create_directories(*cfg.dump_lp);
    }

    ExperimentReport report;
    report.config = cfg;
    report.dim = data.dim();
    std::size_t valid = 0;
    std::size_t total = 0;
    for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
        FoldSummary summary;
        summary.fold = fold;
        const IndexSet train = plan.train_rows(fold);
        const IndexSet test = plan.test_rows(fold);
        summary.n_train = train.size();
        summary.n_test = test.size();
        const Labels y_train = data.labels_at(train);
        if (!all_classes_present(y_train, data.n_classes)) {
            summary.skipped = true;
            summary.note = "class absent from training split";
            log::warn("fold " + std::to_string(fold) + " skipped: " + summary.note);
            report.folds.push_back(std::move(summary));
            continue;
        }
        const Standardizer scaler = fit_standardizer(data, train);
        const Matrix x_train = scaler.apply(data.rows(train));
        const Classifier model = train_model(cfg, x_train, y_train, data.n_classes, fold);

        if (external_corr) {
            summary.sigma_tilde = *external_corr;
        } else {
            const CovarianceEstimate est = graphical_lasso(empirical_covariance(x_train), cfg.alpha);
            summary.sigma_tilde = correlation_from_covariance(est.sigma_hat).sigma_tilde;
        }

        std::vector<SampleRecord> fold_records;
        for (auto idx : test) {
            const Vector x = scaler.apply(Vector(data.features.row(static_cast<Eigen::Index>(idx)).transpose()));
            const int y = data.labels[idx];
            if (predict(model, x) != y) {
                continue;
            }
            SampleRecord rec;
            rec.sample = idx;
            rec.fold = fold;
            rec.y_orig = y;
            rec.y_cf = draw_target(cfg.seed, idx, y, data.n_classes);
            rec.x_orig = x;
            rec.x_orig_raw = data.features.row(static_cast<Eigen::Index>(idx)).transpose();
            fold_records.push_back(std::move(rec));
        }
        summary.n_correct = fold_records.size();

        parallel_for(fold_records.size(), cfg.jobs, [&](std::size_t i) {
            SampleRecord& rec = fold_records[i];
            rec.baseline = baseline_counterfactual(model, rec.x_orig, rec.y_cf,
                                                   engine_options(cfg, fold, rec.sample, "baseline"));
            std::optional<Matrix> own;
            if (cfg.corr_lookup) {
                own = cfg.corr_lookup(rec.sample);
            }
            CounterfactualRequest req{rec.x_orig, rec.y_cf,
                                      ActionMapping::correlation(rec.x_orig, own ? *own : summary.sigma_tilde), {}};
            rec.mapped = compute_counterfactual(model, req, engine_options(cfg, fold, rec.sample, "correlation"));
            if (rec.baseline.found()) {
                rec.baseline_raw = scaler.invert(rec.baseline.x_cf);
            }
            if (rec.mapped.found()) {
                rec.mapped_raw = scaler.invert(rec.mapped.x_cf);
            }
            fill_pair_metrics(rec, true);
        });
        for (auto& rec : fold_records) {
            const auto [v, t] = count_valid(model, rec);
            valid += v;
            total += t;
            report.records.push_back(std::move(rec));
        }
        report.folds.push_back(std::move(summary));
    }
    report.aggregates = compute_aggregates(report.records, report.dim);
    report.aggregates.validity_rate = total == 0 ? 1.0 : static_cast<double>(valid) / static_cast<double>(total);
    return report;
}

ExperimentReport run_plausibility_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.experiment != "plausibility") {
        throw InvalidArgument("configuration is not a plausibility experiment");
    }
    const LabeledDataset data = load_named_dataset(cfg.data_dir, cfg.dataset);
    const FoldPlan plan = make_folds(data.size(), cfg.folds, cfg.seed, &data.labels);
    if (cfg.dump_lp) {
        std::filesystem::create_directories(*cfg.dump_lp);
    }

    ExperimentReport report;
    report.config = cfg;
    report.dim = data.dim();

    // A single split: fold 0 is held out, the remaining folds train the
    // classifier and the codebook.
    const std::size_t fold = 0;
    FoldSummary summary;
    summary.fold = fold;
    const IndexSet train = plan.train_rows(fold);
    const IndexSet test = plan.test_rows(fold);
    summary.n_train = train.size();
    summary.n_test = test.size();
    const Labels y_train = data.labels_at(train);
    const Standardizer scaler = fit_standardizer(data, train);
    const Matrix x_train = scaler.apply(data.rows(train));
    const Classifier model = train_model(cfg, x_train, y_train, data.n_classes, fold);

    Codebook cb;
    if (cfg.codebook) {
        cb = load_codebook(*cfg.codebook);
        if (cb.dim() != data.dim()) {
            throw DimensionMismatch("supplied codebook does not match the dataset dimension");
        }
    } else {
        CodebookTraining opts;
        opts.atoms = cfg.atoms;
        opts.lambda = cfg.lambda;
        opts.epochs = cfg.codebook_epochs;
        opts.seed = derive_seed(cfg.seed, kCodebookStream);
        CodebookFit fit = learn_codebook(x_train, opts);
        cb = std::move(fit.codebook);
        report.codebook_objective = std::move(fit.objective_trace);
    }

    // Reconstruction error of the held-out fold under the plain encoder.
    double err_sum = 0.0;
    double err_max = 0.0;
    for (auto idx : test) {
        const Vector x = scaler.apply(Vector(data.features.row(static_cast<Eigen::Index>(idx)).transpose()));
        const double err = (decode(cb, encode(cb, x, false)) - x).norm();
        err_sum += err;
        err_max = std::max(err_max, err);
    }
    report.reconstruction_error_mean = test.empty() ? 0.0 : err_sum / static_cast<double>(test.size());
    report.reconstruction_error_max = err_max;
    log::info("codebook reconstruction error on held-out fold: mean " + std::to_string(report.reconstruction_error_mean) +
              ", max " + std::to_string(err_max));

    std::vector<SampleRecord> records;
    for (auto idx : test) {
        const Vector x = scaler.apply(Vector(data.features.row(static_cast<Eigen::Index>(idx)).transpose()));
        const int y = data.labels[idx];
        if (predict(model, x) != y) {
            continue;
        }
        SampleRecord rec;
        rec.sample = idx;
        rec.fold = fold;
        rec.y_orig = y;
        rec.y_cf = draw_target(cfg.seed, idx, y, data.n_classes);
        rec.x_orig = x;
        rec.x_orig_raw = data.features.row(static_cast<Eigen::Index>(idx)).transpose();
        records.push_back(std::move(rec));
    }
    summary.n_correct = records.size();
    Rng sampler(derive_seed(cfg.seed, kSampleStream));
    sampler.shuffle(records);
    if (records.size() > cfg.samples) {
        records.resize(cfg.samples);
    }
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.sample < b.sample; });

    const HullMode other = cfg.hull_mode == HullMode::HullExact ? HullMode::LemmaStrict : HullMode::HullExact;
    parallel_for(records.size(), cfg.jobs, [&](std::size_t i) {
        SampleRecord& rec = records[i];
        rec.baseline =
            baseline_counterfactual(model, rec.x_orig, rec.y_cf, engine_options(cfg, fold, rec.sample, "baseline"));
        // Both hull modes start from the sample's plain nonnegative code so
        // their feasible sets are nested.
        const Vector z0 = encode(cb, rec.x_orig, false);
        CounterfactualRequest req{rec.x_orig, rec.y_cf, ActionMapping::codebook(cb, z0, cfg.hull_mode), {}};
        rec.mapped = compute_counterfactual(model, req, engine_options(cfg, fold, rec.sample, "codebook"));
        req.mapping = ActionMapping::codebook(cb, z0, other);
        rec.alternate = compute_counterfactual(model, req, engine_options(cfg, fold, rec.sample, "codebook_alt"));
        if (rec.baseline.found()) {
            rec.baseline_raw = scaler.invert(rec.baseline.x_cf);
        }
        if (rec.mapped.found()) {
            rec.mapped_raw = scaler.invert(rec.mapped.x_cf);
            rec.hull_member = hull_membership(cb, rec.mapped.x_cf).member;
        }
        if (rec.alternate->found()) {
            rec.alternate_hull_member = hull_membership(cb, rec.alternate->x_cf).member;
        }
        fill_pair_metrics(rec, false);
    });

    std::size_t valid = 0;
    std::size_t total = 0;
    for (const auto& rec : records) {
        const auto [v, t] = count_valid(model, rec);
        valid += v;
        total += t;
    }
    report.records = std::move(records);
    report.folds.push_back(std::move(summary));
    report.codebook = cb;
    report.aggregates = compute_aggregates(report.records, report.dim);
    report.aggregates.validity_rate = total == 0 ? 1.0 : static_cast<double>(valid) / static_cast<double>(total);
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    return cfg.experiment == "plausibility" ? run_plausibility_experiment(cfg) : run_dependency_experiment(cfg);
}

nlohmann::ordered_json to_json(const ExperimentReport& report) {
    nlohmann::ordered_json doc;
    doc["format"] = "cfx-report";
    doc["version"] = 1;
    doc["config"] = report.config.to_json();
    doc["dim"] = report.dim;

    auto folds = nlohmann::ordered_json::array();
    for (const auto& f : report.folds) {
        nlohmann::ordered_json fj;
        fj["fold"] = f.fold;
        fj["n_train"] = f.n_train;
        fj["n_test"] = f.n_test;
        fj["n_correct"] = f.n_correct;
        fj["accuracy"] = f.n_test ? static_cast<double>(f.n_correct) / static_cast<double>(f.n_test) : 0.0;
        fj["skipped"] = f.skipped;
        if (!f.note.empty()) {
            fj["note"] = f.note;
        }
        if (f.sigma_tilde.size() > 0) {
            fj["sigma_tilde"] = matrix_json(f.sigma_tilde);
        }
        folds.push_back(std::move(fj));
    }
    doc["folds"] = std::move(folds);

    auto records = nlohmann::ordered_json::array();
    for (const auto& r : report.records) {
        nlohmann::ordered_json rj;
        rj["sample"] = r.sample;
        rj["fold"] = r.fold;
        rj["y_orig"] = r.y_orig;
        rj["y_cf"] = r.y_cf;
        rj["x_orig"] = vector_json(r.x_orig);
        rj["baseline"] = result_json(r.baseline, r.baseline_raw);
        rj["mapped"] = result_json(r.mapped, r.mapped_raw);
        if (r.alternate) {
            rj["alternate"] = result_json(*r.alternate, Vector());
        }
        rj["distance"] = number_or_null(r.distance);
        rj["delta_distance"] = number_or_null(r.delta_distance);
        rj["overlap"] = r.overlap >= 0 ? nlohmann::ordered_json(r.overlap) : nlohmann::ordered_json(nullptr);
        if (r.hull_member) {
            rj["hull_member"] = *r.hull_member;
        }
        if (r.alternate_hull_member) {
            rj["alternate_hull_member"] = *r.alternate_hull_member;
        }
        records.push_back(std::move(rj));
    }
    doc["records"] = std::move(records);

    const Aggregates& a = report.aggregates;
    nlohmann::ordered_json aj;
    aj["n_records"] = a.n_records;
    aj["n_pairs"] = a.n_pairs;
    aj["median_distance"] = number_or_null(a.median_distance);
    aj["median_delta_distance"] = number_or_null(a.median_delta_distance);
    aj["overlap_quartiles"] = {number_or_null(a.overlap_quartiles[0]), number_or_null(a.overlap_quartiles[1]),
                               number_or_null(a.overlap_quartiles[2])};
    aj["mean_overlap"] = number_or_null(a.mean_overlap);
    aj["mean_disagreement"] = number_or_null(a.mean_disagreement);
    aj["baseline_feasibility"] = a.baseline_feasibility;
    aj["mapped_feasibility"] = a.mapped_feasibility;
    aj["feasibility_rate"] = a.feasibility_rate;
    aj["validity_rate"] = a.validity_rate;
    doc["aggregates"] = std::move(aj);

    if (report.codebook) {
        nlohmann::ordered_json cj;
        cj["atoms"] = report.codebook->atoms();
        cj["lambda"] = report.codebook->lambda;
        cj["objective_trace"] = report.codebook_objective;
        cj["reconstruction_error_mean"] = number_or_null(report.reconstruction_error_mean);
        cj["reconstruction_error_max"] = number_or_null(report.reconstruction_error_max);
        doc["codebook"] = std::move(cj);
    }
    return doc;
}

std::string report_json_text(const ExperimentReport& report) { return to_json(report).dump(1) + "\n"; }

bool has_infeasible_only_fold(const ExperimentReport& report) {
    for (const auto& f : report.folds) {
        bool any = false;
        bool found = false;
        for (const auto& r : report.records) {
            if (r.fold == f.fold) {
                any = true;
                found = found || r.mapped.found();
            }
        }
        if (any && !found) {
            return true;
        }
    }
    return false;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    {
        std::ofstream out(dir / "report.json");
        if (!out) {
            throw IoError("cannot write " + (dir / "report.json").string());
        }
        out << report_json_text(report);
    }
    {
        std::ofstream out(dir / "records.csv");
        if (!out) {
            throw IoError("cannot write " + (dir / "records.csv").string());
        }
        out << "sample,fold,y_orig,y_cf,baseline_status,mapped_status,baseline_objective,mapped_objective,distance,"
               "delta_distance,overlap\n";
        auto num = [](double v) { return std::isfinite(v) ? format_number(v) : std::string(); };
        for (const auto& r : report.records) {
            out << r.sample << ',' << r.fold << ',' << r.y_orig << ',' << r.y_cf << ',' << to_string(r.baseline.status)
                << ',' << to_string(r.mapped.status) << ','
                << (r.baseline.found() ? format_number(r.baseline.objective) : "") << ','
                << (r.mapped.found() ? format_number(r.mapped.objective) : "") << ',' << num(r.distance) << ','
                << num(r.delta_distance) << ',' << (r.overlap >= 0 ? std::to_string(r.overlap) : "") << '\n';
        }
    }
    {
        std::ofstream out(dir / "folds.csv");
        if (!out) {
            throw IoError("cannot write " + (dir / "folds.csv").string());
        }
        out << "fold,n_train,n_test,n_correct,skipped\n";
        for (const auto& f : report.folds) {
            out << f.fold << ',' << f.n_train << ',' << f.n_test << ',' << f.n_correct << ',' << (f.skipped ? 1 : 0)
                << '\n';
        }
    }
    if (report.config.experiment == "plausibility") {
        emit_images(report, dir / "images");
        if (report.codebook) {
            save_codebook(*report.codebook, dir / "codebook.json");
        }
    }
}

}  // namespace cfx

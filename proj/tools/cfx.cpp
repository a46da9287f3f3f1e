#include "cfx/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual explanations via linear programming"};
    app.require_subcommand(1);

    cfx::ExperimentConfig cfg;
    cfg.data_dir = CFX_DATA_DIR;
    std::string out_dir;
    std::string data_dir = cfg.data_dir.string();
    std::string corr_matrix;
    std::string codebook;
    std::string dump_lp;
    const std::map<std::string, cfx::HullMode> hull_modes{{"exact", cfx::HullMode::HullExact},
                                                          {"lemma", cfx::HullMode::LemmaStrict}};

    auto* run = app.add_subcommand("run", "Run an experiment and write its report");
    run->add_option("--experiment", cfg.experiment, "Experiment to run")
        ->check(CLI::IsMember({"dependency", "plausibility"}))
        ->required();
    run->add_option("--dataset", cfg.dataset, "Dataset name")
        ->check(CLI::IsMember({"iris", "wine", "breastcancer", "digits"}))
        ->required();
    run->add_option("--model", cfg.model, "Classifier")->check(CLI::IsMember({"softmax", "glvq"}))->capture_default_str();
    run->add_option("--folds", cfg.folds, "Cross-validation folds")->check(CLI::Range(2, 1000))->capture_default_str();
    run->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    run->add_option("--alpha", cfg.alpha, "Graphical lasso penalty")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--atoms", cfg.atoms, "Codebook size")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--lambda", cfg.lambda, "Codebook sparsity penalty")->check(CLI::NonNegativeNumber)->capture_default_str();
    run->add_option("--samples", cfg.samples, "Test digits sampled by the plausibility experiment")->capture_default_str();
    run->add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    std::optional<std::size_t> epochs;
    std::optional<double> lr;
    run->add_option("--epochs", epochs, "Classifier training epochs");
    run->add_option("--lr", lr, "Classifier learning rate")->check(CLI::PositiveNumber);
    run->add_option("--l2", cfg.softmax.l2, "Softmax weight decay")->check(CLI::NonNegativeNumber)->capture_default_str();
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--data-dir", data_dir, "Directory holding the dataset CSVs")->capture_default_str();
    run->add_option("--corr-matrix", corr_matrix, "CSV correlation matrix replacing the estimated one")
        ->check(CLI::ExistingFile);
    run->add_option("--codebook", codebook, "Codebook JSON replacing the learned one")->check(CLI::ExistingFile);
    run->add_option("--hull-mode", cfg.hull_mode, "Codebook hull constraints")
        ->transform(CLI::CheckedTransformer(hull_modes, CLI::ignore_case))
        ->default_str("exact");
    run->add_option("--dump-lp", dump_lp, "Write every linear program to this directory");

    CLI11_PARSE(app, argc, argv);

    cfg.data_dir = data_dir;
    if (epochs) {
        cfg.softmax.epochs = *epochs;
        cfg.glvq.epochs = *epochs;
    }
    if (lr) {
        cfg.softmax.lr = *lr;
        cfg.glvq.lr = *lr;
    }
    if (!corr_matrix.empty()) {
        cfg.corr_matrix = corr_matrix;
    }
    if (!codebook.empty()) {
        cfg.codebook = codebook;
    }
    if (!dump_lp.empty()) {
        cfg.dump_lp = dump_lp;
    }

    try {
        const cfx::ExperimentReport report = cfx::run_experiment(cfg);
        cfx::write_report(report, out_dir);
        const auto& a = report.aggregates;
        std::cout << cfg.experiment << " " << cfg.dataset << " " << cfg.model << ": " << a.n_records << " samples, "
                  << a.n_pairs << " pairs, median distance " << a.median_distance << ", mean overlap "
                  << a.mean_overlap << "\n";
        if (cfx::has_infeasible_only_fold(report)) {
            cfx::log::warn("a fold produced no feasible mapped counterfactual");
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

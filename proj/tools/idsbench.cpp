#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "idskit/bench.hpp"
#include "idskit/threading.hpp"

namespace {

/// --flag beats env var beats config file.
void apply_overrides(idskit::ExperimentConfig& cfg, const std::string& out_flag,
                     int threads_flag, long long seed_flag, bool seed_set) {
    if (const char* env = std::getenv("IDSBENCH_OUT"); env && *env) cfg.output_dir = env;
    if (const char* env = std::getenv("IDSBENCH_THREADS"); env && *env)
        cfg.threads = std::atoi(env);
    if (!out_flag.empty()) cfg.output_dir = out_flag;
    if (threads_flag > 0) cfg.threads = threads_flag;
    if (seed_set) cfg.seed = static_cast<std::uint64_t>(seed_flag);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble-learning benchmark harness for network intrusion detection"};
    app.require_subcommand(1);

    std::string config_path, out_dir, bundle_dir, format = "text";
    int threads = 0;
    long long seed = 0;
    bool parallel_methods = false;

    auto* run = app.add_subcommand("run", "Run an experiment from a config file");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory (overrides config)");
    run->add_option("--threads", threads, "Thread budget (overrides config)");
    auto* seed_opt = run->add_option("--seed", seed, "Master seed (overrides config)");
    run->add_flag("--parallel-methods", parallel_methods,
                  "Train methods concurrently; disables the runtime table");

    auto* validate = app.add_subcommand("validate", "Validate a config without running it");
    validate->add_option("--config", config_path, "Experiment config (JSON)")->required();

    auto* report = app.add_subcommand("report", "Re-render reports from a bundle directory");
    report->add_option("--bundle", bundle_dir, "Bundle directory")->required();
    report->add_option("--format", format, "csv|text|json")
        ->check(CLI::IsMember({"csv", "text", "json"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto cfg = idskit::experiment_from_json_file(config_path);
            apply_overrides(cfg, out_dir, threads, seed, seed_opt->count() > 0);
            if (parallel_methods) cfg.parallel_methods = true;
            cfg.validate();
            const auto bundle = idskit::run_experiment(cfg);
            std::cout << idskit::render_ranking_text(bundle);
            std::cout << "bundle written to " << cfg.output_dir << "\n";
        } else if (*validate) {
            idskit::experiment_from_json_file(config_path);
            std::cout << "config OK: " << config_path << "\n";
        } else if (*report) {
            const auto bundle = idskit::load_bundle(bundle_dir);
            if (format == "csv")
                std::cout << idskit::render_ranking_csv(bundle);
            else if (format == "json")
                std::cout << idskit::bundle_to_json(bundle) << "\n";
            else
                std::cout << idskit::render_ranking_text(bundle);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "idskit/ensembles.hpp"
#include "idskit/flowdata.hpp"
#include "idskit/metrics.hpp"

namespace idskit {

/// One named method row of an experiment: a base learner or an ensemble.
struct MethodConfig {
    std::string name;
    bool is_ensemble = false;
    MemberKind learner = MemberKind::decision_tree;  // when !is_ensemble
    TrainConfig train;
    EnsembleSpec ensemble;  // when is_ensemble
    /// Heavy methods train on the stratified subsample_fraction slice.
    bool heavy = false;
};

struct DatasetConfig {
    std::string schema_path;
    std::vector<std::string> files;
    std::optional<SynthSpec> synthetic;
};

struct ExperimentConfig {
    int version = 1;
    std::string name = "experiment";
    DatasetConfig dataset;
    double test_fraction = 0.3;
    std::uint64_t seed = 42;
    std::optional<double> subsample_fraction;
    std::vector<MethodConfig> methods;
    std::string output_dir;
    int threads = 0;  // 0 = hardware default
    bool parallel_methods = false;

    void validate() const;
};

ExperimentConfig experiment_from_json_text(const std::string& text);
ExperimentConfig experiment_from_json_file(const std::string& path);

struct MethodResult {
    std::string name;
    bool failed = false;
    std::string error;
    MetricReport report;
    RuntimeRecord runtime;
    std::size_t train_rows = 0;
    std::uint64_t seed = 0;
};

struct ReportBundle {
    std::string experiment_name;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string config_hash;
    bool runtimes_valid = true;
    std::vector<MethodResult> results;  // config order
    std::vector<std::string> ranking;   // ranked method names (failures excluded)
};

/// Full protocol: load/synthesize, preprocess, split once, train and score
/// every method, rank, and write the bundle atomically to cfg.output_dir.
ReportBundle run_experiment(const ExperimentConfig& cfg);

/// Serializes a complete bundle into `out_dir` (temp dir + rename):
/// ranking.csv/.txt, per-method metrics.json + confusion.csv (+ runtime.json),
/// bundle.json, and a manifest.json with a sha256 per artifact.
void emit_reports(const ReportBundle& bundle, const std::string& out_dir);

ReportBundle load_bundle(const std::string& dir);

std::string render_ranking_text(const ReportBundle& bundle);
std::string render_ranking_csv(const ReportBundle& bundle);
std::string bundle_to_json(const ReportBundle& bundle);

/// Per-method seed derivation, part of the reproducibility contract.
std::uint64_t method_seed(std::uint64_t master_seed, const std::string& method_name);

}  // namespace idskit

#include "idskit/bench.hpp"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "idskit/hash.hpp"
#include "idskit/rng.hpp"
#include "idskit/threading.hpp"

namespace idskit {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string sanitize(const std::string& name) {
    std::string out;
    for (char ch : name)
        out.push_back(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_'
                          ? ch
                          : '_');
    return out;
}

// --- config parsing ---

void parse_train(const json& j, TrainConfig& cfg) {
    if (j.contains("dt")) {
        const auto& d = j["dt"];
        cfg.dt.max_depth = d.value("max_depth", cfg.dt.max_depth);
        cfg.dt.min_samples_split = d.value("min_samples_split", cfg.dt.min_samples_split);
    }
    if (j.contains("lr")) {
        const auto& d = j["lr"];
        cfg.lr.learning_rate = d.value("learning_rate", cfg.lr.learning_rate);
        cfg.lr.max_iters = d.value("max_iters", cfg.lr.max_iters);
        cfg.lr.l2 = d.value("l2", cfg.lr.l2);
        cfg.lr.tol = d.value("tol", cfg.lr.tol);
    }
    if (j.contains("knn")) cfg.knn.k = j["knn"].value("k", cfg.knn.k);
    if (j.contains("mlp")) {
        const auto& d = j["mlp"];
        if (d.contains("hidden")) cfg.mlp.hidden = d["hidden"].get<std::vector<std::size_t>>();
        cfg.mlp.alpha = d.value("alpha", cfg.mlp.alpha);
        cfg.mlp.learning_rate = d.value("learning_rate", cfg.mlp.learning_rate);
        cfg.mlp.max_iters = d.value("max_iters", cfg.mlp.max_iters);
        cfg.mlp.batch_cap = d.value("batch_cap", cfg.mlp.batch_cap);
    }
}

void parse_rf(const json& j, RfParams& rf) {
    rf.n_estimators = j.value("n_estimators", rf.n_estimators);
    rf.max_depth = j.value("max_depth", rf.max_depth);
    rf.min_samples_split = j.value("min_samples_split", rf.min_samples_split);
    rf.n_split_features = j.value("n_split_features", rf.n_split_features);
}

MemberSpec parse_member(const json& j) {
    MemberSpec m;
    m.kind = member_kind_from_string(j.value("kind", "decision_tree"));
    parse_train(j, m.train);
    if (j.contains("rf")) parse_rf(j["rf"], m.rf);
    m.use_pca = j.value("use_pca", false);
    if (j.contains("pca_k")) m.pca_k = j["pca_k"].get<std::size_t>();
    return m;
}

MemberSpec quick_member(MemberKind kind, bool use_pca = false) {
    MemberSpec m;
    m.kind = kind;
    m.use_pca = use_pca;
    return m;
}

/// Member rosters used by the shipped experiment configs when a method does
/// not list its own.
std::vector<MemberSpec> default_members(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::average:
        case EnsembleKind::weighted_vote:
        case EnsembleKind::max_vote:
            return {quick_member(MemberKind::decision_tree), quick_member(MemberKind::knn),
                    quick_member(MemberKind::random_forest)};
        case EnsembleKind::stacking:
            return {quick_member(MemberKind::random_forest, true),
                    quick_member(MemberKind::mlp, true),
                    quick_member(MemberKind::logistic_regression, true),
                    quick_member(MemberKind::decision_tree, true)};
        case EnsembleKind::blending:
            return {quick_member(MemberKind::random_forest), quick_member(MemberKind::mlp),
                    quick_member(MemberKind::logistic_regression),
                    quick_member(MemberKind::decision_tree)};
        case EnsembleKind::bagging:
            return {quick_member(MemberKind::random_forest), quick_member(MemberKind::mlp),
                    quick_member(MemberKind::logistic_regression),
                    quick_member(MemberKind::decision_tree)};
        default: return {};
    }
}

MethodConfig parse_method(const json& j) {
    MethodConfig m;
    m.name = j.value("name", "");
    if (m.name.empty()) throw ConfigError("method without a name");
    std::string type = j.value("type", "");
    if (type.empty()) throw ConfigError("method '" + m.name + "' has no type");
    m.heavy = j.value("heavy", false);

    // base learners
    if (type == "dt" || type == "decision_tree" || type == "lr" ||
        type == "logistic_regression" || type == "knn" || type == "mlp") {
        m.is_ensemble = false;
        m.learner = member_kind_from_string(type);
        parse_train(j, m.train);
        return m;
    }

    m.is_ensemble = true;
    EnsembleSpec& e = m.ensemble;
    if (type == "xgb_style") {
        e.kind = EnsembleKind::gradient_boost;
        e.gb = GbParams::xgb_style_preset();
    } else if (type == "cat_style") {
        // CAT rows are covered by the gradient-boost engine (lr 0.1).
        e.kind = EnsembleKind::gradient_boost;
        e.gb = GbParams{0.1, 6, 100, 0.0};
    } else {
        e.kind = ensemble_kind_from_string(type);
        if (e.kind == EnsembleKind::gradient_boost) e.gb = GbParams::gb_preset();
    }

    if (j.contains("members")) {
        for (const auto& mj : j["members"]) e.members.push_back(parse_member(mj));
    } else {
        e.members = default_members(e.kind);
    }
    if (j.contains("weights")) e.weights = j["weights"].get<std::vector<double>>();
    else if (e.kind == EnsembleKind::weighted_vote && e.members.size() == 3)
        e.weights = {0.4, 0.3, 0.3};  // DT / KNN / RF shares
    if (j.contains("meta")) e.meta = parse_member(j["meta"]);
    e.holdout_fraction = j.value("holdout_fraction", e.holdout_fraction);
    e.n_estimators = j.value("n_estimators", e.n_estimators);
    e.n_folds = j.value("n_folds", e.n_folds);
    if (j.contains("rf")) parse_rf(j["rf"], e.rf);
    if (j.contains("ada")) e.ada.rounds = j["ada"].value("rounds", e.ada.rounds);
    if (j.contains("gb")) {
        const auto& g = j["gb"];
        e.gb.learning_rate = g.value("learning_rate", e.gb.learning_rate);
        e.gb.max_depth = g.value("max_depth", e.gb.max_depth);
        e.gb.rounds = g.value("rounds", e.gb.rounds);
        e.gb.l2_leaf = g.value("l2_leaf", e.gb.l2_leaf);
    }
    return m;
}

SynthSpec parse_synth(const json& j) {
    SynthSpec s;
    s.n_samples = j.value("n_samples", s.n_samples);
    if (j.contains("class_mix")) s.class_mix = j["class_mix"].get<std::vector<double>>();
    s.separability = j.value("separability", s.separability);
    s.n_features = j.value("n_features", s.n_features);
    s.seed = j.value("seed", s.seed);
    s.clusters_per_class = j.value("clusters_per_class", s.clusters_per_class);
    return s;
}

/// Canonical config serialization; hashed into the bundle's environment echo.
json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["version"] = cfg.version;
    j["name"] = cfg.name;
    j["seed"] = cfg.seed;
    j["test_fraction"] = cfg.test_fraction;
    if (cfg.subsample_fraction) j["subsample_fraction"] = *cfg.subsample_fraction;
    j["threads"] = cfg.threads;
    j["parallel_methods"] = cfg.parallel_methods;
    if (cfg.dataset.synthetic) {
        const auto& s = *cfg.dataset.synthetic;
        j["dataset"] = {{"synthetic",
                         {{"n_samples", s.n_samples},
                          {"class_mix", s.class_mix},
                          {"separability", s.separability},
                          {"n_features", s.n_features},
                          {"seed", s.seed},
                          {"clusters_per_class", s.clusters_per_class}}}};
    } else {
        j["dataset"] = {{"schema", cfg.dataset.schema_path}, {"files", cfg.dataset.files}};
    }
    json methods = json::array();
    for (const auto& m : cfg.methods) {
        json mj;
        mj["name"] = m.name;
        mj["heavy"] = m.heavy;
        mj["type"] = m.is_ensemble ? to_string(m.ensemble.kind) : to_string(m.learner);
        if (m.is_ensemble) {
            json members = json::array();
            for (const auto& mem : m.ensemble.members) {
                members.push_back({{"kind", to_string(mem.kind)}, {"use_pca", mem.use_pca}});
            }
            mj["members"] = members;
            if (!m.ensemble.weights.empty()) mj["weights"] = m.ensemble.weights;
            mj["seed"] = m.ensemble.seed;
        }
        methods.push_back(mj);
    }
    j["methods"] = methods;
    return j;
}

}  // namespace

std::uint64_t method_seed(std::uint64_t master_seed, const std::string& method_name) {
    return derive_seed(master_seed, std::string_view(method_name));
}

void ExperimentConfig::validate() const {
    if (version != 1) throw ConfigError("unsupported config version " + std::to_string(version));
    if (methods.empty()) throw ConfigError("experiment has no methods");
    std::unordered_set<std::string> names;
    for (const auto& m : methods) {
        if (!names.insert(sanitize(m.name)).second)
            throw ConfigError("duplicate method name '" + m.name + "'");
        if (m.is_ensemble) m.ensemble.validate();
        if (m.heavy && !subsample_fraction)
            throw ConfigError("method '" + m.name +
                              "' is marked heavy but no subsample_fraction is set");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("test_fraction must lie in (0, 1)");
    if (subsample_fraction && !(*subsample_fraction > 0.0 && *subsample_fraction <= 1.0))
        throw ConfigError("subsample_fraction must lie in (0, 1]");
    if (!dataset.synthetic && dataset.files.empty())
        throw ConfigError("dataset: need csv files or a synthetic spec");
    if (!dataset.synthetic && dataset.schema_path.empty())
        throw ConfigError("dataset: csv input requires a schema");
    if (output_dir.empty()) throw ConfigError("output_dir is required");
}

ExperimentConfig experiment_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config JSON parse failure: ") + e.what());
    }
    ExperimentConfig cfg;
    cfg.version = j.value("version", 1);
    cfg.name = j.value("name", cfg.name);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("split")) {
        cfg.test_fraction = j["split"].value("test_fraction", cfg.test_fraction);
        cfg.seed = j["split"].value("seed", cfg.seed);
    }
    cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
    if (j.contains("subsample_fraction"))
        cfg.subsample_fraction = j["subsample_fraction"].get<double>();
    cfg.threads = j.value("threads", cfg.threads);
    cfg.parallel_methods = j.value("parallel_methods", cfg.parallel_methods);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        if (d.contains("synthetic")) cfg.dataset.synthetic = parse_synth(d["synthetic"]);
        if (d.contains("schema")) cfg.dataset.schema_path = d["schema"].get<std::string>();
        if (d.contains("files")) cfg.dataset.files = d["files"].get<std::vector<std::string>>();
    }
    if (j.contains("methods"))
        for (const auto& mj : j["methods"]) {
            auto method = parse_method(mj);
            method.ensemble.seed = method_seed(cfg.seed, method.name);
            method.train.seed = method.ensemble.seed;
            cfg.methods.push_back(std::move(method));
        }
    cfg.validate();
    return cfg;
}

ExperimentConfig experiment_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open experiment config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return experiment_from_json_text(ss.str());
}

namespace {

FeatureMatrix materialize_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset.synthetic) return synth_dataset(*cfg.dataset.synthetic);
    const DatasetSchema schema = schema_from_json_file(cfg.dataset.schema_path);
    const RawTable raw = load_tables(cfg.dataset.files, schema);
    auto [matrix, report] = preprocess(raw, schema);
    (void)report;
    return matrix;
}

ModelPtr fit_method(const MethodConfig& method, const FeatureMatrix& train,
                    std::uint64_t seed) {
    if (method.is_ensemble) {
        EnsembleSpec spec = method.ensemble;
        spec.seed = seed;
        return fit_ensemble(spec, train);
    }
    TrainConfig cfg = method.train;
    cfg.seed = seed;
    switch (method.learner) {
        case MemberKind::decision_tree: return fit_decision_tree(train, cfg);
        case MemberKind::logistic_regression: return fit_logistic_regression(train, cfg);
        case MemberKind::knn: return fit_knn(train, cfg);
        case MemberKind::mlp: return fit_mlp(train, cfg);
        case MemberKind::random_forest: {
            EnsembleSpec spec;
            spec.kind = EnsembleKind::random_forest;
            spec.seed = seed;
            return fit_random_forest(spec, train);
        }
    }
    throw ConfigError("fit_method: unknown learner");
}

}  // namespace

ReportBundle run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.threads > 0) set_thread_budget(cfg.threads);

    const FeatureMatrix data = materialize_dataset(cfg);
    auto [train_idx, test_idx] = stratified_split_indices(data, cfg.test_fraction, cfg.seed);

    // Split bookkeeping: no fit may ever touch a test row.
    {
        std::unordered_set<std::size_t> train_set(train_idx.begin(), train_idx.end());
        for (std::size_t t : test_idx)
            if (train_set.count(t))
                throw SplitError("split bookkeeping violation: row " + std::to_string(t) +
                                 " appears in both train and test");
        if (train_idx.size() + test_idx.size() != data.n_samples())
            throw SplitError("split bookkeeping violation: split does not cover the dataset");
    }

    const FeatureMatrix train = take_rows(data, train_idx);
    const FeatureMatrix test = take_rows(data, test_idx);

    ReportBundle bundle;
    bundle.experiment_name = cfg.name;
    bundle.seed = cfg.seed;
    bundle.threads = cfg.threads;
    bundle.config_hash = sha256_hex(config_to_json(cfg).dump());
    bundle.runtimes_valid = !cfg.parallel_methods;
    bundle.results.resize(cfg.methods.size());

    auto run_one = [&](std::size_t i) {
        const MethodConfig& method = cfg.methods[i];
        MethodResult& result = bundle.results[i];
        result.name = method.name;
        result.seed = method_seed(cfg.seed, method.name);
        try {
            FeatureMatrix method_train = train;
            if (method.heavy && cfg.subsample_fraction && *cfg.subsample_fraction < 1.0)
                method_train = stratified_subsample(train, *cfg.subsample_fraction, result.seed);
            result.train_rows = method_train.n_samples();

            auto [model, fit_seconds] = time_phase(method.name + ":fit", [&] {
                return fit_method(method, method_train, result.seed);
            });
            auto [pred, predict_seconds] = time_phase(method.name + ":predict", [&] {
                return model->predict(test.X);
            });
            result.runtime = {method.name, fit_seconds, predict_seconds,
                              fit_seconds + predict_seconds};
            const ConfusionMatrix cm =
                confusion_matrix(test.y, pred, data.n_classes(), data.class_names);
            result.report = classification_report(cm);
        } catch (const std::exception& e) {
            result.failed = true;
            result.error = e.what();
        }
    };

    if (cfg.parallel_methods) {
        parallel_for(cfg.methods.size(), run_one);
        for (auto& r : bundle.results) r.runtime = {r.name, 0.0, 0.0, 0.0};
    } else {
        for (std::size_t i = 0; i < cfg.methods.size(); ++i) run_one(i);
    }

    std::vector<RankedEntry> entries;
    for (const auto& r : bundle.results)
        if (!r.failed) entries.push_back({r.name, r.report, r.runtime});
    if (!entries.empty()) {
        for (const auto& e : rank_models(std::move(entries))) bundle.ranking.push_back(e.name);
    }

    if (!cfg.output_dir.empty()) emit_reports(bundle, cfg.output_dir);
    return bundle;
}

// --- emission ---

namespace {

json runtime_to_json(const RuntimeRecord& r) {
    return {{"model", r.model_name},
            {"fit_seconds", r.fit_seconds},
            {"predict_seconds", r.predict_seconds},
            {"total_seconds", r.total_seconds}};
}

const MethodResult& result_by_name(const ReportBundle& bundle, const std::string& name) {
    for (const auto& r : bundle.results)
        if (r.name == name) return r;
    throw ConfigError("bundle is missing ranked method '" + name + "'");
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string render_ranking_csv(const ReportBundle& bundle) {
    std::ostringstream out;
    out << "rank,model,accuracy,precision,recall,f1";
    if (bundle.runtimes_valid) out << ",total_seconds";
    out << '\n';
    std::size_t rank = 1;
    for (const auto& name : bundle.ranking) {
        const auto& r = result_by_name(bundle, name);
        out << rank++ << ',' << name << ',' << r.report.accuracy << ','
            << r.report.weighted_precision << ',' << r.report.weighted_recall << ','
            << r.report.weighted_f1;
        if (bundle.runtimes_valid) out << ',' << r.runtime.total_seconds;
        out << '\n';
    }
    return out.str();
}

std::string render_ranking_text(const ReportBundle& bundle) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-4s %-28s %-8s %-8s %-8s %-8s %-12s\n", "#", "Models",
                  "ACC", "PRE", "REC", "F1", bundle.runtimes_valid ? "Time (s)" : "");
    out << line;
    std::size_t rank = 1;
    for (const auto& name : bundle.ranking) {
        const auto& r = result_by_name(bundle, name);
        if (bundle.runtimes_valid)
            std::snprintf(line, sizeof line, "%-4zu %-28s %-8.4f %-8.4f %-8.4f %-8.4f %-12.3f\n",
                          rank, name.c_str(), r.report.accuracy, r.report.weighted_precision,
                          r.report.weighted_recall, r.report.weighted_f1,
                          r.runtime.total_seconds);
        else
            std::snprintf(line, sizeof line, "%-4zu %-28s %-8.4f %-8.4f %-8.4f %-8.4f\n", rank,
                          name.c_str(), r.report.accuracy, r.report.weighted_precision,
                          r.report.weighted_recall, r.report.weighted_f1);
        out << line;
        ++rank;
    }
    for (const auto& r : bundle.results)
        if (r.failed) out << "--   " << r.name << "  FAILED: " << r.error << '\n';
    return out.str();
}

std::string bundle_to_json(const ReportBundle& bundle) {
    json j;
    j["version"] = 1;
    j["experiment"] = bundle.experiment_name;
    j["environment"] = {{"seed", bundle.seed},
                        {"threads", bundle.threads},
                        {"config_hash", bundle.config_hash},
                        {"runtimes_valid", bundle.runtimes_valid}};
    json results = json::array();
    for (const auto& r : bundle.results) {
        json rj;
        rj["name"] = r.name;
        rj["seed"] = r.seed;
        rj["failed"] = r.failed;
        if (r.failed) {
            rj["error"] = r.error;
        } else {
            rj["train_rows"] = r.train_rows;
            rj["metrics"] = json::parse(r.report.to_json());
            if (bundle.runtimes_valid) rj["runtime"] = runtime_to_json(r.runtime);
            rj["confusion_csv"] = "methods/" + sanitize(r.name) + "/confusion.csv";
        }
        results.push_back(rj);
    }
    j["results"] = results;
    j["ranking"] = bundle.ranking;
    return j.dump(2);
}

void emit_reports(const ReportBundle& bundle, const std::string& out_dir) {
    if (bundle.results.empty()) throw ConfigError("emit_reports: empty bundle");
    const fs::path target(out_dir);
    if (fs::exists(target))
        throw IoError("output directory already exists: " + out_dir);

    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    fs::create_directories(tmp);
    try {
        std::vector<std::pair<std::string, fs::path>> artifacts;
        auto emit = [&](const std::string& rel, const std::string& text) {
            const fs::path p = tmp / rel;
            fs::create_directories(p.parent_path());
            write_text_file(p, text);
            artifacts.emplace_back(rel, p);
        };

        emit("ranking.csv", render_ranking_csv(bundle));
        emit("ranking.txt", render_ranking_text(bundle));
        emit("bundle.json", bundle_to_json(bundle));
        for (const auto& r : bundle.results) {
            const std::string dir = "methods/" + sanitize(r.name);
            if (r.failed) {
                emit(dir + "/error.txt", r.error + "\n");
                continue;
            }
            emit(dir + "/metrics.json", r.report.to_json());
            emit(dir + "/confusion.csv", r.report.confusion.to_csv());
            if (bundle.runtimes_valid)
                emit(dir + "/runtime.json", runtime_to_json(r.runtime).dump(2));
        }

        json manifest;
        manifest["version"] = 1;
        json files = json::array();
        for (const auto& [rel, path] : artifacts)
            files.push_back({{"path", rel},
                             {"bytes", fs::file_size(path)},
                             {"sha256", sha256_file(path.string())}});
        manifest["files"] = files;
        write_text_file(tmp / "manifest.json", manifest.dump(2));

        fs::rename(tmp, target);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
}

ReportBundle load_bundle(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "bundle.json");
    if (!in) throw IoError("cannot open bundle: " + dir + "/bundle.json");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(std::string("bad bundle.json: ") + e.what());
    }

    ReportBundle bundle;
    bundle.experiment_name = j.value("experiment", "");
    const auto& env = j.at("environment");
    bundle.seed = env.value("seed", std::uint64_t{0});
    bundle.threads = env.value("threads", 0);
    bundle.config_hash = env.value("config_hash", "");
    bundle.runtimes_valid = env.value("runtimes_valid", true);
    for (const auto& rj : j.at("results")) {
        MethodResult r;
        r.name = rj.value("name", "");
        r.seed = rj.value("seed", std::uint64_t{0});
        r.failed = rj.value("failed", false);
        if (r.failed) {
            r.error = rj.value("error", "");
        } else {
            r.train_rows = rj.value("train_rows", std::size_t{0});
            const auto& m = rj.at("metrics");
            r.report.accuracy = m.value("accuracy", 0.0);
            r.report.weighted_precision = m.at("weighted").value("precision", 0.0);
            r.report.weighted_recall = m.at("weighted").value("recall", 0.0);
            r.report.weighted_f1 = m.at("weighted").value("f1", 0.0);
            r.report.macro_precision = m.at("macro").value("precision", 0.0);
            r.report.macro_recall = m.at("macro").value("recall", 0.0);
            r.report.macro_f1 = m.at("macro").value("f1", 0.0);
            std::vector<std::string> class_names;
            for (const auto& cj : m.at("per_class")) {
                ClassMetrics cls;
                cls.precision = cj.value("precision", 0.0);
                cls.recall = cj.value("recall", 0.0);
                cls.f1 = cj.value("f1", 0.0);
                cls.support = cj.value("support", std::int64_t{0});
                r.report.per_class.push_back(cls);
                class_names.push_back(cj.value("class", ""));
            }
            r.report.confusion.class_names = class_names;
            if (rj.contains("runtime")) {
                const auto& rt = rj["runtime"];
                r.runtime = {r.name, rt.value("fit_seconds", 0.0),
                             rt.value("predict_seconds", 0.0), rt.value("total_seconds", 0.0)};
            }
        }
        bundle.results.push_back(std::move(r));
    }
    if (j.contains("ranking")) bundle.ranking = j["ranking"].get<std::vector<std::string>>();
    return bundle;
}

}  // namespace idskit

#include "idskit/flowdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "idskit/rng.hpp"

namespace idskit {

namespace {

using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

/// Missing when empty, non-numeric, or +-Inf/NaN.
std::optional<double> parse_cell(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value, std::chars_format::general);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"' && cur.empty()) {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

std::vector<std::string> trimmed(const std::vector<std::string>& names) {
    std::vector<std::string> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(trim(n));
    return out;
}

/// Fills feature_columns from the header when infer_features is set.
DatasetSchema resolve_schema(const DatasetSchema& schema, const std::vector<std::string>& header) {
    if (!schema.infer_features) return schema;
    DatasetSchema resolved = schema;
    resolved.feature_columns.clear();
    std::unordered_set<std::string> excluded(schema.exclude_columns.begin(),
                                             schema.exclude_columns.end());
    excluded.insert(schema.label_column);
    std::unordered_set<std::string> seen;
    for (const auto& raw_name : header) {
        const std::string name = trim(raw_name);
        if (excluded.count(name) || seen.count(name)) continue;
        seen.insert(name);
        resolved.feature_columns.push_back(name);
    }
    resolved.infer_features = false;
    resolved.validate();
    return resolved;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw SchemaError("column not found in header: '" + name + "'");
}

}  // namespace

void DatasetSchema::validate() const {
    if (label_column.empty()) throw SchemaError("schema '" + name + "': label_column is empty");
    std::unordered_set<std::string> features(feature_columns.begin(), feature_columns.end());
    if (!infer_features) {
        if (feature_columns.empty())
            throw SchemaError("schema '" + name + "': no feature columns");
        if (features.size() != feature_columns.size())
            throw SchemaError("schema '" + name + "': duplicate feature column names");
        if (features.count(label_column))
            throw SchemaError("schema '" + name + "': label column '" + label_column +
                              "' listed among feature columns");
        for (const auto& c : categorical_columns)
            if (!features.count(c))
                throw SchemaError("schema '" + name + "': categorical column '" + c +
                                  "' is not a feature column");
    }
    if (label_vocabulary.empty())
        throw SchemaError("schema '" + name + "': empty label vocabulary");
    std::unordered_set<std::string> vocab(label_vocabulary.begin(), label_vocabulary.end());
    if (vocab.size() != label_vocabulary.size())
        throw SchemaError("schema '" + name + "': duplicate label vocabulary entries");
    for (const auto& [raw, target] : label_aliases)
        if (!vocab.count(target))
            throw SchemaError("schema '" + name + "': alias target '" + target +
                              "' missing from label vocabulary");
}

DatasetSchema schema_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("schema JSON parse failure: ") + e.what());
    }
    DatasetSchema s;
    s.name = j.value("name", "");
    s.label_column = j.value("label_column", "");
    s.infer_features = j.value("infer_features", false);
    if (j.contains("feature_columns"))
        s.feature_columns = j["feature_columns"].get<std::vector<std::string>>();
    if (j.contains("categorical_columns"))
        s.categorical_columns = j["categorical_columns"].get<std::vector<std::string>>();
    if (j.contains("label_vocabulary"))
        s.label_vocabulary = j["label_vocabulary"].get<std::vector<std::string>>();
    if (j.contains("exclude_columns"))
        s.exclude_columns = j["exclude_columns"].get<std::vector<std::string>>();
    if (j.contains("label_aliases"))
        for (const auto& [k, v] : j["label_aliases"].items())
            s.label_aliases[k] = v.get<std::string>();
    s.validate();
    return s;
}

DatasetSchema schema_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schema file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return schema_from_json_text(ss.str());
}

std::string schema_to_json_text(const DatasetSchema& s) {
    json j;
    j["version"] = 1;
    j["name"] = s.name;
    j["feature_columns"] = s.feature_columns;
    j["label_column"] = s.label_column;
    j["categorical_columns"] = s.categorical_columns;
    j["label_vocabulary"] = s.label_vocabulary;
    j["infer_features"] = s.infer_features;
    j["exclude_columns"] = s.exclude_columns;
    json aliases = json::object();
    for (const auto& [k, v] : s.label_aliases) aliases[k] = v;
    j["label_aliases"] = aliases;
    return j.dump(2);
}

RawTable load_table(const std::string& path, const DatasetSchema& schema) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path);

    RawTable table;
    table.source_path = path;

    std::string line;
    if (!std::getline(in, line)) throw ParseError("file has no header line: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split_csv_line(line);

    const auto trimmed_header = trimmed(table.header);
    const std::unordered_set<std::string> present(trimmed_header.begin(), trimmed_header.end());
    auto require = [&](const std::string& col) {
        if (!present.count(col))
            throw SchemaError("dataset '" + path + "' is missing schema column '" + col + "'");
    };
    require(schema.label_column);
    if (!schema.infer_features)
        for (const auto& col : schema.feature_columns) require(col);

    std::size_t row_index = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != table.header.size())
            throw ParseError("ragged row " + std::to_string(row_index) + " in " + path + ": got " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(table.header.size()));
        table.rows.push_back(std::move(cells));
        ++row_index;
    }
    return table;
}

RawTable load_tables(const std::vector<std::string>& paths, const DatasetSchema& schema) {
    if (paths.empty()) throw ConfigError("load_tables: no input files");
    RawTable merged = load_table(paths.front(), schema);
    for (std::size_t i = 1; i < paths.size(); ++i) {
        RawTable next = load_table(paths[i], schema);
        if (trimmed(next.header) != trimmed(merged.header))
            throw SchemaError("header of '" + paths[i] + "' differs from '" + paths.front() + "'");
        for (auto& row : next.rows) merged.rows.push_back(std::move(row));
    }
    merged.source_path = paths.front() + (paths.size() > 1 ? "+" : "");
    return merged;
}

std::vector<std::size_t> FeatureMatrix::class_histogram() const {
    std::vector<std::size_t> hist(class_names.size(), 0);
    for (int label : y) {
        if (label < 0 || static_cast<std::size_t>(label) >= hist.size())
            throw LabelError("class histogram: label out of range");
        ++hist[static_cast<std::size_t>(label)];
    }
    return hist;
}

void FeatureMatrix::validate() const {
    if (X.rows() == 0 || X.cols() == 0)
        throw DimensionError("FeatureMatrix: empty matrix");
    if (y.size() != X.rows()) throw DimensionError("FeatureMatrix: label count mismatch");
    if (feature_names.size() != X.cols())
        throw DimensionError("FeatureMatrix: feature name count mismatch");
    for (double v : X.data())
        if (!std::isfinite(v)) throw PreprocessError("FeatureMatrix: non-finite entry");
    for (int label : y)
        if (label < 0 || static_cast<std::size_t>(label) >= class_names.size())
            throw LabelError("FeatureMatrix: label index out of range");
}

std::pair<FeatureMatrix, PreprocessReport> preprocess(const RawTable& raw,
                                                      const DatasetSchema& schema_in) {
    PreprocessReport report;

    // Step 1: trim header names.
    const std::vector<std::string> header = trimmed(raw.header);
    const DatasetSchema schema = resolve_schema(schema_in, raw.header);

    // Step 2: drop exact duplicates of the full raw row, first kept.
    std::vector<const std::vector<std::string>*> rows;
    rows.reserve(raw.rows.size());
    {
        std::unordered_set<std::string> seen;
        seen.reserve(raw.rows.size() * 2);
        for (const auto& row : raw.rows) {
            std::string key;
            for (const auto& cell : row) {
                key += cell;
                key.push_back('\x1f');
            }
            if (seen.insert(std::move(key)).second)
                rows.push_back(&row);
            else
                ++report.duplicates_removed;
        }
    }
    if (rows.empty()) throw PreprocessError("no data rows after deduplication");

    // Step 3: drop feature columns with a single unique raw value.
    const std::unordered_set<std::string> categorical(schema.categorical_columns.begin(),
                                                      schema.categorical_columns.end());
    std::vector<std::string> kept_columns;
    std::vector<std::size_t> kept_indices;
    for (const auto& col : schema.feature_columns) {
        const std::size_t idx = column_index(header, col);
        bool constant = true;
        for (std::size_t r = 1; r < rows.size() && constant; ++r)
            constant = (*rows[r])[idx] == (*rows[0])[idx];
        if (constant && rows.size() >= 1) {
            report.constant_columns_dropped.push_back(col);
        } else {
            kept_columns.push_back(col);
            kept_indices.push_back(idx);
        }
    }
    if (kept_columns.empty())
        throw PreprocessError("all feature columns are constant; nothing to learn from");

    const std::size_t n = rows.size();
    const std::size_t d = kept_columns.size();
    Matrix X(n, d);

    for (std::size_t c = 0; c < d; ++c) {
        const std::string& col = kept_columns[c];
        const std::size_t idx = kept_indices[c];
        if (categorical.count(col)) {
            // Step 6: ordinal encoding in first-appearance order.
            std::unordered_map<std::string, double> codes;
            std::vector<std::string> order;
            for (std::size_t r = 0; r < n; ++r) {
                const std::string& cell = (*rows[r])[idx];
                auto it = codes.find(cell);
                if (it == codes.end()) {
                    it = codes.emplace(cell, static_cast<double>(codes.size())).first;
                    order.push_back(cell);
                }
                X(r, c) = it->second;
            }
            report.encoded_columns.push_back(col);
            report.category_orders[col] = std::move(order);
        } else {
            // Steps 4-5: parse, then impute column mean over non-missing cells.
            double sum = 0.0;
            std::size_t present_count = 0;
            std::vector<std::size_t> missing;
            for (std::size_t r = 0; r < n; ++r) {
                if (auto v = parse_cell((*rows[r])[idx])) {
                    X(r, c) = *v;
                    sum += *v;
                    ++present_count;
                } else {
                    missing.push_back(r);
                }
            }
            if (present_count == 0)
                throw PreprocessError("column '" + col + "' has no parseable numeric values");
            if (!missing.empty()) {
                const double mean = sum / static_cast<double>(present_count);
                for (std::size_t r : missing) X(r, c) = mean;
                report.imputed_cells[col] = missing.size();
            }
        }
    }

    // Step 7: label encoding by vocabulary order.
    const std::size_t label_idx = column_index(header, schema.label_column);
    std::unordered_map<std::string, int> label_codes;
    for (std::size_t i = 0; i < schema.label_vocabulary.size(); ++i)
        label_codes[schema.label_vocabulary[i]] = static_cast<int>(i);

    std::vector<int> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        std::string value = trim((*rows[r])[label_idx]);
        if (auto alias = schema.label_aliases.find(value); alias != schema.label_aliases.end())
            value = alias->second;
        auto it = label_codes.find(value);
        if (it == label_codes.end())
            throw LabelError("label value '" + value + "' at row " + std::to_string(r) +
                             " is outside the schema vocabulary");
        y[r] = it->second;
        ++report.class_histogram[value];
    }

    FeatureMatrix m;
    m.X = std::move(X);
    m.y = std::move(y);
    m.feature_names = std::move(kept_columns);
    m.class_names = schema.label_vocabulary;
    m.validate();
    return {std::move(m), std::move(report)};
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const FeatureMatrix& m) {
    std::vector<std::vector<std::size_t>> by_class(m.n_classes());
    for (std::size_t i = 0; i < m.y.size(); ++i)
        by_class[static_cast<std::size_t>(m.y[i])].push_back(i);
    return by_class;
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split_indices(
    const FeatureMatrix& m, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw SplitError("test_fraction must lie in (0, 1)");
    auto by_class = indices_by_class(m);
    std::vector<std::size_t> train, test;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        if (members.size() < 2)
            throw SplitError("class '" + m.class_names[c] + "' has a single sample; cannot split");
        auto rng = make_rng(derive_seed(seed, c));
        std::shuffle(members.begin(), members.end(), rng);
        const double want = static_cast<double>(members.size()) * test_fraction;
        std::size_t take = static_cast<std::size_t>(std::llround(want));
        take = std::clamp<std::size_t>(take, 1, members.size() - 1);
        test.insert(test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
        train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

FeatureMatrix take_rows(const FeatureMatrix& m, std::span<const std::size_t> idx) {
    FeatureMatrix out;
    out.X = m.X.take_rows(idx);
    out.y.reserve(idx.size());
    for (std::size_t i : idx) out.y.push_back(m.y[i]);
    out.feature_names = m.feature_names;
    out.class_names = m.class_names;
    return out;
}

std::pair<FeatureMatrix, FeatureMatrix> stratified_split(const FeatureMatrix& m,
                                                         double test_fraction,
                                                         std::uint64_t seed) {
    auto [train_idx, test_idx] = stratified_split_indices(m, test_fraction, seed);
    return {take_rows(m, train_idx), take_rows(m, test_idx)};
}

FeatureMatrix stratified_subsample(const FeatureMatrix& m, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw SubsampleError("fraction must lie in (0, 1]");
    auto by_class = indices_by_class(m);
    std::vector<std::size_t> picked;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        const double want = static_cast<double>(members.size()) * fraction;
        if (want < 1.0 - 1e-12)
            throw SubsampleError("fraction " + std::to_string(fraction) +
                                 " leaves class '" + m.class_names[c] + "' empty");
        auto rng = make_rng(derive_seed(seed, c));
        std::shuffle(members.begin(), members.end(), rng);
        std::size_t take = static_cast<std::size_t>(std::llround(want));
        take = std::clamp<std::size_t>(take, 1, members.size());
        picked.insert(picked.end(), members.begin(),
                      members.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(picked.begin(), picked.end());
    return take_rows(m, picked);
}

namespace {

/// Largest-remainder apportionment of n into parts proportional to weights.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights) {
    const std::size_t k = weights.size();
    std::vector<std::size_t> counts(k, 0);
    std::vector<std::pair<double, std::size_t>> remainders(k);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double exact = static_cast<double>(n) * weights[i];
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        remainders[i] = {exact - std::floor(exact), i};
        assigned += counts[i];
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[remainders[i % k].second];
    return counts;
}

}  // namespace

FeatureMatrix synth_dataset(const SynthSpec& spec) {
    const std::size_t C = spec.class_mix.size();
    if (C < 2) throw ConfigError("synth_dataset: need at least 2 classes");
    double total = 0.0;
    for (double p : spec.class_mix) {
        if (p <= 0.0) throw ConfigError("synth_dataset: class proportions must be positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("synth_dataset: class proportions must sum to 1");
    if (spec.n_samples < C) throw ConfigError("synth_dataset: fewer samples than classes");
    if (spec.n_features == 0) throw ConfigError("synth_dataset: need at least one feature");
    if (spec.clusters_per_class == 0)
        throw ConfigError("synth_dataset: clusters_per_class must be positive");

    const std::size_t slots = C * spec.clusters_per_class;
    std::size_t corner_bits = 1;
    while ((std::size_t{1} << corner_bits) < slots) ++corner_bits;
    if (corner_bits > spec.n_features)
        throw ConfigError("synth_dataset: " + std::to_string(slots) +
                          " clusters need at least " + std::to_string(corner_bits) +
                          " features");

    const auto class_counts = apportion(spec.n_samples, spec.class_mix);

    auto rng = make_rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    FeatureMatrix m;
    m.X = Matrix(spec.n_samples, spec.n_features);
    m.y.resize(spec.n_samples);
    for (std::size_t f = 0; f < spec.n_features; ++f)
        m.feature_names.push_back("f" + std::to_string(f));
    for (std::size_t c = 0; c < C; ++c) m.class_names.push_back("class_" + std::to_string(c));

    std::size_t row = 0;
    for (std::size_t c = 0; c < C; ++c) {
        const std::vector<double> even(spec.clusters_per_class,
                                       1.0 / static_cast<double>(spec.clusters_per_class));
        const auto cluster_counts = apportion(class_counts[c], even);
        for (std::size_t g = 0; g < spec.clusters_per_class; ++g) {
            // Slot j sits at hypercube corner binary(j); slots are dealt to
            // classes round-robin so neighboring corners carry different labels.
            const std::size_t slot = g * C + c;
            for (std::size_t i = 0; i < cluster_counts[g]; ++i, ++row) {
                for (std::size_t f = 0; f < spec.n_features; ++f) {
                    double center = 0.0;
                    if (f < corner_bits && ((slot >> f) & 1u))
                        center = spec.separability;
                    m.X(row, f) = center + noise(rng);
                }
                m.y[row] = static_cast<int>(c);
            }
        }
    }

    // Shuffle rows so class blocks do not survive into downstream splits.
    std::vector<std::size_t> perm(spec.n_samples);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    FeatureMatrix shuffled = take_rows(m, perm);
    shuffled.validate();
    return shuffled;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json report_to_json(const PreprocessReport& r) {
    json j;
    j["duplicates_removed"] = r.duplicates_removed;
    j["constant_columns_dropped"] = r.constant_columns_dropped;
    j["imputed_cells"] = r.imputed_cells;
    j["encoded_columns"] = r.encoded_columns;
    j["class_histogram"] = r.class_histogram;
    j["category_orders"] = r.category_orders;
    return j;
}

PreprocessReport report_from_json(const json& j) {
    PreprocessReport r;
    r.duplicates_removed = j.value("duplicates_removed", std::size_t{0});
    if (j.contains("constant_columns_dropped"))
        r.constant_columns_dropped = j["constant_columns_dropped"].get<std::vector<std::string>>();
    if (j.contains("imputed_cells"))
        for (const auto& [k, v] : j["imputed_cells"].items())
            r.imputed_cells[k] = v.get<std::size_t>();
    if (j.contains("encoded_columns"))
        r.encoded_columns = j["encoded_columns"].get<std::vector<std::string>>();
    if (j.contains("class_histogram"))
        for (const auto& [k, v] : j["class_histogram"].items())
            r.class_histogram[k] = v.get<std::size_t>();
    if (j.contains("category_orders"))
        for (const auto& [k, v] : j["category_orders"].items())
            r.category_orders[k] = v.get<std::vector<std::string>>();
    return r;
}

}  // namespace

std::string preprocess_report_to_json(const PreprocessReport& report) {
    return report_to_json(report).dump(2);
}

void save_matrix_csv(const FeatureMatrix& m, const std::string& path,
                     const PreprocessReport* report) {
    m.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write matrix cache: " + path);
    for (const auto& name : m.feature_names) out << name << ',';
    out << "label\n";
    for (std::size_t r = 0; r < m.X.rows(); ++r) {
        for (std::size_t c = 0; c < m.X.cols(); ++c) out << format_double(m.X(r, c)) << ',';
        out << m.y[r] << '\n';
    }
    out.close();
    if (!out) throw IoError("failed writing matrix cache: " + path);

    json meta;
    meta["version"] = 1;
    meta["n_features"] = m.X.cols();
    meta["feature_names"] = m.feature_names;
    meta["class_names"] = m.class_names;
    if (report) meta["preprocess_report"] = report_to_json(*report);
    std::ofstream meta_out(path + ".meta.json");
    if (!meta_out) throw IoError("cannot write matrix sidecar: " + path + ".meta.json");
    meta_out << meta.dump(2) << '\n';
}

std::pair<FeatureMatrix, PreprocessReport> load_matrix_csv(const std::string& path) {
    std::ifstream meta_in(path + ".meta.json");
    if (!meta_in) throw IoError("missing matrix sidecar: " + path + ".meta.json");
    json meta;
    try {
        meta_in >> meta;
    } catch (const json::exception& e) {
        throw IoError(std::string("bad matrix sidecar: ") + e.what());
    }

    FeatureMatrix m;
    m.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
    m.class_names = meta.at("class_names").get<std::vector<std::string>>();
    const std::size_t d = meta.at("n_features").get<std::size_t>();

    std::ifstream in(path);
    if (!in) throw IoError("cannot open matrix cache: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("matrix cache has no header: " + path);

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != d + 1)
            throw ParseError("matrix cache row has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(d + 1));
        std::vector<double> vals(d);
        for (std::size_t c = 0; c < d; ++c) {
            auto v = parse_cell(cells[c]);
            if (!v) throw ParseError("bad numeric cell in matrix cache: '" + cells[c] + "'");
            vals[c] = *v;
        }
        rows.push_back(std::move(vals));
        m.y.push_back(std::stoi(cells[d]));
    }
    m.X = Matrix::from_rows(rows);
    m.validate();

    PreprocessReport report;
    if (meta.contains("preprocess_report")) report = report_from_json(meta["preprocess_report"]);
    return {std::move(m), std::move(report)};
}

}  // namespace idskit

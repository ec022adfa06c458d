#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idskit/matrix.hpp"

namespace idskit {

/// Column layout of a flow CSV. Shipped as versioned JSON config files,
/// one per dataset.
struct DatasetSchema {
    std::string name;
    std::vector<std::string> feature_columns;
    std::string label_column;
    std::vector<std::string> categorical_columns;
    std::vector<std::string> label_vocabulary;
    /// Raw label spellings mapped onto vocabulary entries (grouping support).
    std::map<std::string, std::string> label_aliases;
    /// When true, feature_columns is taken as every header column except the
    /// label and exclude_columns; useful for wide datasets.
    bool infer_features = false;
    std::vector<std::string> exclude_columns;

    void validate() const;
};

DatasetSchema schema_from_json_file(const std::string& path);
DatasetSchema schema_from_json_text(const std::string& text);
std::string schema_to_json_text(const DatasetSchema& schema);

/// Verbatim CSV contents: header plus string cells, one record per row.
struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string source_path;
};

RawTable load_table(const std::string& path, const DatasetSchema& schema);
/// Concatenates several files sharing one header (order as given).
RawTable load_tables(const std::vector<std::string>& paths, const DatasetSchema& schema);

/// Clean numeric dataset: X has no NaN/Inf, y holds class indices.
struct FeatureMatrix {
    Matrix X;
    std::vector<int> y;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;

    std::size_t n_samples() const { return X.rows(); }
    std::size_t n_features() const { return X.cols(); }
    std::size_t n_classes() const { return class_names.size(); }
    std::vector<std::size_t> class_histogram() const;
    void validate() const;
};

struct PreprocessReport {
    std::size_t duplicates_removed = 0;
    std::vector<std::string> constant_columns_dropped;
    std::map<std::string, std::size_t> imputed_cells;
    std::vector<std::string> encoded_columns;
    std::map<std::string, std::size_t> class_histogram;
    /// First-appearance encoding order per categorical column, recorded so a
    /// run can be reproduced without the original file.
    std::map<std::string, std::vector<std::string>> category_orders;
};

std::string preprocess_report_to_json(const PreprocessReport& report);

/// Fixed-order cleaning pipeline:
///  1. trim whitespace from header names
///  2. drop exact-duplicate rows (first kept)
///  3. drop feature columns with a single unique raw value
///  4. parse numerics; empty/non-numeric/+-Inf cells count as missing
///  5. impute missing cells with the column mean
///  6. ordinal-encode categorical columns in first-appearance order
///  7. encode labels by schema vocabulary order
std::pair<FeatureMatrix, PreprocessReport> preprocess(const RawTable& raw,
                                                      const DatasetSchema& schema);

/// Per-class partition; test gets round(count * test_fraction) of each class
/// (clamped so both sides stay nonempty). Deterministic for a fixed seed.
std::pair<FeatureMatrix, FeatureMatrix> stratified_split(const FeatureMatrix& m,
                                                         double test_fraction,
                                                         std::uint64_t seed);

/// Index form of the same partition (train, test), both in ascending order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split_indices(
    const FeatureMatrix& m, double test_fraction, std::uint64_t seed);

FeatureMatrix stratified_subsample(const FeatureMatrix& m, double fraction,
                                   std::uint64_t seed);

struct SynthSpec {
    std::size_t n_samples = 1000;
    std::vector<double> class_mix;
    double separability = 1.0;
    std::size_t n_features = 2;
    std::uint64_t seed = 42;
    /// Gaussian clusters drawn per class. At 1 the classes are single blobs;
    /// larger values interleave clusters at hypercube corners, producing
    /// datasets that axis-aligned trees can carve but linear models cannot.
    std::size_t clusters_per_class = 1;
};

/// Gaussian class clusters at scaled hypercube corners, unit noise on every
/// feature. Centroid separation is proportional to `separability`;
/// separability 0 collapses all classes onto one distribution.
FeatureMatrix synth_dataset(const SynthSpec& spec);

FeatureMatrix take_rows(const FeatureMatrix& m, std::span<const std::size_t> idx);

/// CSV cache of a clean matrix plus a JSON sidecar (<path>.meta.json)
/// carrying names and the preprocess report.
void save_matrix_csv(const FeatureMatrix& m, const std::string& path,
                     const PreprocessReport* report = nullptr);
std::pair<FeatureMatrix, PreprocessReport> load_matrix_csv(const std::string& path);

}  // namespace idskit

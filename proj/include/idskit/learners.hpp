#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idskit/flowdata.hpp"
#include "idskit/matrix.hpp"
#include "idskit/model_io.hpp"
#include "idskit/numcore.hpp"

namespace idskit {

/// Uniform trained-classifier contract. Implementations are immutable after
/// fit and safe to share across threads.
class Model {
public:
    virtual ~Model() = default;

    virtual std::size_t class_count() const = 0;
    /// Row-stochastic n x C matrix.
    virtual Matrix predict_proba(const Matrix& X) const = 0;
    /// Argmax over probability rows; ties go to the lowest class index.
    virtual std::vector<int> predict(const Matrix& X) const;
    virtual std::string kind() const = 0;
    virtual void save_payload(BinaryWriter& w) const = 0;
};

/// Lowest-index argmax, the tie rule used everywhere.
std::size_t argmax_lowest(std::span<const double> row);
std::vector<int> argmax_rows(const Matrix& proba);

struct DtParams {
    int max_depth = -1;  // <0: unbounded, 0: single leaf
    std::size_t min_samples_split = 2;
};

struct LrParams {
    double learning_rate = 0.1;
    std::size_t max_iters = 200;
    double l2 = 1e-4;
    double tol = 1e-6;
};

struct KnnParams {
    std::size_t k = 5;
};

struct MlpParams {
    std::vector<std::size_t> hidden = {50, 50};
    double alpha = 1e-4;  // L2 term
    double learning_rate = 1e-3;
    std::size_t max_iters = 1000;  // epochs
    std::size_t batch_cap = 200;   // batch = min(batch_cap, n)
};

struct TrainConfig {
    DtParams dt;
    LrParams lr;
    KnnParams knn;
    MlpParams mlp;
    std::uint64_t seed = 42;
};

ModelPtr fit_decision_tree(const FeatureMatrix& train, const TrainConfig& cfg = {});
ModelPtr fit_logistic_regression(const FeatureMatrix& train, const TrainConfig& cfg = {});
ModelPtr fit_knn(const FeatureMatrix& train, const TrainConfig& cfg = {});
ModelPtr fit_mlp(const FeatureMatrix& train, const TrainConfig& cfg = {});

// --- decision tree internals, shared with the ensemble methods ---

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<double> histogram;  // leaf class mass (weighted counts)
};

class TreeModel final : public Model {
public:
    TreeModel(std::vector<TreeNode> nodes, std::size_t n_classes)
        : nodes_(std::move(nodes)), n_classes_(n_classes) {}

    std::size_t class_count() const override { return n_classes_; }
    Matrix predict_proba(const Matrix& X) const override;
    std::string kind() const override { return "decision_tree"; }
    void save_payload(BinaryWriter& w) const override;
    static std::shared_ptr<TreeModel> load_payload(BinaryReader& r);

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    int depth() const;
    const TreeNode& leaf_for(std::span<const double> row) const;

private:
    std::vector<TreeNode> nodes_;
    std::size_t n_classes_;
};

struct TreeOptions {
    int max_depth = -1;
    std::size_t min_samples_split = 2;
    /// Candidate features per split; 0 means all.
    std::size_t n_split_features = 0;
    std::uint64_t seed = 0;
};

/// CART with Gini impurity; thresholds are midpoints between consecutive
/// distinct sorted values, gain ties resolved to the lowest feature index
/// and lowest threshold. Optional per-sample weights.
std::shared_ptr<TreeModel> fit_tree_classifier(const Matrix& X, std::span<const int> y,
                                               std::size_t n_classes, const TreeOptions& opt,
                                               std::span<const double> weights = {});

struct RegressionNode {
    int feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
};

class RegressionTree {
public:
    RegressionTree() = default;
    explicit RegressionTree(std::vector<RegressionNode> nodes) : nodes_(std::move(nodes)) {}
    double predict_one(std::span<const double> row) const;
    const std::vector<RegressionNode>& nodes() const { return nodes_; }
    void save(BinaryWriter& w) const;
    static RegressionTree load(BinaryReader& r);

private:
    std::vector<RegressionNode> nodes_;
};

/// Squared-error splits; leaf value is sum(target)/(count + l2_leaf).
RegressionTree fit_tree_regressor(const Matrix& X, std::span<const double> targets,
                                  int max_depth, std::size_t min_samples_split,
                                  double l2_leaf);

// --- concrete base learners (exposed for serialization and bindings) ---

class LinearModel final : public Model {
public:
    LinearModel(Scaler scaler, Matrix weights, std::vector<double> bias)
        : scaler_(std::move(scaler)), weights_(std::move(weights)), bias_(std::move(bias)) {}

    std::size_t class_count() const override { return bias_.size(); }
    Matrix predict_proba(const Matrix& X) const override;
    std::string kind() const override { return "logistic_regression"; }
    void save_payload(BinaryWriter& w) const override;
    static std::shared_ptr<LinearModel> load_payload(BinaryReader& r);

private:
    Scaler scaler_;
    Matrix weights_;  // d x C
    std::vector<double> bias_;
};

class KnnModel final : public Model {
public:
    KnnModel(Scaler scaler, Matrix train, std::vector<int> labels, std::size_t k,
             std::size_t n_classes)
        : scaler_(std::move(scaler)),
          train_(std::move(train)),
          labels_(std::move(labels)),
          k_(k),
          n_classes_(n_classes) {}

    std::size_t class_count() const override { return n_classes_; }
    Matrix predict_proba(const Matrix& X) const override;
    std::string kind() const override { return "knn"; }
    void save_payload(BinaryWriter& w) const override;
    static std::shared_ptr<KnnModel> load_payload(BinaryReader& r);

private:
    Scaler scaler_;
    Matrix train_;  // standardized
    std::vector<int> labels_;
    std::size_t k_;
    std::size_t n_classes_;
};

class MlpModel final : public Model {
public:
    MlpModel(Scaler scaler, std::vector<std::size_t> layer_sizes, std::vector<double> params)
        : scaler_(std::move(scaler)),
          layer_sizes_(std::move(layer_sizes)),
          params_(std::move(params)) {}

    std::size_t class_count() const override { return layer_sizes_.back(); }
    Matrix predict_proba(const Matrix& X) const override;
    std::string kind() const override { return "mlp"; }
    void save_payload(BinaryWriter& w) const override;
    static std::shared_ptr<MlpModel> load_payload(BinaryReader& r);

    const std::vector<double>& params() const { return params_; }
    const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }

private:
    Scaler scaler_;
    std::vector<std::size_t> layer_sizes_;  // d, hidden..., C
    std::vector<double> params_;            // packed W and b per layer
};

namespace detail {

/// Loss and parameter gradient of the MLP objective on one batch; the exact
/// code path used during training, exposed for finite-difference checks.
double mlp_gradient_for_test(const std::vector<double>& params,
                             const std::vector<std::size_t>& layer_sizes, const Matrix& X,
                             std::span<const int> y, double alpha, std::vector<double>& grad);

std::vector<double> mlp_init_params(const std::vector<std::size_t>& layer_sizes,
                                    std::uint64_t seed);

}  // namespace detail

}  // namespace idskit

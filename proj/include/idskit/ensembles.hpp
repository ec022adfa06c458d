#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "idskit/learners.hpp"

namespace idskit {

enum class EnsembleKind {
    average,
    max_vote,
    weighted_vote,
    bagging,
    random_forest,
    adaboost,
    gradient_boost,
    stacking,
    blending,
};

std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& name);

enum class MemberKind { decision_tree, logistic_regression, knn, mlp, random_forest };

std::string to_string(MemberKind kind);
MemberKind member_kind_from_string(const std::string& name);

struct RfParams {
    std::size_t n_estimators = 100;
    int max_depth = 10;
    std::size_t min_samples_split = 2;
    std::size_t n_split_features = 0;  // 0 -> ceil(sqrt(d))
};

/// One ensemble member: a base learner or a random forest, optionally behind
/// a PCA preprocessor (the stacking pipeline arrangement).
struct MemberSpec {
    MemberKind kind = MemberKind::decision_tree;
    TrainConfig train;
    RfParams rf;
    bool use_pca = false;
    std::optional<std::size_t> pca_k;  // default min(d, 10)
};

struct AdaParams {
    std::size_t rounds = 50;
    bool record_trace = false;
};

struct GbParams {
    double learning_rate = 0.1;
    int max_depth = 3;
    std::size_t rounds = 100;
    double l2_leaf = 0.0;

    static GbParams gb_preset() { return {0.1, 3, 100, 0.0}; }
    static GbParams xgb_style_preset() { return {0.1, 6, 100, 1.0}; }
};

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::average;
    std::vector<MemberSpec> members;
    std::vector<double> weights;     // weighted_vote
    std::optional<MemberSpec> meta;  // stacking/blending meta learner, default DT
    double holdout_fraction = 0.25;  // blending
    std::size_t n_estimators = 0;    // bagging; 0 -> number of configured members
    std::size_t n_folds = 5;         // stacking
    RfParams rf;
    AdaParams ada;
    GbParams gb;
    std::uint64_t seed = 42;

    void validate() const;
};

/// Trains one member on `data`; PCA (when enabled) is fit on the same data
/// only, so fold protocols stay leakage-free.
ModelPtr fit_member(const MemberSpec& member, const FeatureMatrix& data, std::uint64_t seed);

// --- simple voting operations over already-trained members ---

std::pair<std::vector<int>, Matrix> soft_vote_average(const std::vector<ModelPtr>& members,
                                                      const Matrix& X);
std::vector<int> hard_vote_majority(const std::vector<ModelPtr>& members, const Matrix& X);
std::vector<int> weighted_hard_vote(const std::vector<ModelPtr>& members,
                                    const std::vector<double>& weights, const Matrix& X);

// --- fit entry points ---

ModelPtr fit_voting(const EnsembleSpec& spec, const FeatureMatrix& train);
ModelPtr fit_bagging(const EnsembleSpec& spec, const FeatureMatrix& train);
ModelPtr fit_random_forest(const EnsembleSpec& spec, const FeatureMatrix& train);
ModelPtr fit_adaboost(const EnsembleSpec& spec, const FeatureMatrix& train);
ModelPtr fit_gradient_boosting(const EnsembleSpec& spec, const FeatureMatrix& train);
ModelPtr fit_stacking(const EnsembleSpec& spec, const FeatureMatrix& train);
ModelPtr fit_blending(const EnsembleSpec& spec, const FeatureMatrix& train);
ModelPtr fit_ensemble(const EnsembleSpec& spec, const FeatureMatrix& train);

/// Resample used for tree `tree_index`; exposed so seeded-equivalence checks
/// can reproduce the exact bootstrap a forest member saw.
std::vector<std::size_t> bootstrap_resample(std::uint64_t ensemble_seed,
                                            std::size_t estimator_index, std::size_t n);

// --- concrete ensemble models ---

class PipelineModel final : public Model {
public:
    PipelineModel(PcaModel pca, ModelPtr inner) : pca_(std::move(pca)), inner_(std::move(inner)) {}
    std::size_t class_count() const override { return inner_->class_count(); }
    Matrix predict_proba(const Matrix& X) const override {
        return inner_->predict_proba(pca_transform(pca_, X));
    }
    std::string kind() const override { return "pca+" + inner_->kind(); }
    void save_payload(BinaryWriter& w) const override;
    static std::shared_ptr<PipelineModel> load_payload(BinaryReader& r);

private:
    PcaModel pca_;
    ModelPtr inner_;
};

class VotingModel final : public Model {
public:
    VotingModel(EnsembleKind kind, std::vector<ModelPtr> members, std::vector<double> weights);
    std::size_t class_count() const override { return members_.front()->class_count(); }
    Matrix predict_proba(const Matrix& X) const override;
    std::vector<int> predict(const Matrix& X) const override;
    std::string kind() const override { return to_string(kind_); }
    void save_payload(BinaryWriter& w) const override;
    static std::shared_ptr<VotingModel> load_payload(BinaryReader& r);

private:
    EnsembleKind kind_;
    std::vector<ModelPtr> members_;
    std::vector<double> weights_;
};

/// Bootstrap aggregation: unweighted mean of member probabilities. Used by
/// both bagging and random forest.
class MeanEnsembleModel final : public Model {
public:
    MeanEnsembleModel(std::string kind, std::vector<ModelPtr> members, std::string summary)
        : kind_(std::move(kind)), members_(std::move(members)), summary_(std::move(summary)) {}
    std::size_t class_count() const override { return members_.front()->class_count(); }
    Matrix predict_proba(const Matrix& X) const override;
    std::string kind() const override { return kind_; }
    std::string summary() const { return summary_; }
    const std::vector<ModelPtr>& members() const { return members_; }
    void save_payload(BinaryWriter& w) const override;
    static std::shared_ptr<MeanEnsembleModel> load_payload(BinaryReader& r);

private:
    std::string kind_;
    std::vector<ModelPtr> members_;
    std::string summary_;
};

struct AdaBoostTrace {
    std::vector<double> epsilons;
    std::vector<double> alphas;
    std::vector<std::vector<double>> weight_history;  // after each round
};

class AdaBoostModel final : public Model {
public:
    AdaBoostModel(std::vector<std::shared_ptr<TreeModel>> stages, std::vector<double> alphas,
                  std::size_t n_classes, AdaBoostTrace trace)
        : stages_(std::move(stages)),
          alphas_(std::move(alphas)),
          n_classes_(n_classes),
          trace_(std::move(trace)) {}
    std::size_t class_count() const override { return n_classes_; }
    Matrix predict_proba(const Matrix& X) const override;
    std::string kind() const override { return "adaboost"; }
    const AdaBoostTrace& trace() const { return trace_; }
    std::size_t rounds() const { return stages_.size(); }
    void save_payload(BinaryWriter& w) const override;
    static std::shared_ptr<AdaBoostModel> load_payload(BinaryReader& r);

private:
    std::vector<std::shared_ptr<TreeModel>> stages_;
    std::vector<double> alphas_;
    std::size_t n_classes_;
    AdaBoostTrace trace_;
};

/// Raised when the first stump is no better than chance.
struct DegenerateBoostError : Error {
    DegenerateBoostError(const std::string& message, ModelPtr bad_stump)
        : Error(message), stump(std::move(bad_stump)) {}
    ModelPtr stump;
};

class GradientBoostModel final : public Model {
public:
    GradientBoostModel(std::vector<RegressionTree> stages, double learning_rate,
                       std::size_t n_classes, std::size_t rounds)
        : stages_(std::move(stages)),
          learning_rate_(learning_rate),
          n_classes_(n_classes),
          rounds_(rounds) {}
    std::size_t class_count() const override { return n_classes_; }
    Matrix predict_proba(const Matrix& X) const override;
    std::string kind() const override { return "gradient_boost"; }
    std::size_t stage_count() const { return stages_.size(); }
    std::size_t rounds() const { return rounds_; }
    /// Raw additive scores before the softmax.
    Matrix decision_scores(const Matrix& X) const;
    void save_payload(BinaryWriter& w) const override;
    static std::shared_ptr<GradientBoostModel> load_payload(BinaryReader& r);

private:
    std::vector<RegressionTree> stages_;  // round-major, C per round
    double learning_rate_;
    std::size_t n_classes_;
    std::size_t rounds_;
};

class StackedModel final : public Model {
public:
    StackedModel(std::string kind, std::vector<ModelPtr> members, ModelPtr meta,
                 std::size_t meta_train_rows)
        : kind_(std::move(kind)),
          members_(std::move(members)),
          meta_(std::move(meta)),
          meta_train_rows_(meta_train_rows) {}
    std::size_t class_count() const override { return members_.front()->class_count(); }
    Matrix predict_proba(const Matrix& X) const override;
    std::string kind() const override { return kind_; }
    std::size_t meta_train_rows() const { return meta_train_rows_; }
    void save_payload(BinaryWriter& w) const override;
    static std::shared_ptr<StackedModel> load_payload(BinaryReader& r);

private:
    std::string kind_;
    std::vector<ModelPtr> members_;
    ModelPtr meta_;
    std::size_t meta_train_rows_ = 0;
};

/// Member probabilities side by side: n x (members * C).
Matrix stacked_meta_features(const std::vector<ModelPtr>& members, const Matrix& X);

// --- instrumented protocol internals (unit and acceptance tests) ---

namespace detail {

using MemberFactory =
    std::function<ModelPtr(const FeatureMatrix& fit_data, std::uint64_t seed)>;

struct FoldRecord {
    std::size_t member = 0;
    std::size_t fold = 0;
    std::vector<std::size_t> fit_rows;     // train-relative indices
    std::vector<std::size_t> scored_rows;  // rows receiving out-of-fold features
};

struct StackingBuild {
    Matrix meta_features;
    std::vector<FoldRecord> folds;
};

/// Out-of-fold protocol over explicit factories; fold bookkeeping returned
/// for leakage assertions.
StackingBuild stacking_meta_features_oof(const std::vector<MemberFactory>& factories,
                                         const FeatureMatrix& train, std::size_t n_folds,
                                         std::uint64_t seed);

std::vector<std::size_t> stratified_fold_assignment(std::span<const int> y, std::size_t n_folds,
                                                    std::uint64_t seed);

ModelPtr fit_bagging_with_resampler(
    const EnsembleSpec& spec, const FeatureMatrix& train,
    const std::function<std::vector<std::size_t>(std::size_t estimator, std::size_t n)>&
        resampler);

}  // namespace detail

}  // namespace idskit

#include "idskit/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "idskit/rng.hpp"
#include "idskit/threading.hpp"

namespace idskit {

std::string to_string(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::average: return "average";
        case EnsembleKind::max_vote: return "max_vote";
        case EnsembleKind::weighted_vote: return "weighted_vote";
        case EnsembleKind::bagging: return "bagging";
        case EnsembleKind::random_forest: return "random_forest";
        case EnsembleKind::adaboost: return "adaboost";
        case EnsembleKind::gradient_boost: return "gradient_boost";
        case EnsembleKind::stacking: return "stacking";
        case EnsembleKind::blending: return "blending";
    }
    return "?";
}

EnsembleKind ensemble_kind_from_string(const std::string& name) {
    for (auto kind : {EnsembleKind::average, EnsembleKind::max_vote, EnsembleKind::weighted_vote,
                      EnsembleKind::bagging, EnsembleKind::random_forest, EnsembleKind::adaboost,
                      EnsembleKind::gradient_boost, EnsembleKind::stacking,
                      EnsembleKind::blending})
        if (to_string(kind) == name) return kind;
    throw ConfigError("unknown ensemble kind: '" + name + "'");
}

std::string to_string(MemberKind kind) {
    switch (kind) {
        case MemberKind::decision_tree: return "decision_tree";
        case MemberKind::logistic_regression: return "logistic_regression";
        case MemberKind::knn: return "knn";
        case MemberKind::mlp: return "mlp";
        case MemberKind::random_forest: return "random_forest";
    }
    return "?";
}

MemberKind member_kind_from_string(const std::string& name) {
    for (auto kind : {MemberKind::decision_tree, MemberKind::logistic_regression, MemberKind::knn,
                      MemberKind::mlp, MemberKind::random_forest})
        if (to_string(kind) == name) return kind;
    // short aliases used in experiment configs
    if (name == "dt") return MemberKind::decision_tree;
    if (name == "lr") return MemberKind::logistic_regression;
    if (name == "rf") return MemberKind::random_forest;
    throw ConfigError("unknown member kind: '" + name + "'");
}

void EnsembleSpec::validate() const {
    const bool voting = kind == EnsembleKind::average || kind == EnsembleKind::max_vote ||
                        kind == EnsembleKind::weighted_vote;
    if ((voting || kind == EnsembleKind::stacking || kind == EnsembleKind::blending) &&
        members.size() < 2)
        throw ConfigError(to_string(kind) + " needs at least 2 members");
    if (!weights.empty()) {
        if (weights.size() != members.size())
            throw ConfigError("weights length does not match member count");
        for (double w : weights)
            if (!(w > 0.0)) throw ConfigError("member weights must be positive");
    }
    if (kind == EnsembleKind::weighted_vote && weights.empty())
        throw ConfigError("weighted_vote requires member weights");
    if (kind == EnsembleKind::blending && !(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw ConfigError("blending requires holdout_fraction in (0, 1)");
    if (kind == EnsembleKind::stacking && n_folds < 2)
        throw ConfigError("stacking requires at least 2 folds");
    if (kind == EnsembleKind::gradient_boost && !(gb.learning_rate > 0.0))
        throw ConfigError("gradient_boost requires a positive learning rate");
}

namespace {

std::size_t checked_class_count(const std::vector<ModelPtr>& members) {
    if (members.size() < 2) throw EnsembleError("ensemble needs at least 2 members");
    const std::size_t C = members.front()->class_count();
    for (const auto& m : members)
        if (m->class_count() != C)
            throw EnsembleError("ensemble members disagree on class count");
    return C;
}

std::size_t effective_pca_k(const MemberSpec& member, const FeatureMatrix& data) {
    const std::size_t d = data.n_features();
    std::size_t k = member.pca_k.value_or(std::min<std::size_t>(d, 10));
    k = std::min({k, d, data.n_samples() - 1});
    return std::max<std::size_t>(k, 1);
}

}  // namespace

ModelPtr fit_member(const MemberSpec& member, const FeatureMatrix& data, std::uint64_t seed) {
    TrainConfig cfg = member.train;
    cfg.seed = seed;

    FeatureMatrix input = data;
    std::optional<PcaModel> pca;
    if (member.use_pca) {
        pca = pca_fit(data.X, effective_pca_k(member, data));
        input.X = pca_transform(*pca, data.X);
        input.feature_names.assign(input.X.cols(), "");
        for (std::size_t i = 0; i < input.X.cols(); ++i)
            input.feature_names[i] = "pc" + std::to_string(i);
    }

    ModelPtr fitted;
    switch (member.kind) {
        case MemberKind::decision_tree: fitted = fit_decision_tree(input, cfg); break;
        case MemberKind::logistic_regression: fitted = fit_logistic_regression(input, cfg); break;
        case MemberKind::knn: fitted = fit_knn(input, cfg); break;
        case MemberKind::mlp: fitted = fit_mlp(input, cfg); break;
        case MemberKind::random_forest: {
            EnsembleSpec rf_spec;
            rf_spec.kind = EnsembleKind::random_forest;
            rf_spec.rf = member.rf;
            rf_spec.seed = seed;
            fitted = fit_random_forest(rf_spec, input);
            break;
        }
    }
    if (pca) return std::make_shared<PipelineModel>(std::move(*pca), std::move(fitted));
    return fitted;
}

// --- voting ---

std::pair<std::vector<int>, Matrix> soft_vote_average(const std::vector<ModelPtr>& members,
                                                      const Matrix& X) {
    const std::size_t C = checked_class_count(members);
    Matrix mean(X.rows(), C);
    for (const auto& member : members) {
        const Matrix p = member->predict_proba(X);
        for (std::size_t i = 0; i < mean.data().size(); ++i) mean.data()[i] += p.data()[i];
    }
    for (double& v : mean.data()) v /= static_cast<double>(members.size());
    return {argmax_rows(mean), std::move(mean)};
}

namespace {

Matrix vote_shares(const std::vector<ModelPtr>& members, const std::vector<double>& weights,
                   const Matrix& X) {
    const std::size_t C = checked_class_count(members);
    if (!weights.empty() && weights.size() != members.size())
        throw ConfigError("weighted vote: weights length does not match member count");
    for (double w : weights)
        if (!(w > 0.0)) throw ConfigError("weighted vote: weights must be positive");

    Matrix shares(X.rows(), C);
    double total = 0.0;
    for (std::size_t m = 0; m < members.size(); ++m) {
        const double w = weights.empty() ? 1.0 : weights[m];
        total += w;
        const auto votes = members[m]->predict(X);
        for (std::size_t r = 0; r < X.rows(); ++r)
            shares(r, static_cast<std::size_t>(votes[r])) += w;
    }
    for (double& v : shares.data()) v /= total;
    return shares;
}

}  // namespace

std::vector<int> hard_vote_majority(const std::vector<ModelPtr>& members, const Matrix& X) {
    return argmax_rows(vote_shares(members, {}, X));
}

std::vector<int> weighted_hard_vote(const std::vector<ModelPtr>& members,
                                    const std::vector<double>& weights, const Matrix& X) {
    if (weights.empty()) throw ConfigError("weighted_hard_vote: weights required");
    return argmax_rows(vote_shares(members, weights, X));
}

VotingModel::VotingModel(EnsembleKind kind, std::vector<ModelPtr> members,
                         std::vector<double> weights)
    : kind_(kind), members_(std::move(members)), weights_(std::move(weights)) {
    checked_class_count(members_);
    if (kind_ == EnsembleKind::weighted_vote && weights_.size() != members_.size())
        throw ConfigError("weighted_vote model: weights length mismatch");
}

Matrix VotingModel::predict_proba(const Matrix& X) const {
    if (kind_ == EnsembleKind::average) return soft_vote_average(members_, X).second;
    return vote_shares(members_, weights_, X);
}

std::vector<int> VotingModel::predict(const Matrix& X) const {
    return argmax_rows(predict_proba(X));
}

ModelPtr fit_voting(const EnsembleSpec& spec, const FeatureMatrix& train) {
    spec.validate();
    std::vector<ModelPtr> members(spec.members.size());
    for (std::size_t m = 0; m < spec.members.size(); ++m)
        members[m] = fit_member(spec.members[m], train, derive_seed(spec.seed, m));
    return std::make_shared<VotingModel>(spec.kind, std::move(members), spec.weights);
}

// --- bagging and random forest ---

std::vector<std::size_t> bootstrap_resample(std::uint64_t ensemble_seed,
                                            std::size_t estimator_index, std::size_t n) {
    auto rng = make_rng(derive_seed(derive_seed(ensemble_seed, estimator_index),
                                    std::string_view("bootstrap")));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    for (auto& v : idx) v = pick(rng);
    return idx;
}

namespace detail {

ModelPtr fit_bagging_with_resampler(
    const EnsembleSpec& spec, const FeatureMatrix& train,
    const std::function<std::vector<std::size_t>(std::size_t, std::size_t)>& resampler) {
    spec.validate();
    if (train.n_samples() == 0) throw DimensionError("fit_bagging: empty training set");

    MemberSpec base;
    base.kind = MemberKind::random_forest;  // paper configuration: RF inside the bagger
    if (!spec.members.empty()) base = spec.members.front();
    std::size_t count = spec.n_estimators;
    if (count == 0) count = std::max<std::size_t>(spec.members.size(), 1);

    std::vector<ModelPtr> members(count);
    for (std::size_t e = 0; e < count; ++e) {
        const auto idx = resampler(e, train.n_samples());
        const FeatureMatrix resampled = take_rows(train, idx);
        members[e] = fit_member(base, resampled, derive_seed(spec.seed, e));
    }

    const std::string summary = "bagging(base=" + to_string(base.kind) +
                                ", n_estimators=" + std::to_string(count) + ")";
    return std::make_shared<MeanEnsembleModel>("bagging", std::move(members), summary);
}

}  // namespace detail

ModelPtr fit_bagging(const EnsembleSpec& spec, const FeatureMatrix& train) {
    return detail::fit_bagging_with_resampler(
        spec, train, [&spec](std::size_t e, std::size_t n) {
            return bootstrap_resample(spec.seed, e, n);
        });
}

Matrix MeanEnsembleModel::predict_proba(const Matrix& X) const {
    const std::size_t C = members_.front()->class_count();
    Matrix mean(X.rows(), C);
    for (const auto& member : members_) {
        const Matrix p = member->predict_proba(X);
        for (std::size_t i = 0; i < mean.data().size(); ++i) mean.data()[i] += p.data()[i];
    }
    for (double& v : mean.data()) v /= static_cast<double>(members_.size());
    return mean;
}

ModelPtr fit_random_forest(const EnsembleSpec& spec, const FeatureMatrix& train) {
    train.validate();
    if (train.n_samples() < 2) throw DimensionError("fit_random_forest: need at least 2 samples");
    const RfParams& p = spec.rf;
    if (p.n_estimators == 0) throw ConfigError("fit_random_forest: n_estimators must be positive");

    std::size_t split_features = p.n_split_features;
    if (split_features == 0)
        split_features = static_cast<std::size_t>(
            std::ceil(std::sqrt(static_cast<double>(train.n_features()))));

    std::vector<ModelPtr> trees(p.n_estimators);
    parallel_for(p.n_estimators, [&](std::size_t t) {
        const auto idx = bootstrap_resample(spec.seed, t, train.n_samples());
        const Matrix Xb = train.X.take_rows(idx);
        std::vector<int> yb(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = train.y[idx[i]];

        TreeOptions opt;
        opt.max_depth = p.max_depth;
        opt.min_samples_split = p.min_samples_split;
        opt.n_split_features = split_features;
        opt.seed = derive_seed(derive_seed(spec.seed, t), std::string_view("features"));
        trees[t] = fit_tree_classifier(Xb, yb, train.n_classes(), opt);
    });

    const std::string summary = "random_forest(n_estimators=" + std::to_string(p.n_estimators) +
                                ", max_depth=" + std::to_string(p.max_depth) + ")";
    return std::make_shared<MeanEnsembleModel>("random_forest", std::move(trees), summary);
}

// --- stacking and blending ---

Matrix stacked_meta_features(const std::vector<ModelPtr>& members, const Matrix& X) {
    const std::size_t C = checked_class_count(members);
    Matrix meta(X.rows(), members.size() * C);
    for (std::size_t m = 0; m < members.size(); ++m) {
        const Matrix p = members[m]->predict_proba(X);
        for (std::size_t r = 0; r < X.rows(); ++r)
            for (std::size_t c = 0; c < C; ++c) meta(r, m * C + c) = p(r, c);
    }
    return meta;
}

Matrix StackedModel::predict_proba(const Matrix& X) const {
    return meta_->predict_proba(stacked_meta_features(members_, X));
}

namespace detail {

std::vector<std::size_t> stratified_fold_assignment(std::span<const int> y, std::size_t n_folds,
                                                    std::uint64_t seed) {
    int max_label = 0;
    for (int v : y) max_label = std::max(max_label, v);
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label) + 1);
    for (std::size_t i = 0; i < y.size(); ++i)
        by_class[static_cast<std::size_t>(y[i])].push_back(i);

    std::vector<std::size_t> fold_of(y.size(), 0);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        auto rng = make_rng(derive_seed(seed, c));
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t i = 0; i < members.size(); ++i) fold_of[members[i]] = i % n_folds;
    }
    return fold_of;
}

StackingBuild stacking_meta_features_oof(const std::vector<MemberFactory>& factories,
                                         const FeatureMatrix& train, std::size_t n_folds,
                                         std::uint64_t seed) {
    const std::size_t n = train.n_samples();
    const std::size_t C = train.n_classes();
    if (n_folds < 2) throw ConfigError("stacking: need at least 2 folds");

    const auto fold_of = stratified_fold_assignment(train.y, n_folds,
                                                    derive_seed(seed, std::string_view("folds")));
    std::vector<std::vector<std::size_t>> fold_rows(n_folds);
    for (std::size_t i = 0; i < n; ++i) fold_rows[fold_of[i]].push_back(i);
    for (std::size_t f = 0; f < n_folds; ++f)
        if (fold_rows[f].size() < C)
            throw ConfigError("stacking: fold " + std::to_string(f) + " has " +
                              std::to_string(fold_rows[f].size()) + " rows, fewer than " +
                              std::to_string(C) + " classes");

    StackingBuild out;
    out.meta_features = Matrix(n, factories.size() * C);
    out.folds.resize(factories.size() * n_folds);

    for (std::size_t task = 0; task < factories.size() * n_folds; ++task) {
        const std::size_t m = task / n_folds;
        const std::size_t f = task % n_folds;

        std::vector<std::size_t> fit_rows;
        fit_rows.reserve(n - fold_rows[f].size());
        for (std::size_t i = 0; i < n; ++i)
            if (fold_of[i] != f) fit_rows.push_back(i);

        const FeatureMatrix fit_data = take_rows(train, fit_rows);
        const ModelPtr model = factories[m](fit_data, derive_seed(derive_seed(seed, m), f));

        const Matrix hold_X = train.X.take_rows(fold_rows[f]);
        const Matrix proba = model->predict_proba(hold_X);
        for (std::size_t i = 0; i < fold_rows[f].size(); ++i)
            for (std::size_t c = 0; c < C; ++c)
                out.meta_features(fold_rows[f][i], m * C + c) = proba(i, c);

        FoldRecord& rec = out.folds[task];
        rec.member = m;
        rec.fold = f;
        rec.fit_rows = fit_rows;
        rec.scored_rows = fold_rows[f];
    }
    return out;
}

}  // namespace detail

namespace {

MemberSpec default_meta(const std::optional<MemberSpec>& meta) {
    if (meta) return *meta;
    MemberSpec dt;
    dt.kind = MemberKind::decision_tree;
    return dt;
}

std::vector<detail::MemberFactory> member_factories(const std::vector<MemberSpec>& members) {
    std::vector<detail::MemberFactory> factories;
    factories.reserve(members.size());
    for (const MemberSpec& spec : members)
        factories.push_back([spec](const FeatureMatrix& data, std::uint64_t seed) {
            return fit_member(spec, data, seed);
        });
    return factories;
}

FeatureMatrix as_feature_matrix(const Matrix& X, std::vector<int> y,
                                std::vector<std::string> class_names) {
    FeatureMatrix m;
    m.X = X;
    m.y = std::move(y);
    m.feature_names.resize(X.cols());
    for (std::size_t i = 0; i < X.cols(); ++i) m.feature_names[i] = "m" + std::to_string(i);
    m.class_names = std::move(class_names);
    return m;
}

}  // namespace

ModelPtr fit_stacking(const EnsembleSpec& spec, const FeatureMatrix& train) {
    spec.validate();
    train.validate();

    const auto factories = member_factories(spec.members);
    const auto build =
        detail::stacking_meta_features_oof(factories, train, spec.n_folds, spec.seed);

    const FeatureMatrix meta_train =
        as_feature_matrix(build.meta_features, train.y, train.class_names);
    const ModelPtr meta = fit_member(default_meta(spec.meta), meta_train,
                                     derive_seed(spec.seed, std::string_view("meta")));

    // Members are refit on the full training set for prediction time.
    std::vector<ModelPtr> members(factories.size());
    for (std::size_t m = 0; m < factories.size(); ++m)
        members[m] = factories[m](train, derive_seed(spec.seed, m));

    return std::make_shared<StackedModel>("stacking", std::move(members), meta,
                                          meta_train.n_samples());
}

ModelPtr fit_blending(const EnsembleSpec& spec, const FeatureMatrix& train) {
    spec.validate();
    train.validate();

    auto [fit_idx, holdout_idx] = stratified_split_indices(
        train, spec.holdout_fraction, derive_seed(spec.seed, std::string_view("holdout")));
    const FeatureMatrix fit_part = take_rows(train, fit_idx);
    const FeatureMatrix holdout = take_rows(train, holdout_idx);

    {
        std::unordered_set<int> holdout_classes(holdout.y.begin(), holdout.y.end());
        for (std::size_t c = 0; c < train.n_classes(); ++c) {
            bool in_train = false;
            for (int v : train.y)
                if (static_cast<std::size_t>(v) == c) {
                    in_train = true;
                    break;
                }
            if (in_train && !holdout_classes.count(static_cast<int>(c)))
                throw SplitError("blending: class '" + train.class_names[c] +
                                 "' missing from holdout");
        }
    }

    std::vector<ModelPtr> members(spec.members.size());
    for (std::size_t m = 0; m < spec.members.size(); ++m)
        members[m] = fit_member(spec.members[m], fit_part, derive_seed(spec.seed, m));

    const Matrix meta_x = stacked_meta_features(members, holdout.X);
    const FeatureMatrix meta_train = as_feature_matrix(meta_x, holdout.y, train.class_names);
    const ModelPtr meta = fit_member(default_meta(spec.meta), meta_train,
                                     derive_seed(spec.seed, std::string_view("meta")));

    // The paper's procedure keeps the fit-set members; they are not refit.
    return std::make_shared<StackedModel>("blending", std::move(members), meta,
                                          meta_train.n_samples());
}

ModelPtr fit_ensemble(const EnsembleSpec& spec, const FeatureMatrix& train) {
    switch (spec.kind) {
        case EnsembleKind::average:
        case EnsembleKind::max_vote:
        case EnsembleKind::weighted_vote: return fit_voting(spec, train);
        case EnsembleKind::bagging: return fit_bagging(spec, train);
        case EnsembleKind::random_forest: return fit_random_forest(spec, train);
        case EnsembleKind::adaboost: return fit_adaboost(spec, train);
        case EnsembleKind::gradient_boost: return fit_gradient_boosting(spec, train);
        case EnsembleKind::stacking: return fit_stacking(spec, train);
        case EnsembleKind::blending: return fit_blending(spec, train);
    }
    throw ConfigError("fit_ensemble: unknown kind");
}

}  // namespace idskit

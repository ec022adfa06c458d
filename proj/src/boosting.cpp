#include <algorithm>
#include <cmath>
#include <numeric>

#include "idskit/ensembles.hpp"
#include "idskit/threading.hpp"

namespace idskit {

// --- AdaBoost (multiclass SAMME over depth-1 stumps) ---

Matrix AdaBoostModel::predict_proba(const Matrix& X) const {
    Matrix votes(X.rows(), n_classes_);
    double alpha_total = 0.0;
    for (std::size_t t = 0; t < stages_.size(); ++t) {
        alpha_total += alphas_[t];
        const auto labels = stages_[t]->predict(X);
        for (std::size_t r = 0; r < X.rows(); ++r)
            votes(r, static_cast<std::size_t>(labels[r])) += alphas_[t];
    }
    for (double& v : votes.data()) v /= alpha_total;
    return votes;
}

ModelPtr fit_adaboost(const EnsembleSpec& spec, const FeatureMatrix& train) {
    spec.validate();
    train.validate();
    const std::size_t n = train.n_samples();
    const std::size_t C = train.n_classes();
    if (C < 2) throw ConfigError("fit_adaboost: need at least 2 classes");
    if (n < 2) throw DimensionError("fit_adaboost: need at least 2 samples");
    if (spec.ada.rounds == 0) throw ConfigError("fit_adaboost: rounds must be positive");

    const double chance_error = 1.0 - 1.0 / static_cast<double>(C);
    std::vector<double> weights(n, 1.0 / static_cast<double>(n));

    std::vector<std::shared_ptr<TreeModel>> stages;
    std::vector<double> alphas;
    AdaBoostTrace trace;

    TreeOptions stump_opt;
    stump_opt.max_depth = 1;

    for (std::size_t round = 0; round < spec.ada.rounds; ++round) {
        auto stump = fit_tree_classifier(train.X, train.y, C, stump_opt, weights);
        const auto pred = stump->predict(train.X);

        double eps = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (pred[i] != train.y[i]) eps += weights[i];

        if (eps >= chance_error) {
            if (round == 0)
                throw DegenerateBoostError(
                    "fit_adaboost: first stump error " + std::to_string(eps) +
                        " is no better than chance (threshold " +
                        std::to_string(chance_error) + ")",
                    stump);
            break;  // keep the stages gathered so far
        }

        const double alpha =
            std::log((1.0 - eps) / std::max(eps, 1e-10)) + std::log(static_cast<double>(C) - 1.0);
        stages.push_back(stump);
        alphas.push_back(alpha);

        // Reweight misclassified samples and renormalize to a distribution.
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (pred[i] != train.y[i]) weights[i] *= std::exp(alpha);
            total += weights[i];
        }
        for (double& w : weights) w /= total;

        if (spec.ada.record_trace) {
            trace.epsilons.push_back(eps);
            trace.alphas.push_back(alpha);
            trace.weight_history.push_back(weights);
        }

        if (eps <= 0.0) break;  // perfect stage, nothing left to reweight
    }

    return std::make_shared<AdaBoostModel>(std::move(stages), std::move(alphas), C,
                                           std::move(trace));
}

void AdaBoostModel::save_payload(BinaryWriter& w) const {
    w.u64(n_classes_);
    w.f64_vec(alphas_);
    w.u64(stages_.size());
    for (const auto& s : stages_) s->save_payload(w);
}

std::shared_ptr<AdaBoostModel> AdaBoostModel::load_payload(BinaryReader& r) {
    const std::size_t C = r.u64();
    std::vector<double> alphas = r.f64_vec();
    std::vector<std::shared_ptr<TreeModel>> stages(r.u64());
    for (auto& s : stages) s = TreeModel::load_payload(r);
    return std::make_shared<AdaBoostModel>(std::move(stages), std::move(alphas), C,
                                           AdaBoostTrace{});
}

// --- gradient boosting (stagewise multiclass, softmax residuals) ---

Matrix GradientBoostModel::decision_scores(const Matrix& X) const {
    Matrix F(X.rows(), n_classes_);
    parallel_for(X.rows(), [&](std::size_t r) {
        const auto row = X.row(r);
        for (std::size_t t = 0; t < stages_.size(); ++t)
            F(r, t % n_classes_) += learning_rate_ * stages_[t].predict_one(row);
    });
    return F;
}

Matrix GradientBoostModel::predict_proba(const Matrix& X) const {
    Matrix F = decision_scores(X);
    for (std::size_t r = 0; r < F.rows(); ++r) softmax_inplace(F.row(r));
    return F;
}

ModelPtr fit_gradient_boosting(const EnsembleSpec& spec, const FeatureMatrix& train) {
    spec.validate();
    train.validate();
    const std::size_t n = train.n_samples();
    const std::size_t C = train.n_classes();
    if (n < 2) throw DimensionError("fit_gradient_boosting: need at least 2 samples");
    const GbParams& p = spec.gb;

    Matrix F(n, C);
    std::vector<RegressionTree> stages;
    stages.reserve(p.rounds * C);

    std::vector<double> prob(C);
    std::vector<double> residual(n);
    Matrix P(n, C);

    for (std::size_t round = 0; round < p.rounds; ++round) {
        for (std::size_t r = 0; r < n; ++r) {
            const auto z = F.row(r);
            std::copy(z.begin(), z.end(), prob.begin());
            softmax_inplace(prob);
            for (std::size_t c = 0; c < C; ++c) P(r, c) = prob[c];
        }
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t r = 0; r < n; ++r)
                residual[r] =
                    (static_cast<std::size_t>(train.y[r]) == c ? 1.0 : 0.0) - P(r, c);
            RegressionTree tree = fit_tree_regressor(train.X, residual, p.max_depth, 2, p.l2_leaf);
            for (std::size_t r = 0; r < n; ++r)
                F(r, c) += p.learning_rate * tree.predict_one(train.X.row(r));
            stages.push_back(std::move(tree));
        }
        for (double v : F.data())
            if (!std::isfinite(v))
                throw DivergenceError("fit_gradient_boosting: non-finite scores at round " +
                                      std::to_string(round));
    }

    return std::make_shared<GradientBoostModel>(std::move(stages), p.learning_rate, C, p.rounds);
}

void GradientBoostModel::save_payload(BinaryWriter& w) const {
    w.u64(n_classes_);
    w.u64(rounds_);
    w.f64(learning_rate_);
    w.u64(stages_.size());
    for (const auto& t : stages_) t.save(w);
}

std::shared_ptr<GradientBoostModel> GradientBoostModel::load_payload(BinaryReader& r) {
    const std::size_t C = r.u64();
    const std::size_t rounds = r.u64();
    const double lr = r.f64();
    std::vector<RegressionTree> stages(r.u64());
    for (auto& t : stages) t = RegressionTree::load(r);
    return std::make_shared<GradientBoostModel>(std::move(stages), lr, C, rounds);
}

}  // namespace idskit

#include <algorithm>
#include <cmath>
#include <numeric>

#include "idskit/learners.hpp"
#include "idskit/rng.hpp"

namespace idskit {

namespace {

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = -1.0;
};

/// Candidate features for one node: either all, or a seeded random subset
/// (sorted so the tie rule still favors lower feature indices).
std::vector<std::size_t> candidate_features(std::size_t d, std::size_t n_split_features,
                                            Rng& rng) {
    std::vector<std::size_t> feats(d);
    std::iota(feats.begin(), feats.end(), 0);
    if (n_split_features == 0 || n_split_features >= d) return feats;
    for (std::size_t i = 0; i < n_split_features; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, d - 1);
        std::swap(feats[i], feats[pick(rng)]);
    }
    feats.resize(n_split_features);
    std::sort(feats.begin(), feats.end());
    return feats;
}

class ClassTreeBuilder {
public:
    ClassTreeBuilder(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                     const TreeOptions& opt, std::span<const double> weights)
        : X_(X), y_(y), C_(n_classes), opt_(opt), weights_(weights), rng_(make_rng(opt.seed)) {}

    std::vector<TreeNode> build() {
        std::vector<std::size_t> idx(X_.rows());
        std::iota(idx.begin(), idx.end(), 0);
        grow(idx, 0);
        return std::move(nodes_);
    }

private:
    double weight_of(std::size_t i) const { return weights_.empty() ? 1.0 : weights_[i]; }

    std::vector<double> histogram(std::span<const std::size_t> idx) const {
        std::vector<double> h(C_, 0.0);
        for (std::size_t i : idx) h[static_cast<std::size_t>(y_[i])] += weight_of(i);
        return h;
    }

    static double gini(const std::vector<double>& hist, double total) {
        if (total <= 0.0) return 0.0;
        double acc = 1.0;
        for (double m : hist) {
            const double p = m / total;
            acc -= p * p;
        }
        return acc;
    }

    SplitChoice best_split(std::span<const std::size_t> idx) const {
        const auto parent_hist = histogram(idx);
        const double total = std::accumulate(parent_hist.begin(), parent_hist.end(), 0.0);
        const double parent_gini = gini(parent_hist, total);

        SplitChoice best;
        const auto feats = candidate_features(X_.cols(), opt_.n_split_features, rng_);

        std::vector<std::pair<double, std::size_t>> order(idx.size());
        std::vector<double> left(C_);
        for (std::size_t f : feats) {
            for (std::size_t i = 0; i < idx.size(); ++i) order[i] = {X_(idx[i], f), idx[i]};
            std::sort(order.begin(), order.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            std::fill(left.begin(), left.end(), 0.0);
            double left_total = 0.0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                const std::size_t row = order[i].second;
                left[static_cast<std::size_t>(y_[row])] += weight_of(row);
                left_total += weight_of(row);
                if (order[i].first == order[i + 1].first) continue;

                const double right_total = total - left_total;
                if (left_total <= 0.0 || right_total <= 0.0) continue;
                double right_gini_acc = 1.0;
                double left_gini_acc = 1.0;
                for (std::size_t c = 0; c < C_; ++c) {
                    const double pl = left[c] / left_total;
                    const double pr = (parent_hist[c] - left[c]) / right_total;
                    left_gini_acc -= pl * pl;
                    right_gini_acc -= pr * pr;
                }
                const double gain = parent_gini - (left_total / total) * left_gini_acc -
                                    (right_total / total) * right_gini_acc;
                if (!best.found || gain > best.gain) {
                    best.found = true;
                    best.gain = gain;
                    best.feature = f;
                    best.threshold = 0.5 * (order[i].first + order[i + 1].first);
                }
            }
        }
        return best;
    }

    std::int32_t grow(std::span<const std::size_t> idx, int depth) {
        const auto hist = histogram(idx);
        const std::size_t node_id = nodes_.size();
        nodes_.emplace_back();

        const bool pure = std::count_if(hist.begin(), hist.end(),
                                        [](double m) { return m > 0.0; }) <= 1;
        const bool depth_capped = opt_.max_depth >= 0 && depth >= opt_.max_depth;
        if (pure || depth_capped || idx.size() < opt_.min_samples_split) {
            nodes_[node_id].histogram = hist;
            return static_cast<std::int32_t>(node_id);
        }

        const SplitChoice split = best_split(idx);
        if (!split.found) {
            nodes_[node_id].histogram = hist;
            return static_cast<std::int32_t>(node_id);
        }

        std::vector<std::size_t> left_idx, right_idx;
        left_idx.reserve(idx.size());
        right_idx.reserve(idx.size());
        for (std::size_t i : idx) {
            (X_(i, split.feature) <= split.threshold ? left_idx : right_idx).push_back(i);
        }

        nodes_[node_id].feature = static_cast<int>(split.feature);
        nodes_[node_id].threshold = split.threshold;
        nodes_[node_id].left = grow(left_idx, depth + 1);
        nodes_[node_id].right = grow(right_idx, depth + 1);
        return static_cast<std::int32_t>(node_id);
    }

    const Matrix& X_;
    std::span<const int> y_;
    std::size_t C_;
    TreeOptions opt_;
    std::span<const double> weights_;
    mutable Rng rng_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

std::shared_ptr<TreeModel> fit_tree_classifier(const Matrix& X, std::span<const int> y,
                                               std::size_t n_classes, const TreeOptions& opt,
                                               std::span<const double> weights) {
    if (X.rows() == 0) throw DimensionError("fit_tree_classifier: empty training set");
    if (y.size() != X.rows()) throw DimensionError("fit_tree_classifier: label count mismatch");
    if (!weights.empty() && weights.size() != X.rows())
        throw DimensionError("fit_tree_classifier: weight count mismatch");
    ClassTreeBuilder builder(X, y, n_classes, opt, weights);
    return std::make_shared<TreeModel>(builder.build(), n_classes);
}

const TreeNode& TreeModel::leaf_for(std::span<const double> row) const {
    std::size_t node = 0;
    while (nodes_[node].feature >= 0) {
        const auto& n = nodes_[node];
        node = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold
                                            ? n.left
                                            : n.right);
    }
    return nodes_[node];
}

Matrix TreeModel::predict_proba(const Matrix& X) const {
    Matrix proba(X.rows(), n_classes_);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        const auto& leaf = leaf_for(X.row(r));
        const double total =
            std::accumulate(leaf.histogram.begin(), leaf.histogram.end(), 0.0);
        for (std::size_t c = 0; c < n_classes_; ++c)
            proba(r, c) = total > 0.0 ? leaf.histogram[c] / total : 1.0 / static_cast<double>(n_classes_);
    }
    return proba;
}

int TreeModel::depth() const {
    // Iterative depth over the flat layout.
    std::vector<std::pair<std::size_t, int>> stack{{0, 0}};
    int depth = 0;
    while (!stack.empty()) {
        auto [node, d] = stack.back();
        stack.pop_back();
        depth = std::max(depth, d);
        if (nodes_[node].feature >= 0) {
            stack.push_back({static_cast<std::size_t>(nodes_[node].left), d + 1});
            stack.push_back({static_cast<std::size_t>(nodes_[node].right), d + 1});
        }
    }
    return depth;
}

void TreeModel::save_payload(BinaryWriter& w) const {
    w.u64(n_classes_);
    w.u64(nodes_.size());
    for (const auto& n : nodes_) {
        w.i64(n.feature);
        w.f64(n.threshold);
        w.i64(n.left);
        w.i64(n.right);
        w.f64_vec(n.histogram);
    }
}

std::shared_ptr<TreeModel> TreeModel::load_payload(BinaryReader& r) {
    const std::size_t C = r.u64();
    std::vector<TreeNode> nodes(r.u64());
    for (auto& n : nodes) {
        n.feature = static_cast<int>(r.i64());
        n.threshold = r.f64();
        n.left = static_cast<std::int32_t>(r.i64());
        n.right = static_cast<std::int32_t>(r.i64());
        n.histogram = r.f64_vec();
    }
    return std::make_shared<TreeModel>(std::move(nodes), C);
}

ModelPtr fit_decision_tree(const FeatureMatrix& train, const TrainConfig& cfg) {
    train.validate();
    TreeOptions opt;
    opt.max_depth = cfg.dt.max_depth;
    opt.min_samples_split = cfg.dt.min_samples_split;
    return fit_tree_classifier(train.X, train.y, train.n_classes(), opt);
}

// --- regression tree (gradient boosting stages) ---

namespace {

class RegTreeBuilder {
public:
    RegTreeBuilder(const Matrix& X, std::span<const double> t, int max_depth,
                   std::size_t min_samples_split, double l2_leaf)
        : X_(X), t_(t), max_depth_(max_depth), min_split_(min_samples_split), l2_(l2_leaf) {}

    std::vector<RegressionNode> build() {
        std::vector<std::size_t> idx(X_.rows());
        std::iota(idx.begin(), idx.end(), 0);
        grow(idx, 0);
        return std::move(nodes_);
    }

private:
    std::int32_t grow(std::span<const std::size_t> idx, int depth) {
        const std::size_t node_id = nodes_.size();
        nodes_.emplace_back();

        double sum = 0.0;
        for (std::size_t i : idx) sum += t_[i];

        const bool depth_capped = max_depth_ >= 0 && depth >= max_depth_;
        bool split_done = false;
        if (!depth_capped && idx.size() >= min_split_) {
            const auto choice = best_split(idx, sum);
            if (choice.found) {
                std::vector<std::size_t> left_idx, right_idx;
                for (std::size_t i : idx)
                    (X_(i, choice.feature) <= choice.threshold ? left_idx : right_idx)
                        .push_back(i);
                nodes_[node_id].feature = static_cast<int>(choice.feature);
                nodes_[node_id].threshold = choice.threshold;
                nodes_[node_id].left = grow(left_idx, depth + 1);
                nodes_[node_id].right = grow(right_idx, depth + 1);
                split_done = true;
            }
        }
        if (!split_done)
            nodes_[node_id].value = sum / (static_cast<double>(idx.size()) + l2_);
        return static_cast<std::int32_t>(node_id);
    }

    SplitChoice best_split(std::span<const std::size_t> idx, double total_sum) const {
        SplitChoice best;
        const double n = static_cast<double>(idx.size());
        const double base = total_sum * total_sum / n;

        std::vector<std::pair<double, std::size_t>> order(idx.size());
        for (std::size_t f = 0; f < X_.cols(); ++f) {
            for (std::size_t i = 0; i < idx.size(); ++i) order[i] = {X_(idx[i], f), idx[i]};
            std::sort(order.begin(), order.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            double left_sum = 0.0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                left_sum += t_[order[i].second];
                if (order[i].first == order[i + 1].first) continue;
                const double nl = static_cast<double>(i + 1);
                const double nr = n - nl;
                const double right_sum = total_sum - left_sum;
                const double gain =
                    left_sum * left_sum / nl + right_sum * right_sum / nr - base;
                if (gain > 1e-12 && (!best.found || gain > best.gain)) {
                    best.found = true;
                    best.gain = gain;
                    best.feature = f;
                    best.threshold = 0.5 * (order[i].first + order[i + 1].first);
                }
            }
        }
        return best;
    }

    const Matrix& X_;
    std::span<const double> t_;
    int max_depth_;
    std::size_t min_split_;
    double l2_;
    std::vector<RegressionNode> nodes_;
};

}  // namespace

RegressionTree fit_tree_regressor(const Matrix& X, std::span<const double> targets,
                                  int max_depth, std::size_t min_samples_split,
                                  double l2_leaf) {
    if (targets.size() != X.rows())
        throw DimensionError("fit_tree_regressor: target count mismatch");
    RegTreeBuilder builder(X, targets, max_depth, min_samples_split, l2_leaf);
    return RegressionTree(builder.build());
}

double RegressionTree::predict_one(std::span<const double> row) const {
    std::size_t node = 0;
    while (nodes_[node].feature >= 0) {
        const auto& n = nodes_[node];
        node = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold
                                            ? n.left
                                            : n.right);
    }
    return nodes_[node].value;
}

void RegressionTree::save(BinaryWriter& w) const {
    w.u64(nodes_.size());
    for (const auto& n : nodes_) {
        w.i64(n.feature);
        w.f64(n.threshold);
        w.i64(n.left);
        w.i64(n.right);
        w.f64(n.value);
    }
}

RegressionTree RegressionTree::load(BinaryReader& r) {
    std::vector<RegressionNode> nodes(r.u64());
    for (auto& n : nodes) {
        n.feature = static_cast<int>(r.i64());
        n.threshold = r.f64();
        n.left = static_cast<std::int32_t>(r.i64());
        n.right = static_cast<std::int32_t>(r.i64());
        n.value = r.f64();
    }
    return RegressionTree(std::move(nodes));
}

}  // namespace idskit

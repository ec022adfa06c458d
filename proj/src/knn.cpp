#include <algorithm>

#include "idskit/learners.hpp"
#include "idskit/threading.hpp"

namespace idskit {

Matrix KnnModel::predict_proba(const Matrix& X) const {
    const Matrix Xs = apply_scaler(scaler_, X);
    const std::size_t n_train = train_.rows(), d = train_.cols();
    Matrix proba(X.rows(), n_classes_);

    parallel_for(X.rows(), [&](std::size_t r) {
        std::vector<std::pair<double, std::size_t>> dist(n_train);
        const auto q = Xs.row(r);
        for (std::size_t t = 0; t < n_train; ++t) {
            double acc = 0.0;
            const auto row = train_.row(t);
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = q[j] - row[j];
                acc += diff * diff;
            }
            dist[t] = {acc, t};  // ties resolved by lower training-row index
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_),
                          dist.end());
        auto out = proba.row(r);
        for (std::size_t i = 0; i < k_; ++i)
            out[static_cast<std::size_t>(labels_[dist[i].second])] += 1.0;
        for (double& v : out) v /= static_cast<double>(k_);
    });
    return proba;
}

void KnnModel::save_payload(BinaryWriter& w) const {
    w.f64_vec(scaler_.means);
    w.f64_vec(scaler_.stds);
    w.matrix(train_);
    w.i32_vec(labels_);
    w.u64(k_);
    w.u64(n_classes_);
}

std::shared_ptr<KnnModel> KnnModel::load_payload(BinaryReader& r) {
    Scaler s;
    s.means = r.f64_vec();
    s.stds = r.f64_vec();
    Matrix train = r.matrix();
    std::vector<int> labels = r.i32_vec();
    const std::size_t k = r.u64();
    const std::size_t C = r.u64();
    return std::make_shared<KnnModel>(std::move(s), std::move(train), std::move(labels), k, C);
}

ModelPtr fit_knn(const FeatureMatrix& train, const TrainConfig& cfg) {
    train.validate();
    if (cfg.knn.k == 0) throw ConfigError("fit_knn: k must be positive");
    if (cfg.knn.k > train.n_samples())
        throw ConfigError("fit_knn: k=" + std::to_string(cfg.knn.k) + " exceeds n=" +
                          std::to_string(train.n_samples()));
    Scaler scaler;
    if (train.n_samples() == 1) {
        scaler.means.assign(train.X.row(0).begin(), train.X.row(0).end());
        scaler.stds.assign(train.n_features(), 1.0);
    } else {
        scaler = fit_scaler(train.X);
    }
    Matrix Xs = apply_scaler(scaler, train.X);
    return std::make_shared<KnnModel>(std::move(scaler), std::move(Xs), train.y, cfg.knn.k,
                                      train.n_classes());
}

}  // namespace idskit

#include <cmath>

#include "idskit/learners.hpp"
#include "idskit/rng.hpp"
#include "idskit/threading.hpp"

namespace idskit {

namespace {

Matrix glorot_matrix(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix m(fan_in, fan_out);
    for (double& v : m.data()) v = u(rng);
    return m;
}

}  // namespace

Matrix LinearModel::predict_proba(const Matrix& X) const {
    const Matrix Xs = apply_scaler(scaler_, X);
    const std::size_t C = bias_.size(), d = weights_.rows();
    Matrix proba(X.rows(), C);
    parallel_for(X.rows(), [&](std::size_t r) {
        auto out = proba.row(r);
        for (std::size_t c = 0; c < C; ++c) {
            double z = bias_[c];
            for (std::size_t j = 0; j < d; ++j) z += Xs(r, j) * weights_(j, c);
            out[c] = z;
        }
        softmax_inplace(out);
    });
    return proba;
}

void LinearModel::save_payload(BinaryWriter& w) const {
    w.f64_vec(scaler_.means);
    w.f64_vec(scaler_.stds);
    w.matrix(weights_);
    w.f64_vec(bias_);
}

std::shared_ptr<LinearModel> LinearModel::load_payload(BinaryReader& r) {
    Scaler s;
    s.means = r.f64_vec();
    s.stds = r.f64_vec();
    Matrix weights = r.matrix();
    std::vector<double> bias = r.f64_vec();
    return std::make_shared<LinearModel>(std::move(s), std::move(weights), std::move(bias));
}

/// Multinomial softmax regression on standardized features, trained with
/// full-batch Adam on cross-entropy + l2 * ||W||^2.
ModelPtr fit_logistic_regression(const FeatureMatrix& train, const TrainConfig& cfg) {
    train.validate();
    const std::size_t n = train.n_samples(), d = train.n_features(), C = train.n_classes();
    if (n < C) throw DimensionError("fit_logistic_regression: need at least one sample per class");

    const Scaler scaler = fit_scaler(train.X);
    const Matrix Xs = apply_scaler(scaler, train.X);

    auto rng = make_rng(derive_seed(cfg.seed, std::string_view("logistic_regression")));
    Matrix W = glorot_matrix(d, C, rng);
    std::vector<double> b(C, 0.0);

    const std::size_t n_params = d * C + C;
    AdamState adam = AdamState::for_size(n_params);
    std::vector<double> grad(n_params, 0.0);

    Matrix logits(n, C);
    Matrix dlogits;
    double prev_loss = std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < cfg.lr.max_iters; ++iter) {
        parallel_for(n, [&](std::size_t r) {
            for (std::size_t c = 0; c < C; ++c) {
                double z = b[c];
                for (std::size_t j = 0; j < d; ++j) z += Xs(r, j) * W(j, c);
                logits(r, c) = z;
            }
        });
        double loss = softmax_cross_entropy(logits, train.y, &dlogits);
        for (double v : W.data()) loss += cfg.lr.l2 * v * v;
        if (!std::isfinite(loss))
            throw DivergenceError("fit_logistic_regression: non-finite loss at iteration " +
                                  std::to_string(iter));

        // dW = Xs^T dlogits + 2*l2*W, db = column sums of dlogits.
        parallel_for(d * C, [&](std::size_t cell) {
            const std::size_t j = cell / C, c = cell % C;
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) acc += Xs(r, j) * dlogits(r, c);
            grad[cell] = acc + 2.0 * cfg.lr.l2 * W(j, c);
        });
        for (std::size_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) acc += dlogits(r, c);
            grad[d * C + c] = acc;
        }

        std::vector<double> params(n_params);
        std::copy(W.data().begin(), W.data().end(), params.begin());
        std::copy(b.begin(), b.end(), params.begin() + static_cast<std::ptrdiff_t>(d * C));
        adam_step(params, grad, adam, cfg.lr.learning_rate);
        std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d * C),
                  W.data().begin());
        std::copy(params.begin() + static_cast<std::ptrdiff_t>(d * C), params.end(), b.begin());

        if (std::abs(prev_loss - loss) < cfg.lr.tol) break;
        prev_loss = loss;
    }

    return std::make_shared<LinearModel>(scaler, std::move(W), std::move(b));
}

}  // namespace idskit

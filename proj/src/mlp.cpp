#include <algorithm>
#include <cmath>
#include <numeric>

#include "idskit/learners.hpp"
#include "idskit/rng.hpp"

namespace idskit {

namespace {

/// Offsets of W_l (in x out) and b_l inside the packed parameter vector.
struct Layout {
    struct Layer {
        std::size_t w_off, b_off, in, out;
    };
    std::vector<Layer> layers;
    std::size_t total = 0;

    explicit Layout(const std::vector<std::size_t>& sizes) {
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            Layer lay{total, 0, sizes[l], sizes[l + 1]};
            total += lay.in * lay.out;
            lay.b_off = total;
            total += lay.out;
            layers.push_back(lay);
        }
    }
};

/// Z = A * W + b for one layer; A is rows x in, Z rows x out.
void affine_forward(const std::vector<double>& params, const Layout::Layer& lay,
                    const Matrix& A, Matrix& Z) {
    const double* W = params.data() + lay.w_off;
    const double* b = params.data() + lay.b_off;
    for (std::size_t r = 0; r < A.rows(); ++r) {
        const auto a = A.row(r);
        auto z = Z.row(r);
        for (std::size_t o = 0; o < lay.out; ++o) z[o] = b[o];
        for (std::size_t i = 0; i < lay.in; ++i) {
            const double av = a[i];
            if (av == 0.0) continue;
            const double* wrow = W + i * lay.out;
            for (std::size_t o = 0; o < lay.out; ++o) z[o] += av * wrow[o];
        }
    }
}

void relu_inplace(Matrix& m) {
    for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
}

}  // namespace

Matrix MlpModel::predict_proba(const Matrix& X) const {
    const Matrix Xs = apply_scaler(scaler_, X);
    const Layout layout(layer_sizes_);
    Matrix act = Xs;
    for (std::size_t l = 0; l < layout.layers.size(); ++l) {
        Matrix next(act.rows(), layout.layers[l].out);
        affine_forward(params_, layout.layers[l], act, next);
        if (l + 1 < layout.layers.size()) relu_inplace(next);
        act = std::move(next);
    }
    for (std::size_t r = 0; r < act.rows(); ++r) softmax_inplace(act.row(r));
    return act;
}

void MlpModel::save_payload(BinaryWriter& w) const {
    w.f64_vec(scaler_.means);
    w.f64_vec(scaler_.stds);
    w.u64(layer_sizes_.size());
    for (std::size_t s : layer_sizes_) w.u64(s);
    w.f64_vec(params_);
}

std::shared_ptr<MlpModel> MlpModel::load_payload(BinaryReader& r) {
    Scaler s;
    s.means = r.f64_vec();
    s.stds = r.f64_vec();
    std::vector<std::size_t> sizes(r.u64());
    for (auto& v : sizes) v = r.u64();
    std::vector<double> params = r.f64_vec();
    return std::make_shared<MlpModel>(std::move(s), std::move(sizes), std::move(params));
}

namespace detail {

/// Gradient of cross-entropy + (alpha/2)||W||^2 / m for one mini-batch.

double mlp_batch_gradient(const std::vector<double>& params, const Layout& layout,
                          const Matrix& batch_x, std::span<const int> batch_y, double alpha,
                          std::vector<double>& grad) {
    const std::size_t L = layout.layers.size();
    const std::size_t m = batch_x.rows();

    std::vector<Matrix> activations(L + 1);
    activations[0] = batch_x;
    for (std::size_t l = 0; l < L; ++l) {
        activations[l + 1] = Matrix(m, layout.layers[l].out);
        affine_forward(params, layout.layers[l], activations[l], activations[l + 1]);
        if (l + 1 < L) relu_inplace(activations[l + 1]);
    }

    Matrix delta;
    double loss = softmax_cross_entropy(activations[L], batch_y, &delta);

    std::fill(grad.begin(), grad.end(), 0.0);
    const double reg_scale = alpha / static_cast<double>(m);
    for (std::size_t l = L; l-- > 0;) {
        const auto& lay = layout.layers[l];
        const Matrix& input = activations[l];
        // dW = input^T delta (+ alpha/m * W), db = column sums of delta.
        for (std::size_t i = 0; i < lay.in; ++i) {
            double* grow = grad.data() + lay.w_off + i * lay.out;
            for (std::size_t r = 0; r < m; ++r) {
                const double av = input(r, i);
                if (av == 0.0) continue;
                const auto drow = delta.row(r);
                for (std::size_t o = 0; o < lay.out; ++o) grow[o] += av * drow[o];
            }
        }
        for (std::size_t o = 0; o < lay.out; ++o) {
            double acc = 0.0;
            for (std::size_t r = 0; r < m; ++r) acc += delta(r, o);
            grad[lay.b_off + o] = acc;
        }
        const double* W = params.data() + lay.w_off;
        double reg = 0.0;
        for (std::size_t i = 0; i < lay.in * lay.out; ++i) {
            reg += W[i] * W[i];
            grad[lay.w_off + i] += reg_scale * W[i];
        }
        loss += 0.5 * reg_scale * reg;

        if (l > 0) {
            // delta_prev = (delta W^T) masked by ReLU activity.
            Matrix prev(m, lay.in);
            for (std::size_t r = 0; r < m; ++r) {
                const auto drow = delta.row(r);
                auto prow = prev.row(r);
                for (std::size_t i = 0; i < lay.in; ++i) {
                    if (activations[l](r, i) <= 0.0) {
                        prow[i] = 0.0;
                        continue;
                    }
                    const double* wrow = W + i * lay.out;
                    double acc = 0.0;
                    for (std::size_t o = 0; o < lay.out; ++o) acc += drow[o] * wrow[o];
                    prow[i] = acc;
                }
            }
            delta = std::move(prev);
        }
    }
    return loss;
}

double mlp_gradient_for_test(const std::vector<double>& params,
                             const std::vector<std::size_t>& layer_sizes, const Matrix& X,
                             std::span<const int> y, double alpha, std::vector<double>& grad) {
    const Layout layout(layer_sizes);
    grad.assign(layout.total, 0.0);
    return mlp_batch_gradient(params, layout, X, y, alpha, grad);
}

std::vector<double> mlp_init_params(const std::vector<std::size_t>& layer_sizes,
                                    std::uint64_t seed) {
    const Layout layout(layer_sizes);
    std::vector<double> params(layout.total, 0.0);
    auto rng = make_rng(seed);
    for (const auto& lay : layout.layers) {
        const double bound = std::sqrt(6.0 / static_cast<double>(lay.in + lay.out));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < lay.in * lay.out; ++i) params[lay.w_off + i] = u(rng);
        // biases start at zero
    }
    return params;
}

}  // namespace detail

ModelPtr fit_mlp(const FeatureMatrix& train, const TrainConfig& cfg) {
    train.validate();
    const std::size_t n = train.n_samples();
    if (n < 2) throw DimensionError("fit_mlp: need at least 2 samples");

    std::vector<std::size_t> sizes;
    sizes.push_back(train.n_features());
    for (std::size_t h : cfg.mlp.hidden) sizes.push_back(h);
    sizes.push_back(train.n_classes());
    const Layout layout(sizes);

    const Scaler scaler = fit_scaler(train.X);
    const Matrix Xs = apply_scaler(scaler, train.X);

    std::vector<double> params =
        detail::mlp_init_params(sizes, derive_seed(cfg.seed, std::string_view("mlp_init")));
    AdamState adam = AdamState::for_size(layout.total);
    std::vector<double> grad(layout.total, 0.0);

    const std::size_t batch = std::min(cfg.mlp.batch_cap, n);
    auto shuffle_rng = make_rng(derive_seed(cfg.seed, std::string_view("mlp_batches")));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.mlp.max_iters; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += batch, ++batches) {
            const std::size_t stop = std::min(n, start + batch);
            const std::size_t m = stop - start;
            Matrix bx(m, Xs.cols());
            std::vector<int> by(m);
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t src = order[start + i];
                std::copy(Xs.row(src).begin(), Xs.row(src).end(), bx.row(i).begin());
                by[i] = train.y[src];
            }
            epoch_loss +=
                detail::mlp_batch_gradient(params, layout, bx, by, cfg.mlp.alpha, grad);
            adam_step(params, grad, adam, cfg.mlp.learning_rate);
        }
        if (!std::isfinite(epoch_loss))
            throw DivergenceError("fit_mlp: non-finite loss at epoch " + std::to_string(epoch));
        (void)batches;
    }

    return std::make_shared<MlpModel>(scaler, std::move(sizes), std::move(params));
}

}  // namespace idskit

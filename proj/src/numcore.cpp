#include "idskit/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace idskit {

Scaler fit_scaler(const Matrix& X) {
    if (X.rows() < 2) throw DimensionError("fit_scaler: need at least 2 rows");
    const std::size_t n = X.rows(), d = X.cols();
    Scaler s;
    s.means.assign(d, 0.0);
    s.stds.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) s.means[c] += X(r, c);
    for (std::size_t c = 0; c < d; ++c) s.means[c] /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = X(r, c) - s.means[c];
            s.stds[c] += diff * diff;
        }
    for (std::size_t c = 0; c < d; ++c) {
        s.stds[c] = std::sqrt(s.stds[c] / static_cast<double>(n));
        if (s.stds[c] <= 0.0) s.stds[c] = 1.0;
    }
    return s;
}

Matrix apply_scaler(const Scaler& s, const Matrix& X) {
    if (X.cols() != s.means.size()) throw DimensionError("apply_scaler: column mismatch");
    Matrix out(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c)
            out(r, c) = (X(r, c) - s.means[c]) / s.stds[c];
    return out;
}

Matrix invert_scaler(const Scaler& s, const Matrix& X) {
    if (X.cols() != s.means.size()) throw DimensionError("invert_scaler: column mismatch");
    Matrix out(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c)
            out(r, c) = X(r, c) * s.stds[c] + s.means[c];
    return out;
}

void symmetric_eigen(const Matrix& A, std::vector<double>& values, Matrix& vectors) {
    const std::size_t d = A.rows();
    if (A.cols() != d) throw DimensionError("symmetric_eigen: matrix not square");

    Matrix S = A;
    // V accumulates rotations; rows end up as eigenvectors.
    Matrix V(d, d);
    for (std::size_t i = 0; i < d; ++i) V(i, i) = 1.0;

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) off += S(p, q) * S(p, q);
        if (off < 1e-24) break;

        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                if (std::abs(S(p, q)) < 1e-300) continue;
                const double theta = (S(q, q) - S(p, p)) / (2.0 * S(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double skp = S(k, p), skq = S(k, q);
                    S(k, p) = c * skp - s * skq;
                    S(k, q) = s * skp + c * skq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double spk = S(p, k), sqk = S(q, k);
                    S(p, k) = c * spk - s * sqk;
                    S(q, k) = s * spk + c * sqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double vpk = V(p, k), vqk = V(q, k);
                    V(p, k) = c * vpk - s * vqk;
                    V(q, k) = s * vpk + c * vqk;
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return S(a, a) > S(b, b); });

    values.resize(d);
    vectors = Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        values[i] = S(order[i], order[i]);
        for (std::size_t k = 0; k < d; ++k) vectors(i, k) = V(order[i], k);
    }
}

PcaModel pca_fit(const Matrix& X, std::size_t k) {
    const std::size_t n = X.rows(), d = X.cols();
    if (n < 2) throw DimensionError("pca_fit: need at least 2 rows");
    if (k < 1 || k > std::min(n - 1, d))
        throw DimensionError("pca_fit: k out of range [1, min(n-1, d)]");

    PcaModel m;
    m.mean.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) m.mean[c] += X(r, c);
    for (std::size_t c = 0; c < d; ++c) m.mean[c] /= static_cast<double>(n);

    Matrix cov(d, d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < d; ++i) {
            const double xi = X(r, i) - m.mean[i];
            for (std::size_t j = i; j < d; ++j)
                cov(i, j) += xi * (X(r, j) - m.mean[j]);
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) /= static_cast<double>(n - 1);
            cov(j, i) = cov(i, j);
        }

    std::vector<double> values;
    Matrix vectors;
    symmetric_eigen(cov, values, vectors);

    m.components = Matrix(k, d);
    m.explained_variance.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        m.explained_variance[i] = std::max(0.0, values[i]);
        // Sign convention: make the largest-magnitude entry positive.
        std::size_t arg = 0;
        for (std::size_t c = 1; c < d; ++c)
            if (std::abs(vectors(i, c)) > std::abs(vectors(i, arg))) arg = c;
        const double sign = vectors(i, arg) < 0 ? -1.0 : 1.0;
        for (std::size_t c = 0; c < d; ++c) m.components(i, c) = sign * vectors(i, c);
    }
    return m;
}

Matrix pca_transform(const PcaModel& m, const Matrix& X) {
    const std::size_t d = m.mean.size(), k = m.components.rows();
    if (X.cols() != d) throw DimensionError("pca_transform: column mismatch");
    Matrix out(X.rows(), k);
    for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t i = 0; i < k; ++i) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c)
                acc += (X(r, c) - m.mean[c]) * m.components(i, c);
            out(r, i) = acc;
        }
    return out;
}

Matrix pca_inverse_transform(const PcaModel& m, const Matrix& Y) {
    const std::size_t d = m.mean.size(), k = m.components.rows();
    if (Y.cols() != k) throw DimensionError("pca_inverse_transform: column mismatch");
    Matrix out(Y.rows(), d);
    for (std::size_t r = 0; r < Y.rows(); ++r)
        for (std::size_t c = 0; c < d; ++c) {
            double acc = m.mean[c];
            for (std::size_t i = 0; i < k; ++i) acc += Y(r, i) * m.components(i, c);
            out(r, c) = acc;
        }
    return out;
}

void softmax_inplace(std::span<double> v) {
    if (v.empty()) return;
    double mx = v[0];
    for (double x : v) mx = std::max(mx, x);
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

std::vector<double> softmax(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    softmax_inplace(out);
    return out;
}

double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* grad) {
    const std::size_t n = logits.rows(), C = logits.cols();
    if (labels.size() != n) throw DimensionError("softmax_cross_entropy: label count mismatch");
    if (grad) *grad = Matrix(n, C);
    double loss = 0.0;
    std::vector<double> p(C);
    for (std::size_t r = 0; r < n; ++r) {
        const auto z = logits.row(r);
        std::copy(z.begin(), z.end(), p.begin());
        softmax_inplace(p);
        const int y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= C)
            throw LabelError("softmax_cross_entropy: label out of range");
        loss -= std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
        if (grad)
            for (std::size_t c = 0; c < C; ++c)
                (*grad)(r, c) = (p[c] - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) /
                                static_cast<double>(n);
    }
    return loss / static_cast<double>(n);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr) {
    const std::size_t n = params.size();
    if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n)
        throw DimensionError("adam_step: shape mismatch");
    state.step_count += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < n; ++i) {
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = b1 * m + (1.0 - b1) * grads[i];
        v = b2 * v + (1.0 - b2) * grads[i] * grads[i];
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

}  // namespace idskit

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "idskit/matrix.hpp"

namespace idskit {

/// Per-column standardization parameters. Columns with zero spread keep
/// std 1 so they map to 0 instead of dividing by zero.
struct Scaler {
    std::vector<double> means;
    std::vector<double> stds;
};

Scaler fit_scaler(const Matrix& X);
Matrix apply_scaler(const Scaler& s, const Matrix& X);
Matrix invert_scaler(const Scaler& s, const Matrix& X);

/// Principal components of the sample covariance.
/// `components` rows are orthonormal; `explained_variance` is nonincreasing.
struct PcaModel {
    Matrix components;  // k x d
    std::vector<double> mean;
    std::vector<double> explained_variance;
};

PcaModel pca_fit(const Matrix& X, std::size_t k);
Matrix pca_transform(const PcaModel& m, const Matrix& X);
/// Maps k-dim scores back to the original space (projection onto the
/// component subspace, plus the mean).
Matrix pca_inverse_transform(const PcaModel& m, const Matrix& Y);

/// Overflow-safe softmax (max-shift). Output is positive and sums to 1.
std::vector<double> softmax(std::span<const double> v);
void softmax_inplace(std::span<double> v);

/// Mean cross-entropy of softmax(logits) against integer labels, and its
/// gradient with respect to the logits: (softmax(z) - onehot(y)) / n.
double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels,
                             Matrix* grad = nullptr);

/// Adam accumulators for one flat parameter vector.
struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::int64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_size(std::size_t n) {
        AdamState s;
        s.first_moment.assign(n, 0.0);
        s.second_moment.assign(n, 0.0);
        return s;
    }
};

/// Bias-corrected Adam update, applied in place.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr);

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Returns eigenvalues in `values` (descending) and matching orthonormal
/// eigenvectors as rows of `vectors`.
void symmetric_eigen(const Matrix& A, std::vector<double>& values, Matrix& vectors);

}  // namespace idskit

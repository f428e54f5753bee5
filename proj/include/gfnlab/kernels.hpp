#pragma once

// Dense layer kernels with hand-written reverse passes. Every kernel is a
// template over the scalar type: training instantiates float, the gradient
// oracles instantiate double.

#include "gfnlab/errors.hpp"
#include "gfnlab/tensor.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace gfnlab {

enum class Mode { Train, Eval };

// ---------------------------------------------------------------------------
// affine: y = x W + b

template <typename T>
Matrix<T> affine(const Matrix<T>& x, const Matrix<T>& weight, const Matrix<T>& bias) {
  require(x.cols() == weight.rows(), "affine: input cols (" + std::to_string(x.cols()) + ") != weight rows (" +
                                         std::to_string(weight.rows()) + ")");
  require(bias.rows() == 1 && bias.cols() == weight.cols(), "affine: bias must be 1 x out");
  Matrix<T> y(x.rows(), weight.cols());
  y.noalias() = x * weight;
  y.rowwise() += bias.row(0);
  return y;
}

/// Accumulates dW += x^T dy, db += colsum(dy); returns dx = dy W^T.
template <typename T>
Matrix<T> affine_backward(const Matrix<T>& x, const Matrix<T>& weight, const Matrix<T>& dy, Matrix<T>& dweight,
                          Matrix<T>& dbias) {
  dweight.noalias() += x.transpose() * dy;
  dbias += dy.colwise().sum();
  Matrix<T> dx(dy.rows(), weight.rows());
  dx.noalias() = dy * weight.transpose();
  return dx;
}

// ---------------------------------------------------------------------------
// relu

template <typename T>
Matrix<T> relu(const Matrix<T>& x) {
  return x.cwiseMax(T(0));
}

/// Gradient passes where x > 0; zero at x == 0.
template <typename T>
Matrix<T> relu_backward(const Matrix<T>& x, const Matrix<T>& dy) {
  return (x.array() > T(0)).select(dy, T(0));
}

// ---------------------------------------------------------------------------
// batch normalization over rows, per column

template <typename T>
struct BatchNormState {
  Matrix<T> running_mean;  // 1 x features
  Matrix<T> running_var;   // 1 x features
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNormState() = default;
  explicit BatchNormState(Index features)
      : running_mean(Matrix<T>::Zero(1, features)), running_var(Matrix<T>::Ones(1, features)) {}
};

template <typename T>
struct BatchNormCache {
  Matrix<T> x_hat;
  Matrix<T> inv_std;  // 1 x features
};

/// Train mode normalizes by batch mean and population variance and updates
/// the running statistics (unbiased variance) with momentum. Eval mode uses
/// the running statistics only.
template <typename T>
Matrix<T> batch_norm(const Matrix<T>& x, const Matrix<T>& gamma, const Matrix<T>& beta, BatchNormState<T>& state,
                     Mode mode, BatchNormCache<T>* cache = nullptr) {
  const Index n = x.rows();
  Matrix<T> mean, var;
  if (mode == Mode::Train) {
    require(n >= 2, "batch_norm: train mode needs at least 2 rows");
    mean = x.colwise().mean();
    var = (x.rowwise() - mean.row(0)).array().square().colwise().mean().matrix();
    const T m = static_cast<T>(state.momentum);
    const T unbias = static_cast<T>(n) / static_cast<T>(n - 1);
    state.running_mean = (T(1) - m) * state.running_mean + m * mean;
    state.running_var = (T(1) - m) * state.running_var + (m * unbias) * var;
  } else {
    mean = state.running_mean;
    var = state.running_var;
  }
  const Matrix<T> inv_std = (var.array() + static_cast<T>(state.eps)).rsqrt().matrix();
  Matrix<T> x_hat = ((x.rowwise() - mean.row(0)).array().rowwise() * inv_std.row(0).array()).matrix();
  Matrix<T> y = ((x_hat.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array()).matrix();
  if (cache) {
    cache->x_hat = std::move(x_hat);
    cache->inv_std = inv_std;
  }
  return y;
}

/// Full train-mode gradient, including the batch-statistic terms:
///   dx = inv_std / n * (n * g - sum(g) - x_hat * sum(g * x_hat)),  g = dy * gamma.
template <typename T>
Matrix<T> batch_norm_backward(const BatchNormCache<T>& cache, const Matrix<T>& gamma, const Matrix<T>& dy,
                              Matrix<T>& dgamma, Matrix<T>& dbeta) {
  const auto n = static_cast<T>(dy.rows());
  dgamma += (dy.array() * cache.x_hat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  const Matrix<T> g = (dy.array().rowwise() * gamma.row(0).array()).matrix();
  const Matrix<T> sum_g = g.colwise().sum();
  const Matrix<T> sum_gx = (g.array() * cache.x_hat.array()).colwise().sum().matrix();
  Matrix<T> dx = (n * g.array()).matrix();
  dx.rowwise() -= sum_g.row(0);
  dx -= (cache.x_hat.array().rowwise() * sum_gx.row(0).array()).matrix();
  dx = (dx.array().rowwise() * (cache.inv_std.row(0).array() / n)).matrix();
  return dx;
}

// ---------------------------------------------------------------------------
// segment sum (global sum pooling over contiguous per-graph node ranges)

struct SegmentIndex {
  std::vector<Index> offsets{0};  // size num_segments + 1, nondecreasing

  Index num_segments() const { return static_cast<Index>(offsets.size()) - 1; }
  Index total_rows() const { return offsets.back(); }
  Index size(Index s) const { return offsets[s + 1] - offsets[s]; }
  /// Per-row segment id.
  std::vector<Index> segment_ids() const;

  static SegmentIndex from_sizes(std::span<const Index> sizes);
};

inline std::vector<Index> SegmentIndex::segment_ids() const {
  std::vector<Index> ids(static_cast<std::size_t>(total_rows()));
  for (Index s = 0; s < num_segments(); ++s)
    for (Index r = offsets[s]; r < offsets[s + 1]; ++r) ids[r] = s;
  return ids;
}

inline SegmentIndex SegmentIndex::from_sizes(std::span<const Index> sizes) {
  SegmentIndex seg;
  seg.offsets.reserve(sizes.size() + 1);
  for (Index s : sizes) seg.offsets.push_back(seg.offsets.back() + s);
  return seg;
}

template <typename T>
Matrix<T> segment_sum(const Matrix<T>& x, const SegmentIndex& seg) {
  require(seg.total_rows() == x.rows(), "segment_sum: segments cover " + std::to_string(seg.total_rows()) +
                                            " rows, input has " + std::to_string(x.rows()));
  Matrix<T> out = Matrix<T>::Zero(seg.num_segments(), x.cols());
  for (Index s = 0; s < seg.num_segments(); ++s)
    for (Index r = seg.offsets[s]; r < seg.offsets[s + 1]; ++r) out.row(s) += x.row(r);
  return out;
}

/// Broadcasts each segment's output-gradient row to its member rows.
template <typename T>
Matrix<T> segment_sum_backward(const Matrix<T>& dy, const SegmentIndex& seg) {
  Matrix<T> dx(seg.total_rows(), dy.cols());
  for (Index s = 0; s < seg.num_segments(); ++s)
    for (Index r = seg.offsets[s]; r < seg.offsets[s + 1]; ++r) dx.row(r) = dy.row(s);
  return dx;
}

// ---------------------------------------------------------------------------
// softmax cross-entropy

template <typename T>
Matrix<T> softmax(const Matrix<T>& logits) {
  Matrix<T> p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

template <typename T>
struct SoftmaxCrossEntropy {
  double loss = 0.0;  // mean negative log-likelihood
  Matrix<T> grad;     // (softmax - onehot) / batch
};

template <typename T>
SoftmaxCrossEntropy<T> softmax_cross_entropy(const Matrix<T>& logits, std::span<const int> labels) {
  require(static_cast<std::size_t>(logits.rows()) == labels.size(), "softmax_cross_entropy: label count mismatch");
  const Index n = logits.rows();
  SoftmaxCrossEntropy<T> out;
  out.grad = softmax(logits);
  double total = 0.0;
  for (Index r = 0; r < n; ++r) {
    const int y = labels[r];
    require(y >= 0 && y < logits.cols(), "softmax_cross_entropy: label out of range");
    const T shift = logits.row(r).maxCoeff();
    const double lse = static_cast<double>(shift) +
                       std::log(static_cast<double>((logits.row(r).array() - shift).exp().sum()));
    total += lse - static_cast<double>(logits(r, y));
    out.grad(r, y) -= T(1);
  }
  out.loss = n > 0 ? total / static_cast<double>(n) : 0.0;
  if (n > 0) out.grad /= static_cast<T>(n);
  return out;
}

/// Row-wise argmax; ties resolve to the lowest class index.
template <typename T>
std::vector<int> argmax_rows(const Matrix<T>& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Index r = 0; r < logits.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < logits.cols(); ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace gfnlab

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>

namespace gfnlab {

using Index = Eigen::Index;

/// Dense row-major 2-D array. Training runs on Matrix<float>; feature
/// precomputation and gradient oracles run on Matrix<double>.
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Tensor = Matrix<float>;
using MatrixD = Matrix<double>;

/// Glorot/Xavier uniform initialization in [-a, a], a = sqrt(6 / (fan_in + fan_out)).
template <typename T>
Matrix<T> glorot_uniform(Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix<T> w(fan_in, fan_out);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(dist(rng));
  return w;
}

/// splitmix64 finalizer; used to derive independent per-fold / per-epoch seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(seed ^ mix_seed(a ^ mix_seed(b)));
}

}  // namespace gfnlab

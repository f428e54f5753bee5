#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace gfnlab {

/// Central differences (f(t + h e_i) - f(t - h e_i)) / 2h for every coordinate.
inline std::vector<double> finite_difference_grad(const std::function<double(std::span<const double>)>& loss,
                                                  std::span<const double> theta, double h = 1e-6) {
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double up = loss(point);
    point[i] = saved - h;
    const double down = loss(point);
    point[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// ||a - b|| / max(||a||, ||b||, floor), Euclidean norms.
inline double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

}  // namespace gfnlab

#pragma once

#include "gfnlab/errors.hpp"
#include "gfnlab/tensor.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace gfnlab {

template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
  Matrix<T> m;  // Adam first moment
  Matrix<T> v;  // Adam second moment
  long step = 0;
};

/// Named parameters with gradients and optimizer state. Indices returned by
/// add() are stable.
template <typename T>
class ParameterSet {
 public:
  std::size_t add(std::string name, Matrix<T> value) {
    Parameter<T> p;
    p.name = std::move(name);
    p.grad = Matrix<T>::Zero(value.rows(), value.cols());
    p.m = p.grad;
    p.v = p.grad;
    p.value = std::move(value);
    params_.push_back(std::move(p));
    return params_.size() - 1;
  }

  Parameter<T>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }
  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  const Parameter<T>* find(const std::string& name) const {
    for (const auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

 private:
  std::vector<Parameter<T>> params_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of a single parameter; clears its gradient.
template <typename T>
void adam_update(Parameter<T>& p, double lr, const AdamConfig& cfg = {}) {
  ++p.step;
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  p.m = b1 * p.m + (T(1) - b1) * p.grad;
  p.v = b2 * p.v + (T(1) - b2) * p.grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step));
  const T step = static_cast<T>(lr / c1);
  const T denom_scale = static_cast<T>(1.0 / std::sqrt(c2));
  p.value.array() -= step * p.m.array() / (p.v.array().sqrt() * denom_scale + static_cast<T>(cfg.eps));
  p.grad.setZero();
}

template <typename T>
void adam_step(ParameterSet<T>& params, double lr, const AdamConfig& cfg = {}) {
  for (auto& p : params) adam_update(p, lr, cfg);
}

}  // namespace gfnlab

#include "gfnlab/models.hpp"

#include <random>

namespace gfnlab {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::GCN: return "gcn";
    case ModelKind::GFN: return "gfn";
    case ModelKind::GFNLight: return "gfn-light";
    case ModelKind::GLN: return "gln";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "gcn") return ModelKind::GCN;
  if (name == "gfn") return ModelKind::GFN;
  if (name == "gfn-light") return ModelKind::GFNLight;
  if (name == "gln") return ModelKind::GLN;
  throw ContractViolation("unknown model kind '" + name + "' (expected gcn, gfn, gfn-light or gln)");
}

ModelConfig ModelConfig::defaults(ModelKind kind, int num_classes) {
  ModelConfig c;
  c.kind = kind;
  c.num_classes = num_classes;
  if (kind == ModelKind::GCN) c.features.K = 0;
  return c;
}

template <typename T>
BatchedGraphs<T> batch_graphs(std::span<const Matrix<T>* const> features,
                              std::span<const NormalizedAdjacency* const> adjacency, std::span<const int> labels) {
  require(features.size() == labels.size(), "batch_graphs: feature/label count mismatch");
  require(adjacency.empty() || adjacency.size() == features.size(), "batch_graphs: adjacency count mismatch");
  BatchedGraphs<T> batch;
  Index rows = 0;
  const Index cols = features.empty() ? 0 : features.front()->cols();
  std::vector<Index> sizes;
  sizes.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    require(features[i]->cols() == cols, "batch_graphs: feature widths differ");
    if (!adjacency.empty())
      require(adjacency[i]->num_nodes() == features[i]->rows(), "batch_graphs: adjacency/feature size mismatch");
    sizes.push_back(features[i]->rows());
    rows += features[i]->rows();
  }
  batch.features.resize(rows, cols);
  Index offset = 0;
  for (const auto* f : features) {
    batch.features.middleRows(offset, f->rows()) = *f;
    offset += f->rows();
  }
  batch.segments = SegmentIndex::from_sizes(sizes);
  batch.labels.assign(labels.begin(), labels.end());
  if (!adjacency.empty()) batch.adjacency = block_diagonal(adjacency);
  return batch;
}

template BatchedGraphs<float> batch_graphs(std::span<const Matrix<float>* const>,
                                           std::span<const NormalizedAdjacency* const>, std::span<const int>);
template BatchedGraphs<double> batch_graphs(std::span<const Matrix<double>* const>,
                                            std::span<const NormalizedAdjacency* const>, std::span<const int>);

template <typename T>
BasicModel<T>::BasicModel(const ModelConfig& config, Index input_dim, std::uint64_t seed)
    : config_(config), input_dim_(input_dim) {
  require(input_dim > 0, "build_model: input_dim must be positive");
  require(config.num_classes >= 1, "build_model: num_classes must be positive");
  require(config.hidden_dim >= 1, "build_model: hidden_dim must be positive");
  std::mt19937_64 rng(seed);
  const Index h = config.hidden_dim;
  const Index c = config.num_classes;

  auto add_dense = [&](const std::string& name, Index in, Index out) {
    Dense d;
    d.weight = params_.add(name + ".weight", glorot_uniform<T>(in, out, rng));
    d.bias = params_.add(name + ".bias", Matrix<T>::Zero(1, out));
    return d;
  };

  int transforms = 0;
  switch (config.kind) {
    case ModelKind::GCN:
    case ModelKind::GFN:
      require(config.num_conv_layers >= 0, "build_model: num_conv_layers must be >= 0");
      transforms = 1 + config.num_conv_layers;
      break;
    case ModelKind::GFNLight: transforms = 1; break;
    case ModelKind::GLN: transforms = 0; break;
  }

  for (int i = 0; i < transforms; ++i) {
    const std::string name = "layer" + std::to_string(i);
    const Dense d = add_dense(name, i == 0 ? input_dim : h, h);
    Transform t;
    t.weight = d.weight;
    t.bias = d.bias;
    t.propagate = config.kind == ModelKind::GCN && i > 0;
    t.normalize = !config.linear_filter;
    if (t.normalize) {
      t.gamma = params_.add(name + ".bn.gamma", Matrix<T>::Ones(1, h));
      t.beta = params_.add(name + ".bn.beta", Matrix<T>::Zero(1, h));
      t.bn = BatchNormState<T>(h);
    }
    stack_.push_back(std::move(t));
  }

  if (config.kind == ModelKind::GLN) {
    fc_out_ = add_dense("head.out", input_dim, c);
  } else {
    fc_hidden_ = add_dense("head.hidden", h, h);
    fc_out_ = add_dense("head.out", h, c);
  }
}

template <typename T>
Matrix<T> BasicModel<T>::run_stack(const BatchedGraphs<T>& batch, Mode mode, bool keep_cache) {
  require(batch.features.cols() == input_dim_, "forward: batch feature width " +
                                                   std::to_string(batch.features.cols()) + " != model input " +
                                                   std::to_string(input_dim_));
  Matrix<T> h = batch.features;
  for (auto& t : stack_) {
    Matrix<T> mixed;
    if (t.propagate) {
      require(batch.adjacency.has_value(), "forward: GCN batch has no adjacency");
      mixed = spmm(*batch.adjacency, h);
    } else {
      mixed = std::move(h);
    }
    Matrix<T> z = affine(mixed, params_[t.weight].value, params_[t.bias].value);
    if (t.normalize) {
      // Eval-mode forwards must not move the running statistics.
      BatchNormState<T> scratch;
      BatchNormState<T>& bn = mode == Mode::Train ? t.bn : (scratch = t.bn);
      z = batch_norm(z, params_[t.gamma].value, params_[t.beta].value, bn, mode, keep_cache ? &t.bn_cache : nullptr);
      h = relu(z);
      if (keep_cache) t.pre_relu = std::move(z);
    } else {
      h = std::move(z);
    }
    if (keep_cache) t.mixed = std::move(mixed);
  }
  return h;
}

template <typename T>
Matrix<T> BasicModel<T>::forward(const BatchedGraphs<T>& batch, Mode mode) {
  Matrix<T> nodes = run_stack(batch, mode, true);
  last_mode_ = mode;
  last_batch_ = &batch;
  segments_ = batch.segments;
  pooled_ = segment_sum(nodes, batch.segments);
  if (!fc_hidden_) return affine(pooled_, params_[fc_out_.weight].value, params_[fc_out_.bias].value);
  hidden_pre_ = affine(pooled_, params_[fc_hidden_->weight].value, params_[fc_hidden_->bias].value);
  hidden_ = relu(hidden_pre_);
  return affine(hidden_, params_[fc_out_.weight].value, params_[fc_out_.bias].value);
}

template <typename T>
void BasicModel<T>::backward(const Matrix<T>& dlogits) {
  require(last_batch_ != nullptr, "backward: no forward pass to differentiate");
  auto& out_w = params_[fc_out_.weight];
  auto& out_b = params_[fc_out_.bias];
  Matrix<T> dpooled;
  if (fc_hidden_) {
    Matrix<T> dhidden = affine_backward(hidden_, out_w.value, dlogits, out_w.grad, out_b.grad);
    dhidden = relu_backward(hidden_pre_, dhidden);
    auto& hw = params_[fc_hidden_->weight];
    auto& hb = params_[fc_hidden_->bias];
    dpooled = affine_backward(pooled_, hw.value, dhidden, hw.grad, hb.grad);
  } else {
    // GLN: the pooled input is data; only the weight/bias gradients matter.
    out_w.grad.noalias() += pooled_.transpose() * dlogits;
    out_b.grad += dlogits.colwise().sum();
    return;
  }

  Matrix<T> d = segment_sum_backward(dpooled, segments_);
  for (std::size_t i = stack_.size(); i-- > 0;) {
    auto& t = stack_[i];
    if (t.normalize) {
      d = relu_backward(t.pre_relu, d);
      auto& gamma = params_[t.gamma];
      auto& beta = params_[t.beta];
      if (last_mode_ == Mode::Train) {
        d = batch_norm_backward(t.bn_cache, gamma.value, d, gamma.grad, beta.grad);
      } else {
        gamma.grad += (d.array() * t.bn_cache.x_hat.array()).colwise().sum().matrix();
        beta.grad += d.colwise().sum();
        d = (d.array().rowwise() * (gamma.value.array() * t.bn_cache.inv_std.array()).row(0)).matrix();
      }
    }
    auto& w = params_[t.weight];
    auto& b = params_[t.bias];
    if (i == 0) {
      // Input features are data: skip the input gradient.
      w.grad.noalias() += t.mixed.transpose() * d;
      b.grad += d.colwise().sum();
      break;
    }
    Matrix<T> dmixed = affine_backward(t.mixed, w.value, d, w.grad, b.grad);
    d = t.propagate ? spmm(*last_batch_->adjacency, dmixed) : std::move(dmixed);
  }
}

template <typename T>
Matrix<T> BasicModel<T>::filter(const BatchedGraphs<T>& batch, Mode mode) {
  std::vector<Transform> saved = stack_;
  Matrix<T> nodes = run_stack(batch, mode, false);
  // Restore running statistics so that filter() never mutates the model.
  for (std::size_t i = 0; i < stack_.size(); ++i) stack_[i].bn = saved[i].bn;
  return nodes;
}

template <typename T>
Matrix<T> BasicModel<T>::set_function(const Matrix<T>& node_states, const SegmentIndex& segments) const {
  const Matrix<T> pooled = segment_sum(node_states, segments);
  if (!fc_hidden_) return affine(pooled, params_[fc_out_.weight].value, params_[fc_out_.bias].value);
  const Matrix<T> hidden = relu(affine(pooled, params_[fc_hidden_->weight].value, params_[fc_hidden_->bias].value));
  return affine(hidden, params_[fc_out_.weight].value, params_[fc_out_.bias].value);
}

template <typename T>
std::vector<typename BasicModel<T>::NamedBatchNorm> BasicModel<T>::batch_norm_states() {
  std::vector<NamedBatchNorm> out;
  for (std::size_t i = 0; i < stack_.size(); ++i)
    if (stack_[i].normalize) out.push_back({"layer" + std::to_string(i) + ".bn", &stack_[i].bn});
  return out;
}

template class BasicModel<float>;
template class BasicModel<double>;

std::size_t parameter_count(const ModelConfig& config, Index input_dim) {
  return BasicModel<float>(config, input_dim, 0).parameters().scalar_count();
}

}  // namespace gfnlab

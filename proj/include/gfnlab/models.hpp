#pragma once

#include "gfnlab/features.hpp"
#include "gfnlab/graph.hpp"
#include "gfnlab/kernels.hpp"
#include "gfnlab/optim.hpp"
#include "gfnlab/sparse.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gfnlab {

enum class ModelKind { GCN, GFN, GFNLight, GLN };

std::string to_string(ModelKind kind);
/// Accepts "gcn", "gfn", "gfn-light", "gln"; throws ContractViolation otherwise.
ModelKind parse_model_kind(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::GFN;
  int hidden_dim = 128;
  /// Graph-conv layers after the dense input layer (GCN); GFN mirrors them
  /// with dense transform layers. Ignored by GFN-light and GLN.
  int num_conv_layers = 3;
  FeatureSpec features;
  int num_classes = 2;
  /// Identity activation and no batch norm in the filtering stack. Only used
  /// to check the linear-collapse property.
  bool linear_filter = false;

  /// Defaults for each kind: GCN consumes [d, X] and propagates itself;
  /// GFN, GFN-light and GLN consume [d, X, A~X, A~^2X, A~^3X].
  static ModelConfig defaults(ModelKind kind, int num_classes);
  bool uses_adjacency() const { return kind == ModelKind::GCN; }
};

/// Mini-batch of graphs stacked as a block-diagonal system.
template <typename T>
struct BatchedGraphs {
  std::optional<NormalizedAdjacency> adjacency;  // only when the model propagates
  Matrix<T> features;
  SegmentIndex segments;
  std::vector<int> labels;

  Index num_graphs() const { return segments.num_segments(); }
};

/// Stacks per-graph inputs. `adjacency` may be empty; otherwise one block per graph.
template <typename T>
BatchedGraphs<T> batch_graphs(std::span<const Matrix<T>* const> features,
                              std::span<const NormalizedAdjacency* const> adjacency, std::span<const int> labels);

/// out = (A~ H) W + b. `propagated`, when given, receives A~ H for the backward pass.
template <typename T>
Matrix<T> gcn_layer(const NormalizedAdjacency& adj, const Matrix<T>& h, const Matrix<T>& weight,
                    const Matrix<T>& bias, Matrix<T>* propagated = nullptr) {
  require(adj.num_nodes() == h.rows(), "gcn_layer: adjacency size does not match node count");
  Matrix<T> mixed = spmm(adj, h);
  Matrix<T> out = affine(mixed, weight, bias);
  if (propagated) *propagated = std::move(mixed);
  return out;
}

/// Accumulates weight/bias gradients; returns dH = A~^T (dy W^T) = A~ (dy W^T).
template <typename T>
Matrix<T> gcn_layer_backward(const NormalizedAdjacency& adj, const Matrix<T>& propagated, const Matrix<T>& weight,
                             const Matrix<T>& dy, Matrix<T>& dweight, Matrix<T>& dbias) {
  const Matrix<T> dmixed = affine_backward(propagated, weight, dy, dweight, dbias);
  return spmm(adj, dmixed);
}

/// A~^K X (W_1 W_2 ... W_K): K sparse propagations followed by one dense
/// product with the collapsed weight. Equals K bias-free GCN layers with
/// identity activation.
template <typename T>
Matrix<T> collapse_linear_gcn(std::span<const Matrix<T>> weights, const NormalizedAdjacency& adj,
                              const Matrix<T>& x) {
  require(!weights.empty(), "collapse_linear_gcn: need at least one weight");
  require(weights.front().rows() == x.cols(), "collapse_linear_gcn: X cols != first weight rows");
  Matrix<T> theta = weights.front();
  for (std::size_t i = 1; i < weights.size(); ++i) {
    require(weights[i].rows() == theta.cols(), "collapse_linear_gcn: weights are not chainable");
    theta = (theta * weights[i]).eval();
  }
  Matrix<T> propagated = x;
  for (std::size_t k = 0; k < weights.size(); ++k) propagated = spmm(adj, propagated);
  return propagated * theta;
}

/// GCN, GFN, GFN-light and GLN built from the dense kernels.
///
///   GCN       dense(in->h)+BN+ReLU, L x [graph-conv+BN+ReLU], sum-pool, fc(h->h)+ReLU, fc(h->c)
///   GFN       same with every graph-conv replaced by a dense transform
///   GFN-light dense(in->h)+BN+ReLU, sum-pool, fc(h->h)+ReLU, fc(h->c)
///   GLN       sum-pool, fc(in->c)
template <typename T>
class BasicModel {
 public:
  BasicModel(const ModelConfig& config, Index input_dim, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  Index input_dim() const { return input_dim_; }

  /// One logit row per graph. Caches activations for backward().
  Matrix<T> forward(const BatchedGraphs<T>& batch, Mode mode);
  /// Accumulates parameter gradients for the last forward().
  void backward(const Matrix<T>& dlogits);

  /// Node states produced by the filtering stack (before pooling). Does not
  /// touch the backward caches.
  Matrix<T> filter(const BatchedGraphs<T>& batch, Mode mode);
  /// Sum pooling followed by the readout head.
  Matrix<T> set_function(const Matrix<T>& node_states, const SegmentIndex& segments) const;

  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }

  struct NamedBatchNorm {
    std::string name;
    BatchNormState<T>* state;
  };
  std::vector<NamedBatchNorm> batch_norm_states();

 private:
  struct Transform {
    std::size_t weight = 0, bias = 0, gamma = 0, beta = 0;
    bool propagate = false;
    bool normalize = true;
    BatchNormState<T> bn;
    Matrix<T> mixed;     // input (dense) or A~ input (graph-conv)
    Matrix<T> pre_relu;  // BN output
    BatchNormCache<T> bn_cache;
  };
  struct Dense {
    std::size_t weight = 0, bias = 0;
  };

  Matrix<T> run_stack(const BatchedGraphs<T>& batch, Mode mode, bool keep_cache);

  ModelConfig config_;
  Index input_dim_ = 0;
  ParameterSet<T> params_;
  std::vector<Transform> stack_;
  std::optional<Dense> fc_hidden_;
  Dense fc_out_;

  // Backward caches.
  Mode last_mode_ = Mode::Eval;
  const BatchedGraphs<T>* last_batch_ = nullptr;
  SegmentIndex segments_;
  Matrix<T> pooled_;
  Matrix<T> hidden_pre_;
  Matrix<T> hidden_;
};

using Model = BasicModel<float>;

extern template class BasicModel<float>;
extern template class BasicModel<double>;

/// Parameter count of a freshly built model, in scalars.
std::size_t parameter_count(const ModelConfig& config, Index input_dim);

/// Checkpoint: magic line, JSON header (config, input_dim, tensor names and
/// shapes), then row-major float32 values in header order. Batch-norm
/// running statistics are stored as tensors named "<layer>.bn.running_mean"
/// and "<layer>.bn.running_var".
void save_checkpoint(Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace gfnlab

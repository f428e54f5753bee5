#pragma once

#include "gfnlab/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gfnlab {

using NodeId = std::uint32_t;

/// Immutable undirected graph in compressed-row form. Every undirected edge
/// is stored in both directions; self-loops and duplicates are never stored.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from an arbitrary edge list: edges are symmetrized and
  /// deduplicated, self-loops are dropped. Throws StructuralError if an
  /// endpoint is out of range.
  static Graph from_edges(std::size_t num_nodes,
                          std::span<const std::pair<NodeId, NodeId>> edges,
                          std::size_t* dropped_self_loops = nullptr);

  std::size_t num_nodes() const { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
  std::size_t edge_count() const { return neighbors_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {neighbors_.data() + row_offsets_[v], neighbors_.data() + row_offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const { return row_offsets_[v + 1] - row_offsets_[v]; }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const NodeId> column_indices() const { return neighbors_; }

  /// Relabels node v as perm[v].
  Graph permuted(std::span<const NodeId> perm) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::size_t> row_offsets_{0};
  std::vector<NodeId> neighbors_;  // sorted within each row
};

struct AttributedGraph {
  Graph graph;
  MatrixD node_features;  // num_nodes x feature_dim
  int label = 0;
};

/// Reference statistics from the published dataset tables; all optional.
struct DatasetMeta {
  std::optional<std::size_t> expected_graph_count;
  std::optional<int> expected_class_count;
  std::optional<Index> expected_feature_dim;
  std::optional<double> avg_nodes;
  std::optional<double> avg_edges;
};

struct Dataset {
  std::string name;
  std::vector<AttributedGraph> graphs;
  int num_classes = 0;
  Index feature_dim = 0;
  DatasetMeta meta;

  std::size_t size() const { return graphs.size(); }
  std::vector<int> labels() const;
  /// Throws ContractViolation when an invariant (feature width, label range,
  /// feature row counts) does not hold.
  void check_invariants() const;
  /// Stable 64-bit hash of structure, features and labels.
  std::uint64_t fingerprint() const;
};

/// Compressed sparse row matrix with 64-bit values.
struct CsrMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<Index> row_ptr{0};
  std::vector<Index> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }
  MatrixD to_dense() const;
};

/// (A + eps*I) scaled symmetrically by D~^{-1/2}, D~_ii = deg(i) + eps.
struct NormalizedAdjacency {
  CsrMatrix matrix;
  double epsilon = 1.0;

  Index num_nodes() const { return matrix.rows; }
};

std::vector<double> node_degrees(const Graph& graph);
std::size_t max_degree(const Dataset& dataset);

NormalizedAdjacency normalized_adjacency(const Graph& graph, double epsilon = 1.0);

/// One-hot rows of width max_bucket + 1, hot index min(degree, max_bucket).
MatrixD degree_one_hot(std::span<const double> degrees, std::size_t max_bucket);

/// Stacks adjacency blocks along the diagonal; no cross-block entries.
NormalizedAdjacency block_diagonal(std::span<const NormalizedAdjacency* const> blocks);

}  // namespace gfnlab

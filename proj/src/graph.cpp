#include "gfnlab/graph.hpp"

#include "gfnlab/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>

namespace gfnlab {

namespace {

std::atomic<bool> g_warnings_enabled{true};

struct Fnv1a {
  std::uint64_t state = 0xcbf29ce484222325ULL;
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
};

}  // namespace

void warn(std::string_view message) {
  if (g_warnings_enabled.load()) std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings_enabled.store(enabled); }

Graph Graph::from_edges(std::size_t num_nodes, std::span<const std::pair<NodeId, NodeId>> edges,
                        std::size_t* dropped_self_loops) {
  std::vector<std::vector<NodeId>> adj(num_nodes);
  std::size_t loops = 0;
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw StructuralError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") references a node outside [0, " + std::to_string(num_nodes) + ")");
    }
    if (u == v) {
      ++loops;
      continue;
    }
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  if (dropped_self_loops) *dropped_self_loops = loops;

  Graph g;
  g.row_offsets_.assign(1, 0);
  g.row_offsets_.reserve(num_nodes + 1);
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    g.neighbors_.insert(g.neighbors_.end(), row.begin(), row.end());
    g.row_offsets_.push_back(g.neighbors_.size());
  }
  return g;
}

Graph Graph::permuted(std::span<const NodeId> perm) const {
  require(perm.size() == num_nodes(), "permutation size must equal node count");
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(neighbors_.size());
  for (NodeId u = 0; u < num_nodes(); ++u)
    for (NodeId v : neighbors(u))
      if (u < v) edges.emplace_back(perm[u], perm[v]);
  return from_edges(num_nodes(), edges);
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(g.label);
  return out;
}

void Dataset::check_invariants() const {
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    if (static_cast<std::size_t>(g.node_features.rows()) != g.graph.num_nodes())
      throw ContractViolation("graph " + std::to_string(i) + ": feature rows != node count");
    if (g.node_features.cols() != feature_dim)
      throw ContractViolation("graph " + std::to_string(i) + ": feature width mismatch");
    if (g.label < 0 || g.label >= num_classes)
      throw ContractViolation("graph " + std::to_string(i) + ": label out of range");
  }
}

std::uint64_t Dataset::fingerprint() const {
  Fnv1a h;
  h.value(graphs.size());
  h.value(num_classes);
  h.value(feature_dim);
  for (const auto& g : graphs) {
    h.value(g.label);
    h.value(g.graph.num_nodes());
    for (auto off : g.graph.row_offsets()) h.value(off);
    for (auto nb : g.graph.column_indices()) h.value(nb);
    h.bytes(g.node_features.data(), sizeof(double) * static_cast<std::size_t>(g.node_features.size()));
  }
  return h.state;
}

MatrixD CsrMatrix::to_dense() const {
  MatrixD out = MatrixD::Zero(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index p = row_ptr[r]; p < row_ptr[r + 1]; ++p) out(r, col_idx[p]) += values[p];
  return out;
}

std::vector<double> node_degrees(const Graph& graph) {
  std::vector<double> d(graph.num_nodes());
  for (NodeId v = 0; v < graph.num_nodes(); ++v) d[v] = static_cast<double>(graph.degree(v));
  return d;
}

std::size_t max_degree(const Dataset& dataset) {
  std::size_t m = 0;
  for (const auto& g : dataset.graphs)
    for (NodeId v = 0; v < g.graph.num_nodes(); ++v) m = std::max(m, g.graph.degree(v));
  return m;
}

NormalizedAdjacency normalized_adjacency(const Graph& graph, double epsilon) {
  require(epsilon > 0.0, "normalized_adjacency: epsilon must be positive");
  const auto n = static_cast<Index>(graph.num_nodes());
  std::vector<double> inv_sqrt(n);
  for (Index v = 0; v < n; ++v)
    inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(graph.degree(static_cast<NodeId>(v))) + epsilon);

  NormalizedAdjacency out;
  out.epsilon = epsilon;
  CsrMatrix& m = out.matrix;
  m.rows = m.cols = n;
  m.row_ptr.assign(1, 0);
  m.col_idx.reserve(2 * graph.edge_count() + n);
  m.values.reserve(2 * graph.edge_count() + n);
  for (Index u = 0; u < n; ++u) {
    bool diag_done = false;
    auto emit_diag = [&] {
      m.col_idx.push_back(u);
      m.values.push_back(epsilon * inv_sqrt[u] * inv_sqrt[u]);
      diag_done = true;
    };
    for (NodeId v : graph.neighbors(static_cast<NodeId>(u))) {
      if (!diag_done && static_cast<Index>(v) > u) emit_diag();
      m.col_idx.push_back(v);
      // Same expression for (u,v) and (v,u): the product is commutative in
      // IEEE arithmetic, so the stored matrix is exactly symmetric.
      m.values.push_back(inv_sqrt[u] * inv_sqrt[v]);
    }
    if (!diag_done) emit_diag();
    m.row_ptr.push_back(static_cast<Index>(m.values.size()));
  }
  return out;
}

MatrixD degree_one_hot(std::span<const double> degrees, std::size_t max_bucket) {
  require(max_bucket >= 1, "degree_one_hot: max_bucket must be >= 1");
  MatrixD out = MatrixD::Zero(static_cast<Index>(degrees.size()), static_cast<Index>(max_bucket + 1));
  for (std::size_t v = 0; v < degrees.size(); ++v) {
    const auto d = static_cast<std::size_t>(std::max(0.0, degrees[v]));
    out(static_cast<Index>(v), static_cast<Index>(std::min(d, max_bucket))) = 1.0;
  }
  return out;
}

NormalizedAdjacency block_diagonal(std::span<const NormalizedAdjacency* const> blocks) {
  NormalizedAdjacency out;
  CsrMatrix& m = out.matrix;
  std::size_t nnz = 0;
  for (const auto* b : blocks) {
    m.rows += b->matrix.rows;
    nnz += b->matrix.nnz();
  }
  m.cols = m.rows;
  if (!blocks.empty()) out.epsilon = blocks.front()->epsilon;
  m.row_ptr.reserve(static_cast<std::size_t>(m.rows) + 1);
  m.col_idx.reserve(nnz);
  m.values.reserve(nnz);
  Index offset = 0;
  for (const auto* b : blocks) {
    const CsrMatrix& s = b->matrix;
    for (Index r = 0; r < s.rows; ++r) {
      for (Index p = s.row_ptr[r]; p < s.row_ptr[r + 1]; ++p) {
        m.col_idx.push_back(s.col_idx[p] + offset);
        m.values.push_back(s.values[p]);
      }
      m.row_ptr.push_back(static_cast<Index>(m.values.size()));
    }
    offset += s.rows;
  }
  return out;
}

}  // namespace gfnlab

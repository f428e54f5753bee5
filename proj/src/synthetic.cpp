#include "gfnlab/synthetic.hpp"

#include "gfnlab/errors.hpp"

#include <algorithm>
#include <random>

namespace gfnlab {

Dataset generate_synthetic_dataset(std::size_t num_graphs, std::uint64_t seed) {
  require(num_graphs >= 2, "generate_synthetic_dataset: need at least 2 graphs");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size_dist(4, 12);

  Dataset ds;
  ds.name = "synthetic";
  ds.num_classes = 2;
  ds.feature_dim = 1;
  ds.graphs.reserve(num_graphs);
  for (std::size_t i = 0; i < num_graphs; ++i) {
    const std::size_t n = size_dist(rng);
    const int label = static_cast<int>(i % 2);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t v = 0; v < n; ++v) {
      if (label == 0)
        edges.emplace_back(static_cast<NodeId>(v), static_cast<NodeId>((v + 1) % n));
      else if (v > 0)
        edges.emplace_back(0, static_cast<NodeId>(v));
    }
    AttributedGraph g;
    g.graph = Graph::from_edges(n, edges);
    g.node_features = MatrixD::Ones(static_cast<Index>(n), 1);
    g.label = label;
    ds.graphs.push_back(std::move(g));
  }
  ds.meta.expected_graph_count = num_graphs;
  ds.meta.expected_class_count = 2;
  ds.meta.expected_feature_dim = 1;
  return ds;
}

Dataset generate_dense_dataset(std::size_t num_graphs, std::uint64_t seed, std::size_t min_nodes,
                               std::size_t max_nodes, std::size_t edge_factor) {
  require(num_graphs >= 2, "generate_dense_dataset: need at least 2 graphs");
  require(min_nodes >= 2 && min_nodes <= max_nodes, "generate_dense_dataset: bad node range");
  require(2 * edge_factor <= min_nodes - 1, "generate_dense_dataset: edge_factor too large for min_nodes");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size_dist(min_nodes, max_nodes);

  Dataset ds;
  ds.name = "synthetic-dense";
  ds.num_classes = 2;
  ds.feature_dim = 1;
  for (std::size_t i = 0; i < num_graphs; ++i) {
    const std::size_t n = size_dist(rng);
    const int label = static_cast<int>(i % 2);
    std::vector<std::pair<NodeId, NodeId>> all;
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = u + 1; v < n; ++v) all.emplace_back(u, v);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(edge_factor * n);
    if (label == 1)
      for (NodeId v = 1; v < n; ++v) all.emplace_back(0, v);
    AttributedGraph g;
    g.graph = Graph::from_edges(n, all);
    g.node_features = MatrixD::Ones(static_cast<Index>(n), 1);
    g.label = label;
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

}  // namespace gfnlab

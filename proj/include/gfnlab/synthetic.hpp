#pragma once

#include "gfnlab/graph.hpp"

#include <cstdint>

namespace gfnlab {

/// Offline two-class corpus: class 0 are cycles, class 1 are stars, sizes drawn
/// uniformly from [4, 12], X = ones column. Graph i has class i % 2.
Dataset generate_synthetic_dataset(std::size_t num_graphs, std::uint64_t seed);

/// Edge-dense corpus for timing runs: each graph has n in [min_nodes, max_nodes]
/// nodes and edge_factor * n distinct undirected edges drawn uniformly; class 1
/// graphs additionally wire node 0 to every other node. X = ones column.
Dataset generate_dense_dataset(std::size_t num_graphs, std::uint64_t seed, std::size_t min_nodes = 16,
                               std::size_t max_nodes = 32, std::size_t edge_factor = 6);

}  // namespace gfnlab

#pragma once

#include "gfnlab/graph.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gfnlab {

enum class DegreeEncoding { OneHot, Raw };

/// Which blocks of [d, X, A~X, ..., A~^K X] to build.
struct FeatureSpec {
  bool use_degree = true;
  bool include_raw = true;
  int K = 3;
  double epsilon = 1.0;
  DegreeEncoding degree_encoding = DegreeEncoding::OneHot;

  /// Throws ContractViolation on K < 0, epsilon <= 0, or an empty spec.
  void validate() const;
  /// Short cell name used in ablation tables, e.g. "d+A1-3X".
  std::string label() const;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

enum class BlockKind { Degree, Raw, Propagated };

struct ColumnBlock {
  BlockKind kind = BlockKind::Raw;
  int scale = 0;  // k for propagated blocks, 0 otherwise
  Index offset = 0;
  Index width = 0;

  friend bool operator==(const ColumnBlock&, const ColumnBlock&) = default;
};

struct AugmentedFeatures {
  MatrixD matrix;                    // num_nodes x width
  std::vector<ColumnBlock> schema;   // in column order

  Index width() const { return matrix.cols(); }
  std::vector<std::string> column_names() const;
  const ColumnBlock* find(BlockKind kind, int scale = 0) const;
  /// Copy of one block's columns; throws ContractViolation if absent.
  MatrixD block(BlockKind kind, int scale = 0) const;
};

/// Schema alone, for a given raw width and degree cap.
std::vector<ColumnBlock> feature_schema(const FeatureSpec& spec, Index raw_width, std::size_t degree_cap);

/// Builds [d, X, A~X, ..., A~^K X] (blocks per spec). Propagation is iterative:
/// block k is spmm applied to block k-1.
AugmentedFeatures augment(const Graph& graph, const MatrixD& X, const FeatureSpec& spec, std::size_t degree_cap);

struct PrecomputeOptions {
  /// Directory for the on-disk cache; no caching when unset.
  std::optional<std::filesystem::path> cache_dir;
};

struct PrecomputedFeatures {
  std::vector<AugmentedFeatures> graphs;
  std::size_t degree_cap = 1;
  bool cache_hit = false;
  double seconds = 0.0;
  std::optional<std::filesystem::path> cache_file;

  Index width() const { return graphs.empty() ? 0 : graphs.front().width(); }
};

/// Degree cap used for one-hot encoding: dataset-wide max degree, at least 1.
std::size_t dataset_degree_cap(const Dataset& dataset);

/// Augmented features for every graph, in dataset order. A cache file keyed by
/// (dataset name, content fingerprint, spec, degree cap) is reused when
/// valid; a corrupt file is recomputed and rewritten with a warning.
PrecomputedFeatures precompute_dataset(const Dataset& dataset, const FeatureSpec& spec,
                                       const PrecomputeOptions& options = {});

/// Cache directory from GFNLAB_CACHE, if set.
std::optional<std::filesystem::path> cache_dir_from_env();

/// Writes graph_00000.csv ... into `directory`. Each file starts with a
/// "# schema:" comment line, then the column header, then one row per node.
std::vector<std::filesystem::path> export_features_csv(const PrecomputedFeatures& features,
                                                       const std::filesystem::path& directory,
                                                       const std::string& dataset_name, std::uint64_t seed);

}  // namespace gfnlab

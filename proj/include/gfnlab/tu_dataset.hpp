#pragma once

#include "gfnlab/graph.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace gfnlab {

struct TuParseOptions {
  /// Z-score continuous node attributes over all nodes of the dataset.
  bool normalize_attributes = false;
  /// Reference statistics to validate against. When unset, the built-in
  /// table for well-known benchmark names is used.
  std::optional<DatasetMeta> meta;
};

/// Reads the TU benchmark layout:
///   {name}_A.txt, {name}_graph_indicator.txt, {name}_graph_labels.txt,
///   optional {name}_node_labels.txt and {name}_node_attributes.txt.
/// Node features are [one-hot(node label), raw attributes]; a ones column
/// when neither node file exists.
Dataset parse_tu_dataset(const std::filesystem::path& directory, const std::string& name,
                         const TuParseOptions& options = {});

/// Canonical TU directory name for common short names (IMDB-B -> IMDB-BINARY).
std::string canonical_dataset_name(const std::string& name);

/// Published statistics for the standard benchmarks, keyed by canonical name.
std::optional<DatasetMeta> known_dataset_meta(const std::string& name);

}  // namespace gfnlab

#include "gfnlab/tu_dataset.hpp"

#include "gfnlab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace gfnlab {

namespace {

namespace fs = std::filesystem;

bool is_separator(char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; }

/// Splits a line on commas and whitespace, skipping empty fields.
std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_separator(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_separator(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (tokenize(line).empty()) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

long long parse_int(std::string_view tok, const fs::path& file, std::size_t line_no) {
  long long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end)
    throw ParseError(file.filename().string() + ":" + std::to_string(line_no) + ": expected integer, got '" +
                     std::string(tok) + "'");
  return v;
}

double parse_double(std::string_view tok, const fs::path& file, std::size_t line_no) {
  // std::from_chars for double is not available in every libstdc++ we target.
  std::string s(tok);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size())
    throw ParseError(file.filename().string() + ":" + std::to_string(line_no) + ": expected number, got '" + s +
                     "'");
  return v;
}

std::vector<long long> read_int_column(const fs::path& path) {
  const auto lines = read_lines(path);
  std::vector<long long> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto toks = tokenize(lines[i]);
    out.push_back(parse_int(toks.front(), path, i + 1));
  }
  return out;
}

fs::path require_file(const fs::path& dir, const std::string& name, const char* suffix) {
  fs::path p = dir / (name + suffix);
  if (!fs::is_regular_file(p)) throw ParseError("missing mandatory file " + p.string());
  return p;
}

}  // namespace

std::string canonical_dataset_name(const std::string& name) {
  static const std::map<std::string, std::string> aliases = {
      {"IMDB-B", "IMDB-BINARY"},      {"IMDB-M", "IMDB-MULTI"}, {"RE-M5K", "REDDIT-MULTI-5K"},
      {"RE-M12K", "REDDIT-MULTI-12K"}, {"D&D", "DD"},
  };
  auto it = aliases.find(name);
  return it == aliases.end() ? name : it->second;
}

std::optional<DatasetMeta> known_dataset_meta(const std::string& name) {
  struct Row {
    const char* name;
    std::size_t graphs;
    int classes;
    Index features;
    double avg_nodes;
    double avg_edges;
  };
  static constexpr Row table[] = {
      {"MUTAG", 188, 2, 7, 17.93, 19.79},
      {"NCI1", 4110, 2, 37, 29.87, 32.30},
      {"PROTEINS", 1113, 2, 4, 39.06, 72.82},
      {"DD", 1178, 2, 82, 284.32, 715.66},
      {"ENZYMES", 600, 6, 21, 32.63, 62.14},
      {"COLLAB", 5000, 3, 1, 74.49, 2457.78},
      {"IMDB-BINARY", 1000, 2, 1, 19.77, 96.53},
      {"IMDB-MULTI", 1500, 3, 1, 13.00, 65.94},
      {"REDDIT-MULTI-5K", 4999, 5, 1, 508.52, 594.87},
      {"REDDIT-MULTI-12K", 11929, 11, 1, 391.41, 456.89},
  };
  const std::string canon = canonical_dataset_name(name);
  for (const auto& r : table) {
    if (canon == r.name) {
      DatasetMeta m;
      m.expected_graph_count = r.graphs;
      m.expected_class_count = r.classes;
      m.expected_feature_dim = r.features;
      m.avg_nodes = r.avg_nodes;
      m.avg_edges = r.avg_edges;
      return m;
    }
  }
  return std::nullopt;
}

Dataset parse_tu_dataset(const fs::path& directory, const std::string& name, const TuParseOptions& options) {
  const fs::path edges_path = require_file(directory, name, "_A.txt");
  const fs::path indicator_path = require_file(directory, name, "_graph_indicator.txt");
  const fs::path graph_labels_path = require_file(directory, name, "_graph_labels.txt");
  const fs::path node_labels_path = directory / (name + "_node_labels.txt");
  const fs::path node_attr_path = directory / (name + "_node_attributes.txt");

  // Node -> graph assignment (1-based in the file).
  const auto indicator = read_int_column(indicator_path);
  const std::size_t total_nodes = indicator.size();
  const auto graph_label_raw = read_int_column(graph_labels_path);
  const std::size_t num_graphs = graph_label_raw.size();

  std::vector<std::size_t> graph_of(total_nodes), local_of(total_nodes);
  std::vector<std::size_t> nodes_per_graph(num_graphs, 0);
  for (std::size_t i = 0; i < total_nodes; ++i) {
    const long long gid = indicator[i];
    if (gid < 1 || static_cast<std::size_t>(gid) > num_graphs)
      throw StructuralError(indicator_path.filename().string() + ":" + std::to_string(i + 1) + ": graph id " +
                            std::to_string(gid) + " outside [1, " + std::to_string(num_graphs) + "]");
    graph_of[i] = static_cast<std::size_t>(gid - 1);
    local_of[i] = nodes_per_graph[graph_of[i]]++;
  }

  // Edges, grouped per graph.
  std::vector<std::vector<std::pair<NodeId, NodeId>>> edges(num_graphs);
  {
    const auto lines = read_lines(edges_path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto toks = tokenize(lines[i]);
      if (toks.size() != 2)
        throw ParseError(edges_path.filename().string() + ":" + std::to_string(i + 1) + ": expected 'u, v'");
      const long long u = parse_int(toks[0], edges_path, i + 1);
      const long long v = parse_int(toks[1], edges_path, i + 1);
      for (long long x : {u, v}) {
        if (x < 1 || static_cast<std::size_t>(x) > total_nodes)
          throw StructuralError(edges_path.filename().string() + ":" + std::to_string(i + 1) + ": node " +
                                std::to_string(x) + " outside [1, " + std::to_string(total_nodes) + "]");
      }
      const auto gu = graph_of[u - 1], gv = graph_of[v - 1];
      if (gu != gv)
        throw StructuralError(edges_path.filename().string() + ":" + std::to_string(i + 1) +
                              ": edge connects nodes of different graphs");
      edges[gu].emplace_back(static_cast<NodeId>(local_of[u - 1]), static_cast<NodeId>(local_of[v - 1]));
    }
  }

  // Node features: one-hot categorical labels followed by raw attributes.
  Index label_width = 0;
  std::vector<Index> node_label_index;
  if (fs::is_regular_file(node_labels_path)) {
    const auto raw = read_int_column(node_labels_path);
    if (raw.size() != total_nodes)
      throw ParseError(node_labels_path.filename().string() + ": expected " + std::to_string(total_nodes) +
                       " lines, found " + std::to_string(raw.size()));
    std::vector<long long> vocab(raw);
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    label_width = static_cast<Index>(vocab.size());
    node_label_index.reserve(total_nodes);
    for (long long x : raw)
      node_label_index.push_back(std::lower_bound(vocab.begin(), vocab.end(), x) - vocab.begin());
  }

  Index attr_width = 0;
  std::vector<double> attrs;
  if (fs::is_regular_file(node_attr_path)) {
    const auto lines = read_lines(node_attr_path);
    if (lines.size() != total_nodes)
      throw ParseError(node_attr_path.filename().string() + ": expected " + std::to_string(total_nodes) +
                       " lines, found " + std::to_string(lines.size()));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto toks = tokenize(lines[i]);
      if (i == 0) attr_width = static_cast<Index>(toks.size());
      if (static_cast<Index>(toks.size()) != attr_width)
        throw ParseError(node_attr_path.filename().string() + ":" + std::to_string(i + 1) +
                         ": inconsistent attribute count");
      for (auto t : toks) attrs.push_back(parse_double(t, node_attr_path, i + 1));
    }
    if (options.normalize_attributes && total_nodes > 0) {
      for (Index c = 0; c < attr_width; ++c) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < total_nodes; ++i) mean += attrs[i * attr_width + c];
        mean /= static_cast<double>(total_nodes);
        for (std::size_t i = 0; i < total_nodes; ++i) {
          const double d = attrs[i * attr_width + c] - mean;
          sq += d * d;
        }
        const double sd = std::sqrt(sq / static_cast<double>(total_nodes));
        for (std::size_t i = 0; i < total_nodes; ++i)
          attrs[i * attr_width + c] = sd > 0.0 ? (attrs[i * attr_width + c] - mean) / sd : 0.0;
      }
    }
  }

  const bool ones_only = label_width == 0 && attr_width == 0;
  const Index feature_dim = ones_only ? 1 : label_width + attr_width;

  // Graph labels remapped by sorted order.
  std::vector<long long> class_vocab(graph_label_raw);
  std::sort(class_vocab.begin(), class_vocab.end());
  class_vocab.erase(std::unique(class_vocab.begin(), class_vocab.end()), class_vocab.end());

  Dataset ds;
  ds.name = name;
  ds.num_classes = static_cast<int>(class_vocab.size());
  ds.feature_dim = feature_dim;
  ds.graphs.resize(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    ds.graphs[g].label = static_cast<int>(
        std::lower_bound(class_vocab.begin(), class_vocab.end(), graph_label_raw[g]) - class_vocab.begin());
    ds.graphs[g].node_features = ones_only ? MatrixD::Ones(static_cast<Index>(nodes_per_graph[g]), 1)
                                           : MatrixD::Zero(static_cast<Index>(nodes_per_graph[g]), feature_dim);
  }
  if (!ones_only) {
    for (std::size_t i = 0; i < total_nodes; ++i) {
      auto row = ds.graphs[graph_of[i]].node_features.row(static_cast<Index>(local_of[i]));
      if (label_width > 0) row(node_label_index[i]) = 1.0;
      for (Index c = 0; c < attr_width; ++c) row(label_width + c) = attrs[i * attr_width + c];
    }
  }

  std::size_t self_loops = 0;
  for (std::size_t g = 0; g < num_graphs; ++g) {
    std::size_t dropped = 0;
    ds.graphs[g].graph = Graph::from_edges(nodes_per_graph[g], edges[g], &dropped);
    self_loops += dropped;
  }
  if (self_loops > 0) warn(name + ": dropped " + std::to_string(self_loops) + " self-loop edge entries");

  ds.meta = options.meta ? *options.meta : known_dataset_meta(name).value_or(DatasetMeta{});
  const auto& meta = ds.meta;
  if (meta.expected_graph_count && *meta.expected_graph_count != num_graphs)
    throw ValidationError(name + ": expected " + std::to_string(*meta.expected_graph_count) + " graphs, parsed " +
                          std::to_string(num_graphs));
  if (meta.expected_class_count && *meta.expected_class_count != ds.num_classes)
    throw ValidationError(name + ": expected " + std::to_string(*meta.expected_class_count) + " classes, parsed " +
                          std::to_string(ds.num_classes));
  if (meta.expected_feature_dim && *meta.expected_feature_dim != feature_dim)
    warn(name + ": reference feature width is " + std::to_string(*meta.expected_feature_dim) + ", parsed " +
         std::to_string(feature_dim));
  return ds;
}

}  // namespace gfnlab

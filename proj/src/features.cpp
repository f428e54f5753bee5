#include "gfnlab/features.hpp"

#include "gfnlab/errors.hpp"
#include "gfnlab/sparse.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gfnlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCacheMagic = "GFNLAB-FEATURES 1";

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string block_prefix(const ColumnBlock& b) {
  switch (b.kind) {
    case BlockKind::Degree: return "deg";
    case BlockKind::Raw: return "x";
    case BlockKind::Propagated: return "a" + std::to_string(b.scale) + "x";
  }
  return "?";
}

json spec_json(const FeatureSpec& s) {
  return {{"use_degree", s.use_degree},
          {"include_raw", s.include_raw},
          {"K", s.K},
          {"epsilon", s.epsilon},
          {"degree_encoding", s.degree_encoding == DegreeEncoding::OneHot ? "one_hot" : "raw"}};
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  return out.empty() ? "dataset" : out;
}

json cache_header(const Dataset& ds, const FeatureSpec& spec, std::size_t degree_cap) {
  json rows = json::array();
  for (const auto& g : ds.graphs) rows.push_back(g.graph.num_nodes());
  const auto schema = feature_schema(spec, ds.feature_dim, degree_cap);
  return {{"dataset", ds.name},
          {"fingerprint", hex64(ds.fingerprint())},
          {"spec", spec_json(spec)},
          {"degree_cap", degree_cap},
          {"width", schema.empty() ? 0 : schema.back().offset + schema.back().width},
          {"rows", rows}};
}

std::optional<std::vector<AugmentedFeatures>> read_cache(const fs::path& path, const json& expected,
                                                         const std::vector<ColumnBlock>& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string magic, header_line;
  if (!std::getline(in, magic) || magic != kCacheMagic || !std::getline(in, header_line)) {
    warn("feature cache " + path.string() + " is corrupt (bad header); recomputing");
    return std::nullopt;
  }
  json header = json::parse(header_line, nullptr, false);
  if (header.is_discarded() || header != expected) {
    warn("feature cache " + path.string() + " does not match the requested features; recomputing");
    return std::nullopt;
  }
  const Index width = header["width"].get<Index>();
  std::vector<AugmentedFeatures> out;
  std::uint64_t checksum = 0xcbf29ce484222325ULL;
  for (const auto& r : header["rows"]) {
    AugmentedFeatures f;
    f.schema = schema;
    f.matrix.resize(r.get<Index>(), width);
    const auto bytes = static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(f.matrix.size()));
    if (!in.read(reinterpret_cast<char*>(f.matrix.data()), bytes)) {
      warn("feature cache " + path.string() + " is truncated; recomputing");
      return std::nullopt;
    }
    checksum = fnv1a(f.matrix.data(), static_cast<std::size_t>(bytes), checksum);
    out.push_back(std::move(f));
  }
  std::uint64_t stored = 0;
  if (!in.read(reinterpret_cast<char*>(&stored), sizeof stored) || stored != checksum) {
    warn("feature cache " + path.string() + " failed its checksum; recomputing");
    return std::nullopt;
  }
  return out;
}

void write_cache(const fs::path& path, const json& header, const std::vector<AugmentedFeatures>& graphs) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      warn("cannot write feature cache " + path.string());
      return;
    }
    out << kCacheMagic << '\n' << header.dump() << '\n';
    std::uint64_t checksum = 0xcbf29ce484222325ULL;
    for (const auto& g : graphs) {
      const auto bytes = sizeof(double) * static_cast<std::size_t>(g.matrix.size());
      out.write(reinterpret_cast<const char*>(g.matrix.data()), static_cast<std::streamsize>(bytes));
      checksum = fnv1a(g.matrix.data(), bytes, checksum);
    }
    out.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
  }
  fs::rename(tmp, path, ec);
  if (ec) warn("cannot move feature cache into place: " + ec.message());
}

}  // namespace

void FeatureSpec::validate() const {
  require(K >= 0, "FeatureSpec: K must be >= 0");
  require(epsilon > 0.0, "FeatureSpec: epsilon must be positive");
  require(use_degree || include_raw || K > 0, "FeatureSpec: at least one feature block must be enabled");
}

std::string FeatureSpec::label() const {
  std::string prop;
  if (K == 1) prop = "A1X";
  else if (K > 1) prop = "A1-" + std::to_string(K) + "X";
  if (use_degree) return prop.empty() ? "d" : "d+" + prop;
  return prop.empty() ? "none" : prop;
}

std::vector<std::string> AugmentedFeatures::column_names() const {
  std::vector<std::string> names;
  for (const auto& b : schema) {
    if (b.kind == BlockKind::Degree && b.width == 1) {
      names.push_back("deg");
      continue;
    }
    for (Index c = 0; c < b.width; ++c) names.push_back(block_prefix(b) + "_" + std::to_string(c));
  }
  return names;
}

const ColumnBlock* AugmentedFeatures::find(BlockKind kind, int scale) const {
  for (const auto& b : schema)
    if (b.kind == kind && b.scale == scale) return &b;
  return nullptr;
}

MatrixD AugmentedFeatures::block(BlockKind kind, int scale) const {
  const ColumnBlock* b = find(kind, scale);
  require(b != nullptr, "AugmentedFeatures: requested block is not in the schema");
  return matrix.middleCols(b->offset, b->width);
}

std::vector<ColumnBlock> feature_schema(const FeatureSpec& spec, Index raw_width, std::size_t degree_cap) {
  spec.validate();
  std::vector<ColumnBlock> schema;
  Index offset = 0;
  auto push = [&](BlockKind kind, int scale, Index width) {
    schema.push_back({kind, scale, offset, width});
    offset += width;
  };
  if (spec.use_degree)
    push(BlockKind::Degree, 0,
         spec.degree_encoding == DegreeEncoding::OneHot ? static_cast<Index>(degree_cap) + 1 : 1);
  if (spec.include_raw) push(BlockKind::Raw, 0, raw_width);
  for (int k = 1; k <= spec.K; ++k) push(BlockKind::Propagated, k, raw_width);
  return schema;
}

AugmentedFeatures augment(const Graph& graph, const MatrixD& X, const FeatureSpec& spec, std::size_t degree_cap) {
  require(static_cast<std::size_t>(X.rows()) == graph.num_nodes(),
          "augment: X has " + std::to_string(X.rows()) + " rows but the graph has " +
              std::to_string(graph.num_nodes()) + " nodes");
  AugmentedFeatures out;
  out.schema = feature_schema(spec, X.cols(), degree_cap);
  const Index width = out.schema.empty() ? 0 : out.schema.back().offset + out.schema.back().width;
  out.matrix.resize(X.rows(), width);

  std::optional<NormalizedAdjacency> adj;
  MatrixD propagated = X;
  for (const auto& b : out.schema) {
    auto dst = out.matrix.middleCols(b.offset, b.width);
    switch (b.kind) {
      case BlockKind::Degree: {
        const auto d = node_degrees(graph);
        if (spec.degree_encoding == DegreeEncoding::OneHot)
          dst = degree_one_hot(d, degree_cap);
        else
          dst = Eigen::Map<const MatrixD>(d.data(), static_cast<Index>(d.size()), 1);
        break;
      }
      case BlockKind::Raw:
        dst = X;
        break;
      case BlockKind::Propagated:
        if (!adj) adj = normalized_adjacency(graph, spec.epsilon);
        propagated = spmm(*adj, propagated);
        dst = propagated;
        break;
    }
  }
  return out;
}

std::size_t dataset_degree_cap(const Dataset& dataset) { return std::max<std::size_t>(1, max_degree(dataset)); }

std::optional<fs::path> cache_dir_from_env() {
  if (const char* env = std::getenv("GFNLAB_CACHE"); env && *env) return fs::path(env);
  return std::nullopt;
}

PrecomputedFeatures precompute_dataset(const Dataset& dataset, const FeatureSpec& spec,
                                       const PrecomputeOptions& options) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  PrecomputedFeatures out;
  out.degree_cap = dataset_degree_cap(dataset);

  json header;
  if (options.cache_dir) {
    header = cache_header(dataset, spec, out.degree_cap);
    const std::string key = hex64(fnv1a(header.dump().data(), header.dump().size()));
    out.cache_file = *options.cache_dir / (sanitize(dataset.name) + "-" + key + ".gfc");
    if (fs::exists(*out.cache_file)) {
      auto cached = read_cache(*out.cache_file, header, feature_schema(spec, dataset.feature_dim, out.degree_cap));
      if (cached) {
        out.graphs = std::move(*cached);
        out.cache_hit = true;
      }
    }
  }
  if (!out.cache_hit) {
    out.graphs.reserve(dataset.size());
    for (const auto& g : dataset.graphs) out.graphs.push_back(augment(g.graph, g.node_features, spec, out.degree_cap));
    if (out.cache_file) write_cache(*out.cache_file, header, out.graphs);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<fs::path> export_features_csv(const PrecomputedFeatures& features, const fs::path& directory,
                                          const std::string& dataset_name, std::uint64_t seed) {
  fs::create_directories(directory);
  std::vector<fs::path> written;
  written.reserve(features.graphs.size());
  char name[32];
  char num[40];
  for (std::size_t i = 0; i < features.graphs.size(); ++i) {
    const auto& f = features.graphs[i];
    std::snprintf(name, sizeof name, "graph_%05zu.csv", i);
    const fs::path path = directory / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + path.string());
    out << "# schema:";
    for (const auto& b : f.schema) {
      out << ' ' << block_prefix(b) << '[' << b.offset << ':' << b.offset + b.width << ']';
    }
    out << " dataset=" << dataset_name << " graph=" << i << " seed=" << seed << '\n';
    const auto cols = f.column_names();
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
    for (Index r = 0; r < f.matrix.rows(); ++r) {
      for (Index c = 0; c < f.matrix.cols(); ++c) {
        std::snprintf(num, sizeof num, "%.17g", f.matrix(r, c));
        out << (c ? "," : "") << num;
      }
      out << '\n';
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace gfnlab

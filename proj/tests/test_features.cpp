#include "doctest.h"
#include "test_support.hpp"

#include "gfnlab/errors.hpp"
#include "gfnlab/features.hpp"
#include "gfnlab/sparse.hpp"
#include "gfnlab/synthetic.hpp"

using namespace gfnlab;
using namespace gfnlab::testing;

namespace {

FeatureSpec spec(bool degree, bool raw, int K) {
  FeatureSpec s;
  s.use_degree = degree;
  s.include_raw = raw;
  s.K = K;
  return s;
}

}  // namespace

TEST_CASE("spmm examples") {
  const auto path = normalized_adjacency(Graph::from_edges(2, EdgeList{{0, 1}}));
  CHECK((spmm(path, MatrixD(MatrixD::Ones(2, 1))).array() - 1.0).abs().maxCoeff() < 1e-15);

  std::mt19937_64 rng(1);
  const auto isolated = normalized_adjacency(Graph::from_edges(5, EdgeList{}));
  const MatrixD x = random_matrix(5, 3, rng);
  CHECK(spmm(isolated, x) == x);

  CHECK_THROWS_AS(spmm(path, MatrixD(MatrixD::Ones(3, 1))), ContractViolation);
}

TEST_CASE("property: spmm matches the dense product") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const Graph g = random_graph(1, 12, rng);
    const auto adj = normalized_adjacency(g);
    const MatrixD x = random_matrix(static_cast<Index>(g.num_nodes()), 1 + static_cast<Index>(rng() % 4), rng);
    const MatrixD expect = dense_normalized_adjacency(g) * x;
    CHECK((spmm(adj, x) - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("augment examples") {
  std::mt19937_64 rng(3);
  const Graph g = random_graph(3, 8, rng);
  const MatrixD x = random_matrix(static_cast<Index>(g.num_nodes()), 2, rng);
  CHECK(augment(g, x, spec(false, true, 0), 1).matrix == x);

  const Graph path = Graph::from_edges(2, EdgeList{{0, 1}});
  const MatrixD px = (MatrixD(2, 1) << 1, 0).finished();
  const auto f = augment(path, px, spec(false, true, 2), 1);
  const MatrixD expect = (MatrixD(2, 3) << 1, .5, .5, 0, .5, .5).finished();
  CHECK((f.matrix - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(f.column_names() == std::vector<std::string>{"x_0", "a1x_0", "a2x_0"});

  CHECK_THROWS_AS(augment(path, px, spec(false, false, 0), 1), ContractViolation);
  CHECK_THROWS_AS(augment(path, MatrixD::Ones(3, 1), spec(false, true, 1), 1), ContractViolation);
}

TEST_CASE("augment: schema order, widths and column names") {
  const Graph g = Graph::from_edges(3, EdgeList{{0, 1}, {0, 2}});
  const auto f = augment(g, MatrixD::Ones(3, 2), spec(true, true, 3), 4);
  REQUIRE(f.schema.size() == 5);
  CHECK(f.schema[0].kind == BlockKind::Degree);
  CHECK(f.schema[0].width == 5);
  CHECK(f.schema[1].kind == BlockKind::Raw);
  for (int k = 1; k <= 3; ++k) {
    CHECK(f.schema[1 + k].kind == BlockKind::Propagated);
    CHECK(f.schema[1 + k].scale == k);
  }
  Index total = 0;
  for (const auto& b : f.schema) {
    CHECK(b.offset == total);
    total += b.width;
  }
  CHECK(f.width() == total);
  CHECK(f.width() == 5 + 2 * 4);
  const auto names = f.column_names();
  CHECK(names.front() == "deg_0");
  CHECK(names[5] == "x_0");
  CHECK(names.back() == "a3x_1");
  // Hub has degree 2, leaves degree 1.
  CHECK(f.block(BlockKind::Degree).row(0) == (MatrixD(1, 5) << 0, 0, 1, 0, 0).finished());
  CHECK(f.block(BlockKind::Degree).row(1) == (MatrixD(1, 5) << 0, 1, 0, 0, 0).finished());

  FeatureSpec raw = spec(true, true, 0);
  raw.degree_encoding = DegreeEncoding::Raw;
  const auto r = augment(g, MatrixD::Ones(3, 1), raw, 4);
  CHECK(r.column_names() == std::vector<std::string>{"deg", "x_0"});
  CHECK(r.matrix.col(0) == (MatrixD(3, 1) << 2, 1, 1).finished());
}

TEST_CASE("property: propagated block k equals k dense products") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const Graph g = random_graph(1, 10, rng);
    const MatrixD x = random_matrix(static_cast<Index>(g.num_nodes()), 2, rng);
    const auto f = augment(g, x, spec(false, false, 3), 1);
    const MatrixD a = dense_normalized_adjacency(g);
    MatrixD y = x;
    for (int k = 1; k <= 3; ++k) {
      y = a * y;
      CHECK((f.block(BlockKind::Propagated, k) - y).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("property: augmentation is permutation equivariant") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const Graph g = random_graph(1, 10, rng);
    const MatrixD x = random_matrix(static_cast<Index>(g.num_nodes()), 3, rng);
    const auto perm = random_permutation(g.num_nodes(), rng);
    const auto f = augment(g, x, spec(true, true, 3), 9);
    const auto fp = augment(g.permuted(perm), permute_rows(x, perm), spec(true, true, 3), 9);
    CHECK(fp.schema == f.schema);
    CHECK((fp.matrix - permute_rows(f.matrix, perm)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("property: raw and propagated blocks are linear in X") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    const Graph g = random_graph(1, 10, rng);
    const auto n = static_cast<Index>(g.num_nodes());
    const MatrixD x1 = random_matrix(n, 2, rng), x2 = random_matrix(n, 2, rng);
    const double a = random_matrix(1, 1, rng)(0, 0), b = random_matrix(1, 1, rng)(0, 0);
    const auto s = spec(false, true, 3);
    const MatrixD lhs = augment(g, a * x1 + b * x2, s, 1).matrix;
    const MatrixD rhs = a * augment(g, x1, s, 1).matrix + b * augment(g, x2, s, 1).matrix;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("property: scale nesting across K") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const Graph g = random_graph(1, 10, rng);
    const MatrixD x = random_matrix(static_cast<Index>(g.num_nodes()), 2, rng);
    const auto full = augment(g, x, spec(true, true, 3), 9);
    for (int k = 1; k <= 3; ++k) {
      const auto partial = augment(g, x, spec(true, true, k), 9);
      CHECK(partial.block(BlockKind::Propagated, k) == full.block(BlockKind::Propagated, k));
    }
  }
}

TEST_CASE("precompute_dataset: widths, determinism and cache") {
  const Dataset ds = generate_synthetic_dataset(30, 1);
  const auto k0 = precompute_dataset(ds, spec(true, true, 0));
  const auto k3 = precompute_dataset(ds, spec(true, true, 3));
  CHECK(k3.width() - k0.width() == 3 * ds.feature_dim);
  CHECK(k3.degree_cap == dataset_degree_cap(ds));
  for (const auto& f : k3.graphs) CHECK(f.width() == k3.width());

  TempDir dir("cache");
  PrecomputeOptions opts;
  opts.cache_dir = dir.path;
  const auto first = precompute_dataset(ds, spec(true, true, 3), opts);
  CHECK_FALSE(first.cache_hit);
  REQUIRE(first.cache_file.has_value());
  CHECK(std::filesystem::exists(*first.cache_file));
  const auto second = precompute_dataset(ds, spec(true, true, 3), opts);
  CHECK(second.cache_hit);
  REQUIRE(second.graphs.size() == first.graphs.size());
  for (std::size_t i = 0; i < first.graphs.size(); ++i) {
    CHECK(second.graphs[i].matrix == first.graphs[i].matrix);
    CHECK(second.graphs[i].matrix == k3.graphs[i].matrix);
    CHECK(second.graphs[i].schema == first.graphs[i].schema);
  }

  // A different spec uses a different file.
  const auto other = precompute_dataset(ds, spec(true, true, 2), opts);
  CHECK_FALSE(other.cache_hit);
  CHECK(*other.cache_file != *first.cache_file);

  // A corrupted file is recomputed and rewritten.
  set_warnings_enabled(false);
  std::string bytes = read_file(*first.cache_file);
  bytes[bytes.size() - 3] ^= 0x5a;
  write_file(*first.cache_file, bytes);
  const auto recovered = precompute_dataset(ds, spec(true, true, 3), opts);
  CHECK_FALSE(recovered.cache_hit);
  CHECK(recovered.graphs[5].matrix == k3.graphs[5].matrix);
  CHECK(precompute_dataset(ds, spec(true, true, 3), opts).cache_hit);
  write_file(*first.cache_file, "garbage");
  CHECK_FALSE(precompute_dataset(ds, spec(true, true, 3), opts).cache_hit);
  set_warnings_enabled(true);
}

TEST_CASE("precompute_dataset: star hub one-hot differs from leaves") {
  const Dataset ds = generate_synthetic_dataset(10, 2);
  const auto pre = precompute_dataset(ds, spec(true, true, 0));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.graphs[i].label != 1) continue;
    const MatrixD deg = pre.graphs[i].block(BlockKind::Degree);
    for (Index r = 1; r < deg.rows(); ++r) CHECK(deg.row(r) != deg.row(0));
  }
}

TEST_CASE("export_features_csv: schema line, header and byte-identical re-export") {
  const Dataset ds = generate_synthetic_dataset(6, 3);
  const auto pre = precompute_dataset(ds, spec(true, true, 1));
  TempDir dir("export");
  const auto files = export_features_csv(pre, dir / "a", ds.name, 42);
  CHECK(files.size() == 6);
  CHECK(files.front().filename() == "graph_00000.csv");
  const std::string text = read_file(files.front());
  CHECK(text.rfind("# schema: deg[0:", 0) == 0);
  CHECK(text.find("seed=42") != std::string::npos);
  CHECK(text.find("\ndeg_0,") != std::string::npos);
  const auto again = export_features_csv(pre, dir / "b", ds.name, 42);
  for (std::size_t i = 0; i < files.size(); ++i) CHECK(read_file(files[i]) == read_file(again[i]));

  // K = 0 without degree exports the raw features exactly.
  const auto raw = precompute_dataset(ds, spec(false, true, 0));
  const auto raw_files = export_features_csv(raw, dir / "raw", ds.name, 0);
  const std::string body = read_file(raw_files[0]);
  const auto header_end = body.find('\n', body.find('\n') + 1);
  std::string rows = body.substr(header_end + 1);
  std::string expected;
  for (std::size_t r = 0; r < ds.graphs[0].graph.num_nodes(); ++r) expected += "1\n";
  CHECK(rows == expected);
}

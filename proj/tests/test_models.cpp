#include "doctest.h"
#include "test_support.hpp"

#include "gfnlab/errors.hpp"
#include "gfnlab/features.hpp"
#include "gfnlab/models.hpp"

using namespace gfnlab;
using namespace gfnlab::testing;

namespace {

ModelConfig config(ModelKind kind, int hidden = 8, int classes = 3) {
  ModelConfig c = ModelConfig::defaults(kind, classes);
  c.hidden_dim = hidden;
  return c;
}

/// Runs a few train-mode forwards so the batch-norm running statistics are
/// no longer at their initial values.
template <typename T>
void warm_batch_norm(BasicModel<T>& model, const BatchedGraphs<T>& batch) {
  for (int i = 0; i < 3; ++i) model.forward(batch, Mode::Train);
}

}  // namespace

TEST_CASE("parse_model_kind") {
  CHECK(parse_model_kind("gfn-light") == ModelKind::GFNLight);
  CHECK(to_string(ModelKind::GLN) == "gln");
  CHECK_THROWS_AS(parse_model_kind("gin"), ContractViolation);
}

TEST_CASE("parameter counts") {
  const Index F = 19;
  const long h = 128, c = 2;
  const long gcn = (F * h + h + 2 * h) + 3 * (h * h + h + 2 * h) + (h * h + h) + (h * c + c);
  CHECK(parameter_count(ModelConfig::defaults(ModelKind::GCN, 2), F) == static_cast<std::size_t>(gcn));
  CHECK(parameter_count(ModelConfig::defaults(ModelKind::GFN, 2), F) == static_cast<std::size_t>(gcn));
  CHECK(parameter_count(ModelConfig::defaults(ModelKind::GLN, 2), F) == static_cast<std::size_t>(F * c + c));
  const long light = (F * h + h + 2 * h) + (h * h + h) + (h * c + c);
  CHECK(parameter_count(ModelConfig::defaults(ModelKind::GFNLight, 2), F) == static_cast<std::size_t>(light));
  CHECK_THROWS_AS(parameter_count(ModelConfig::defaults(ModelKind::GFN, 2), 0), ContractViolation);
}

TEST_CASE("gcn_layer examples") {
  const auto path = normalized_adjacency(Graph::from_edges(2, EdgeList{{0, 1}}));
  const MatrixD h = (MatrixD(2, 1) << 1, 0).finished();
  const MatrixD out = gcn_layer(path, h, MatrixD(MatrixD::Ones(1, 1)), MatrixD(MatrixD::Zero(1, 1)));
  CHECK((out - MatrixD::Constant(2, 1, 0.5)).cwiseAbs().maxCoeff() < 1e-15);

  std::mt19937_64 rng(1);
  const auto isolated = normalized_adjacency(Graph::from_edges(4, EdgeList{}));
  const MatrixD x = random_matrix(4, 3, rng), w = random_matrix(3, 2, rng), b = random_matrix(1, 2, rng);
  CHECK(gcn_layer(isolated, x, w, b) == affine(x, w, b));
  CHECK_THROWS_AS(gcn_layer(path, x, w, b), ContractViolation);
}

TEST_CASE("collapse_linear_gcn examples") {
  std::mt19937_64 rng(2);
  const Graph g = random_graph(2, 6, rng);
  const auto adj = normalized_adjacency(g);
  const MatrixD x = random_matrix(static_cast<Index>(g.num_nodes()), 3, rng);
  const std::vector<MatrixD> one{random_matrix(3, 2, rng)};
  CHECK(collapse_linear_gcn<double>(one, adj, x) == spmm(adj, x) * one[0]);

  const std::vector<MatrixD> ident{MatrixD::Identity(3, 3), MatrixD::Identity(3, 3), MatrixD::Identity(3, 3)};
  FeatureSpec only3;
  only3.use_degree = false;
  only3.include_raw = false;
  const auto f = augment(g, x, only3, 1);
  CHECK((collapse_linear_gcn<double>(ident, adj, x) - f.block(BlockKind::Propagated, 3)).cwiseAbs().maxCoeff() <
        1e-14);

  const std::vector<MatrixD> bad{MatrixD::Ones(3, 2), MatrixD::Ones(3, 2)};
  CHECK_THROWS_AS(collapse_linear_gcn<double>(bad, adj, x), ContractViolation);
}

TEST_CASE("property: linear collapse at 64-bit and 32-bit") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) CHECK(collapse_discrepancy(rng, 1 + t % 4) <= 1e-10);

  for (int t = 0; t < 50; ++t) {
    const Graph g = random_graph(1, 6, rng);
    const auto adj = normalized_adjacency(g);
    const Tensor x = random_matrix(static_cast<Index>(g.num_nodes()), 3, rng).cast<float>();
    const std::vector<Tensor> w{random_matrix(3, 3, rng).cast<float>(), random_matrix(3, 2, rng).cast<float>()};
    Tensor h = x;
    for (const auto& wi : w) h = gcn_layer(adj, h, wi, Tensor(Tensor::Zero(1, wi.cols())));
    CHECK((collapse_linear_gcn<float>(w, adj, x) - h).cwiseAbs().maxCoeff() <= 1e-5f);
  }
}

TEST_CASE("property: a linearized GCN model equals its collapsed linear map") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    const Graph g = random_graph(1, 8, rng);
    const auto n = static_cast<Index>(g.num_nodes());
    ModelConfig c = config(ModelKind::GCN, 5, 2);
    c.linear_filter = true;
    c.num_conv_layers = 1 + t % 3;
    const MatrixD x = random_matrix(n, 4, rng);
    BasicModel<double> model(c, 4, rng());
    const auto batch = make_batch<double>({x}, {normalized_adjacency(g)}, {0});
    const MatrixD nodes = model.filter(batch, Mode::Eval);

    // The dense input layer feeds L propagating layers; all biases start at zero.
    const auto& params = model.parameters();
    std::vector<MatrixD> conv;
    for (int l = 1; l <= c.num_conv_layers; ++l)
      conv.push_back(params.find("layer" + std::to_string(l) + ".weight")->value);
    const MatrixD input = x * params.find("layer0.weight")->value;
    const MatrixD collapsed = collapse_linear_gcn<double>(conv, *batch.adjacency, input);
    CHECK((nodes - collapsed).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((model.forward(batch, Mode::Eval) - model.set_function(collapsed, batch.segments)).cwiseAbs().maxCoeff() <=
          1e-10);
  }
}

TEST_CASE("property: all model kinds are permutation invariant in eval mode") {
  std::mt19937_64 rng(5);
  for (ModelKind kind : {ModelKind::GCN, ModelKind::GFN, ModelKind::GFNLight, ModelKind::GLN}) {
    for (int t = 0; t < 25; ++t) CHECK(permutation_gap(config(kind), rng) <= 1e-5f);
  }
}

TEST_CASE("batched forward equals single-graph forwards in eval mode") {
  std::mt19937_64 rng(6);
  for (ModelKind kind : {ModelKind::GCN, ModelKind::GFN, ModelKind::GFNLight, ModelKind::GLN}) {
    const Graph g1 = random_graph(2, 8, rng), g2 = random_graph(2, 8, rng);
    const Tensor x1 = random_matrix(static_cast<Index>(g1.num_nodes()), 2, rng).cast<float>();
    const Tensor x2 = random_matrix(static_cast<Index>(g2.num_nodes()), 2, rng).cast<float>();
    const auto a1 = normalized_adjacency(g1), a2 = normalized_adjacency(g2);
    Model model(config(kind), 2, 11);
    const auto both = make_batch<float>({x1, x2}, {a1, a2}, {0, 1});
    warm_batch_norm(model, both);
    const Tensor joint = model.forward(both, Mode::Eval);
    const Tensor s1 = model.forward(make_batch<float>({x1}, {a1}, {0}), Mode::Eval);
    const Tensor s2 = model.forward(make_batch<float>({x2}, {a2}, {1}), Mode::Eval);
    CHECK((joint.row(0) - s1.row(0)).cwiseAbs().maxCoeff() <= 1e-5f);
    CHECK((joint.row(1) - s2.row(0)).cwiseAbs().maxCoeff() <= 1e-5f);
  }
}

TEST_CASE("eval-mode forward does not change batch-norm statistics") {
  std::mt19937_64 rng(7);
  const Tensor x = random_matrix(6, 2, rng).cast<float>();
  Model model(config(ModelKind::GFN), 2, 1);
  const auto batch = make_batch<float>({x}, {}, {0});
  warm_batch_norm(model, batch);
  const Tensor mean = model.batch_norm_states().front().state->running_mean;
  model.forward(batch, Mode::Eval);
  model.filter(batch, Mode::Train);
  CHECK(model.batch_norm_states().front().state->running_mean == mean);
}

TEST_CASE("GLN with zero weights gives uniform probabilities") {
  Model model(config(ModelKind::GLN), 4, 0);
  for (auto& p : model.parameters()) p.value.setZero();
  std::mt19937_64 rng(8);
  const Tensor x = random_matrix(5, 4, rng).cast<float>();
  const Tensor logits = model.forward(make_batch<float>({x}, {}, {0}), Mode::Eval);
  CHECK(logits == Tensor::Zero(1, 3));
  CHECK((softmax(logits).array() - 1.0f / 3.0f).abs().maxCoeff() < 1e-7f);
}

TEST_CASE("property: GLN is affine in the pooled features") {
  std::mt19937_64 rng(9);
  BasicModel<double> model(config(ModelKind::GLN), 4, 3);
  auto& bias = model.parameters()[model.parameters().size() - 1];
  REQUIRE(bias.name == "head.out.bias");
  bias.value = random_matrix(1, 3, rng);
  const Index ones[] = {1};
  const auto seg = SegmentIndex::from_sizes(ones);
  for (int t = 0; t < 50; ++t) {
    const MatrixD s1 = random_matrix(1, 4, rng), s2 = random_matrix(1, 4, rng);
    const double a = random_matrix(1, 1, rng)(0, 0), b = random_matrix(1, 1, rng)(0, 0);
    const MatrixD lhs = model.set_function(a * s1 + b * s2, seg);
    const MatrixD rhs =
        a * model.set_function(s1, seg) + b * model.set_function(s2, seg) - (a + b - 1.0) * bias.value;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("GFN and GCN are bit-identical when the adjacency is the identity") {
  std::mt19937_64 rng(10);
  const Graph isolated = Graph::from_edges(7, EdgeList{});
  const Tensor x = random_matrix(7, 3, rng).cast<float>();
  Model gcn(config(ModelKind::GCN), 3, 42);
  Model gfn(config(ModelKind::GFN), 3, 42);
  const auto with_adj = make_batch<float>({x}, {normalized_adjacency(isolated)}, {1});
  const auto without = make_batch<float>({x}, {}, {1});
  CHECK(gcn.forward(with_adj, Mode::Train) == gfn.forward(without, Mode::Train));
  CHECK(gcn.forward(with_adj, Mode::Eval) == gfn.forward(without, Mode::Eval));
}

TEST_CASE("model backward matches finite differences") {
  std::mt19937_64 rng(11);
  for (ModelKind kind : {ModelKind::GCN, ModelKind::GFN, ModelKind::GFNLight, ModelKind::GLN}) {
    const Graph g1 = random_graph(3, 6, rng), g2 = random_graph(3, 6, rng);
    const MatrixD x1 = random_matrix(static_cast<Index>(g1.num_nodes()), 2, rng);
    const MatrixD x2 = random_matrix(static_cast<Index>(g2.num_nodes()), 2, rng);
    ModelConfig c = config(kind, 4, 3);
    c.num_conv_layers = 2;
    BasicModel<double> model(c, 2, 5);
    for (auto& p : model.parameters()) p.value += 0.1 * random_matrix(p.value.rows(), p.value.cols(), rng);
    const auto batch = make_batch<double>({x1, x2}, {normalized_adjacency(g1), normalized_adjacency(g2)}, {0, 2});

    auto loss_of = [&]() { return softmax_cross_entropy(model.forward(batch, Mode::Train), batch.labels).loss; };
    model.parameters().zero_grad();
    const auto ce = softmax_cross_entropy(model.forward(batch, Mode::Train), batch.labels);
    model.backward(ce.grad);
    for (auto& p : model.parameters()) {
      const MatrixD analytic = p.grad;
      const MatrixD saved = p.value;
      const auto loss_at = [&](const MatrixD& v) {
        p.value = v;
        const double l = loss_of();
        p.value = saved;
        return l;
      };
      INFO(to_string(kind), " ", p.name);
      // Batch norm cancels the bias of the layer it follows, so both gradients
      // vanish there and a relative error is meaningless.
      if (p.name.rfind("layer", 0) == 0 && p.name.ends_with(".bias")) {
        CHECK(analytic.cwiseAbs().maxCoeff() <= 1e-12);
        const auto fd = finite_difference_grad(
            [&](std::span<const double> v) { return loss_at(unflatten(v, saved.rows(), saved.cols())); },
            flatten(saved));
        for (double d : fd) CHECK(std::abs(d) <= 1e-7);
        continue;
      }
      CHECK(grad_error(loss_at, saved, analytic) <= 1e-3);
    }
  }
}

TEST_CASE("checkpoint round trip") {
  std::mt19937_64 rng(12);
  TempDir dir("ckpt");
  for (ModelKind kind : {ModelKind::GCN, ModelKind::GFN, ModelKind::GFNLight, ModelKind::GLN}) {
    const Graph g = random_graph(3, 8, rng);
    const Tensor x = random_matrix(static_cast<Index>(g.num_nodes()), 3, rng).cast<float>();
    Model model(config(kind), 3, 77);
    const auto batch = make_batch<float>({x}, {normalized_adjacency(g)}, {0});
    warm_batch_norm(model, make_batch<float>({x, x}, {normalized_adjacency(g), normalized_adjacency(g)}, {0, 1}));
    const auto path = dir / (to_string(kind) + ".ckpt");
    save_checkpoint(model, path);
    Model loaded = load_checkpoint(path);
    CHECK(loaded.config().kind == kind);
    CHECK(loaded.input_dim() == 3);
    CHECK(loaded.forward(batch, Mode::Eval) == model.forward(batch, Mode::Eval));
  }
  write_file(dir / "bad.ckpt", "not a checkpoint\n");
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), ParseError);
}

#include "doctest.h"
#include "test_support.hpp"

#include "gfnlab/errors.hpp"
#include "gfnlab/harness.hpp"
#include "gfnlab/reports.hpp"
#include "gfnlab/synthetic.hpp"

#include <sstream>

using namespace gfnlab;
using namespace gfnlab::testing;

namespace {

TrainConfig quick(int epochs, std::uint64_t seed = 1) {
  TrainConfig t;
  t.epochs = epochs;
  t.seed = seed;
  return t;
}

ModelConfig small(ModelKind kind, int classes = 2) {
  ModelConfig c = ModelConfig::defaults(kind, classes);
  c.hidden_dim = 16;
  return c;
}

bool same_trace(const FoldResult& a, const FoldResult& b) {
  if (a.epochs.size() != b.epochs.size()) return false;
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    const auto &x = a.epochs[e], &y = b.epochs[e];
    if (x.train_loss != y.train_loss || x.train_acc != y.train_acc || x.test_loss != y.test_loss ||
        x.test_acc != y.test_acc)
      return false;
  }
  return true;
}

std::vector<std::string> csv_lines(const std::filesystem::path& p) {
  std::stringstream ss(read_file(p));
  std::vector<std::string> lines;
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("TrainConfig validation") {
  CHECK_NOTHROW(TrainConfig{}.validate());
  TrainConfig t;
  t.batch_size = 1;
  CHECK_THROWS_AS(t.validate(), ContractViolation);
  t = {};
  t.epochs = 0;
  CHECK_THROWS_AS(t.validate(), ContractViolation);
}

TEST_CASE("train_fold separates cycles from stars like the degree-histogram oracle") {
  const Dataset ds = generate_synthetic_dataset(200, 3);
  std::size_t oracle_correct = 0;
  for (const auto& g : ds.graphs) oracle_correct += degree_histogram_class(g.graph) == g.label;
  REQUIRE(oracle_correct == ds.size());

  const ModelConfig cfg = ModelConfig::defaults(ModelKind::GFN, 2);
  const auto data = prepare_dataset(ds, cfg);
  const FoldPlan plan = stratified_kfold(ds, 10, 3);
  const auto result = train_fold(data, plan, 0, cfg, quick(20));
  CHECK(result.epochs.size() == 20);
  CHECK(result.test_size + result.train_size == ds.size());
  CHECK(result.epochs.back().test_acc >= 0.95);
}

TEST_CASE("train_fold with lr = 0 leaves parameters and accuracy unchanged") {
  const Dataset ds = generate_synthetic_dataset(40, 4);
  const FoldPlan plan = stratified_kfold(ds, 5, 4);
  TrainConfig t = quick(5);
  t.lr = 0.0;
  {
    const ModelConfig cfg = small(ModelKind::GLN);
    const auto data = prepare_dataset(ds, cfg);
    const Model fresh(cfg, data.input_dim, derive_seed(t.seed, 0, 0xA11CE));
    Model trained(cfg, data.input_dim, 0);
    const auto r = train_fold(data, plan, 0, cfg, t, &trained);
    for (std::size_t i = 0; i < trained.parameters().size(); ++i)
      CHECK(trained.parameters()[i].value == fresh.parameters()[i].value);
    for (const auto& e : r.epochs) {
      CHECK(e.test_acc == r.epochs.front().test_acc);
      CHECK(e.train_acc == r.epochs.front().train_acc);
    }
  }
  {
    const ModelConfig cfg = small(ModelKind::GFN);
    const auto data = prepare_dataset(ds, cfg);
    const Model fresh(cfg, data.input_dim, derive_seed(t.seed, 0, 0xA11CE));
    Model trained(cfg, data.input_dim, 0);
    train_fold(data, plan, 0, cfg, t, &trained);
    for (std::size_t i = 0; i < trained.parameters().size(); ++i)
      CHECK(trained.parameters()[i].value == fresh.parameters()[i].value);
  }
}

TEST_CASE("train_fold is deterministic and rejects empty splits") {
  const Dataset ds = generate_synthetic_dataset(40, 5);
  const ModelConfig cfg = small(ModelKind::GCN);
  const auto data = prepare_dataset(ds, cfg);
  const FoldPlan plan = stratified_kfold(ds, 4, 5);
  CHECK(same_trace(train_fold(data, plan, 1, cfg, quick(4)), train_fold(data, plan, 1, cfg, quick(4))));
  const std::vector<std::size_t> some{0, 1, 2};
  CHECK_THROWS_AS(train_fold(data, {}, some, 0, cfg, quick(1)), ContractViolation);
  CHECK_THROWS_AS(train_fold(data, some, {}, 0, cfg, quick(1)), ContractViolation);
}

TEST_CASE("evaluate: accuracy is correct / size") {
  const Dataset ds = generate_synthetic_dataset(10, 6);
  const ModelConfig cfg = small(ModelKind::GLN);
  const auto data = prepare_dataset(ds, cfg);
  Model model(cfg, data.input_dim, 0);
  for (auto& p : model.parameters()) p.value.setZero();
  // Zero logits tie everywhere, so every prediction is class 0.
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  const auto ev = evaluate(model, data, all, 3);
  const auto labels = ds.labels();
  CHECK(ev.accuracy == static_cast<double>(std::count(labels.begin(), labels.end(), 0)) / 10.0);
  CHECK(ev.loss == doctest::Approx(std::log(2.0)));
}

TEST_CASE("run_cv: report shape, selection and thread-count independence") {
  const Dataset four = generate_synthetic_dataset(4, 7);
  const CVReport tiny = run_cv(four, small(ModelKind::GFN), quick(3), 2, 7);
  CHECK(tiny.folds.size() == 2);
  for (const auto& f : tiny.folds) CHECK(f.epochs.size() == 3);
  CHECK(tiny.mean_test_acc_per_epoch.size() == 3);

  const Dataset ds = generate_synthetic_dataset(60, 8);
  CvOptions serial, parallel;
  parallel.jobs = 3;
  const CVReport a = run_cv(ds, small(ModelKind::GFN), quick(4), 5, 8, serial);
  const CVReport b = run_cv(ds, small(ModelKind::GFN), quick(4), 5, 8, parallel);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(to_json(a).dump() == to_json(run_cv(ds, small(ModelKind::GFN), quick(4), 5, 8, serial)).dump());
}

TEST_CASE("run_cv writes fold checkpoints") {
  const Dataset ds = generate_synthetic_dataset(20, 9);
  TempDir dir("cv-ckpt");
  CvOptions opts;
  opts.checkpoint_dir = dir.path;
  run_cv(ds, small(ModelKind::GFNLight), quick(2), 2, 9, opts);
  CHECK(std::filesystem::exists(dir / "fold_0.ckpt"));
  CHECK(load_checkpoint(dir / "fold_1.ckpt").config().kind == ModelKind::GFNLight);
}

TEST_CASE("property: epoch selection maximizes the fold mean and breaks ties early") {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> acc(0, 4);
  for (int t = 0; t < 200; ++t) {
    const int folds = 1 + static_cast<int>(rng() % 5), epochs = 1 + static_cast<int>(rng() % 8);
    std::vector<FoldResult> results(static_cast<std::size_t>(folds));
    for (auto& f : results) {
      f.epochs.resize(static_cast<std::size_t>(epochs));
      // Coarse values so ties are common.
      for (auto& e : f.epochs) e.test_acc = acc(rng) / 4.0;
    }
    const auto sel = select_epoch(results);
    std::vector<double> mean(static_cast<std::size_t>(epochs), 0.0);
    for (int e = 0; e < epochs; ++e) {
      for (const auto& f : results) mean[e] += f.epochs[e].test_acc;
      mean[e] /= folds;
    }
    const double best = *std::max_element(mean.begin(), mean.end());
    const int first = static_cast<int>(std::find(mean.begin(), mean.end(), best) - mean.begin());
    CHECK(sel.epoch == first + 1);
    CHECK(sel.mean == doctest::Approx(best));
    double var = 0.0;
    for (const auto& f : results) var += std::pow(f.epochs[first].test_acc - best, 2);
    CHECK(sel.std == doctest::Approx(std::sqrt(var / folds)));
  }
}

TEST_CASE("subsample_dataset") {
  const Dataset ds = generate_synthetic_dataset(188, 11);
  CHECK(subsample_dataset(ds, 1.0, 1).fingerprint() == ds.fingerprint());
  const Dataset half = subsample_dataset(ds, 0.5, 1);
  CHECK(half.size() == 94);
  CHECK(subsample_dataset(ds, 0.5, 1).fingerprint() == half.fingerprint());
  CHECK_THROWS_AS(subsample_dataset(ds, 0.0, 1), ContractViolation);

  // Class proportions within one graph per class, on an unbalanced label set.
  Dataset skewed = ds;
  for (std::size_t i = 0; i < skewed.size(); ++i) skewed.graphs[i].label = i % 3 == 0 ? 1 : 0;
  for (double ratio : {0.1, 0.25, 0.33, 0.5, 0.77, 0.9}) {
    const Dataset sub = subsample_dataset(skewed, ratio, 2);
    CHECK(sub.size() == static_cast<std::size_t>(std::ceil(ratio * 188 - 1e-9)));
    for (int c = 0; c < 2; ++c) {
      const auto all = skewed.labels(), kept = sub.labels();
      const double expected = ratio * static_cast<double>(std::count(all.begin(), all.end(), c));
      CHECK(std::abs(static_cast<double>(std::count(kept.begin(), kept.end(), c)) - expected) <= 1.0);
    }
  }
}

TEST_CASE("ablation_sweep: grid shapes") {
  const Dataset ds = generate_synthetic_dataset(20, 12);
  AblationRequest req;
  req.axis = AblationAxis::Depth;
  req.depths = {1, 2, 3};
  req.k = 2;
  req.models = {ModelKind::GCN, ModelKind::GFN};
  const auto table = ablation_sweep(ds, req, quick(1));
  CHECK(table.rows.size() == 6);
  CHECK(table.rows[2].report.model.num_conv_layers == 3);

  req.depths.clear();
  CHECK_THROWS_AS(ablation_sweep(ds, req, quick(1)), ContractViolation);

  std::vector<std::string> labels;
  for (const auto& s : default_feature_cells()) labels.push_back(s.label());
  CHECK(labels == std::vector<std::string>{"none", "d", "A1X", "A1-2X", "A1-3X", "d+A1X", "d+A1-2X", "d+A1-3X"});

  TempDir dir("ablate");
  write_ablation_csv(dir / "t.csv", table);
  const auto lines = csv_lines(dir / "t.csv");
  CHECK(lines.front() == "model,cell,mean,std,selected_epoch,seed");
  CHECK(lines.size() == 7);
}

TEST_CASE("ablation_sweep: degree-on cells beat degree-off cells on cycles vs stars") {
  const Dataset ds = generate_synthetic_dataset(100, 13);
  AblationRequest req;
  req.feature_cells = default_feature_cells();
  req.models = {ModelKind::GFN};
  req.k = 5;
  req.seed = 13;
  const auto table = ablation_sweep(ds, req, quick(15));
  REQUIRE(table.rows.size() == 8);
  double worst_on = 1.0, best_off = 0.0;
  for (const auto& r : table.rows) {
    if (r.cell.front() == 'd')
      worst_on = std::min(worst_on, r.report.mean_test_acc);
    else
      best_off = std::max(best_off, r.report.mean_test_acc);
  }
  CHECK(worst_on >= best_off);
}

TEST_CASE("benchmark_timing") {
  CHECK(median_after(std::vector<double>{9, 1, 3, 2}, 1) == 2.0);
  CHECK(median_after(std::vector<double>{9, 1, 3, 2, 4}, 1) == 2.5);

  const Dataset ds = generate_dense_dataset(60, 14);
  TrainConfig t = quick(6);
  ModelConfig one = small(ModelKind::GCN), three = small(ModelKind::GCN);
  one.hidden_dim = three.hidden_dim = 64;
  one.num_conv_layers = 1;
  three.num_conv_layers = 3;
  const std::vector<ModelConfig> depth{one, three};
  const auto report = benchmark_timing(ds, depth, t);
  REQUIRE(report.entries.size() == 2);
  CHECK(report.entries[0].speedup == 1.0);
  CHECK(report.entries[0].model == "gcn-L1");
  CHECK(report.entries[1].median_epoch_seconds > report.entries[0].median_epoch_seconds);
  CHECK(report.entries[0].epoch_seconds.size() == 6);

  const std::vector<ModelConfig> twice{three, three};
  const auto same = benchmark_timing(ds, twice, t);
  CHECK(same.entries[1].speedup == doctest::Approx(1.0).epsilon(0.5));

  const std::vector<ModelConfig> no_gcn{small(ModelKind::GFN), small(ModelKind::GLN)};
  CHECK_THROWS_AS(benchmark_timing(ds, no_gcn, t), ContractViolation);

  const auto back = timing_report_from_json(to_json(report));
  CHECK(to_json(back).dump() == to_json(report).dump());
}

TEST_CASE("reports: JSON round trip, summary line and epoch CSV") {
  const Dataset ds = generate_synthetic_dataset(12, 15);
  const CVReport r = run_cv(ds, small(ModelKind::GFN), quick(3, 99), 3, 15);
  const auto j = to_json(r);
  CHECK(to_json(cv_report_from_json(j)).dump() == j.dump());
  CHECK(j.dump().find("time") == std::string::npos);

  CVReport fixed;
  fixed.mean_test_acc = 0.9084;
  fixed.std_test_acc = 0.0722;
  fixed.selected_epoch = 37;
  CHECK(summary_line(fixed) == "90.84 ± 7.22 @ epoch 37");

  TempDir dir("reports");
  write_epoch_csv(dir / "e.csv", r);
  const auto lines = csv_lines(dir / "e.csv");
  CHECK(lines.front() == "seed,fold,epoch,train_loss,train_acc,test_loss,test_acc");
  CHECK(lines.size() == 1 + 3 * 3);
  CHECK(lines[1].rfind("99,0,1,", 0) == 0);

  write_json(dir / "r.json", j);
  CHECK(read_json(dir / "r.json") == j);
}

#include "gfnlab/harness.hpp"

#include "gfnlab/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace gfnlab {

void TrainConfig::validate() const {
  require(epochs >= 1, "TrainConfig: epochs must be >= 1");
  require(batch_size >= 2, "TrainConfig: batch_size must be >= 2");
  require(lr >= 0.0, "TrainConfig: lr must be >= 0");
}

PreparedDataset prepare_dataset(const Dataset& dataset, const ModelConfig& config, const PrecomputeOptions& options) {
  PreparedDataset out;
  out.name = dataset.name;
  out.num_classes = dataset.num_classes;
  out.labels = dataset.labels();
  const auto features = precompute_dataset(dataset, config.features, options);
  out.precompute_seconds = features.seconds;
  out.cache_hit = features.cache_hit;
  out.input_dim = features.width();
  out.features.reserve(dataset.size());
  for (const auto& f : features.graphs) out.features.push_back(f.matrix.cast<float>());
  if (config.uses_adjacency()) {
    out.adjacency.reserve(dataset.size());
    for (const auto& g : dataset.graphs) out.adjacency.push_back(normalized_adjacency(g.graph, config.features.epsilon));
  }
  return out;
}

namespace {

BatchedGraphs<float> make_batch(const PreparedDataset& data, std::span<const std::size_t> indices, bool adjacency) {
  std::vector<const Tensor*> feats;
  std::vector<const NormalizedAdjacency*> adj;
  std::vector<int> labels;
  feats.reserve(indices.size());
  labels.reserve(indices.size());
  for (std::size_t i : indices) {
    feats.push_back(&data.features[i]);
    labels.push_back(data.labels[i]);
    if (adjacency) adj.push_back(&data.adjacency[i]);
  }
  return batch_graphs<float>(feats, adj, labels);
}

bool has_batch_norm(const ModelConfig& c) { return c.kind != ModelKind::GLN && !c.linear_filter; }

std::string model_label(const ModelConfig& c) {
  std::string s = to_string(c.kind);
  if ((c.kind == ModelKind::GCN || c.kind == ModelKind::GFN) && c.num_conv_layers != 3)
    s += "-L" + std::to_string(c.num_conv_layers);
  return s;
}

}  // namespace

Evaluation evaluate(Model& model, const PreparedDataset& data, std::span<const std::size_t> indices, int batch_size) {
  Evaluation ev;
  if (indices.empty()) return ev;
  const bool adj = model.config().uses_adjacency();
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto chunk = indices.subspan(start, std::min<std::size_t>(batch_size, indices.size() - start));
    const auto batch = make_batch(data, chunk, adj);
    const Tensor logits = model.forward(batch, Mode::Eval);
    const auto ce = softmax_cross_entropy(logits, batch.labels);
    loss_sum += ce.loss * static_cast<double>(chunk.size());
    const auto pred = argmax_rows(logits);
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch.labels[i];
  }
  ev.loss = loss_sum / static_cast<double>(indices.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
  return ev;
}

double train_epoch(Model& model, const PreparedDataset& data, std::span<const std::size_t> order, int batch_size,
                   double lr) {
  const bool adj = model.config().uses_adjacency();
  const bool bn = has_batch_norm(model.config());
  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto chunk = order.subspan(start, std::min<std::size_t>(batch_size, order.size() - start));
    const auto batch = make_batch(data, chunk, adj);
    // Batch norm needs two rows of batch statistics.
    if (bn && batch.features.rows() < 2) continue;
    const Tensor logits = model.forward(batch, Mode::Train);
    const auto ce = softmax_cross_entropy(logits, batch.labels);
    model.backward(ce.grad);
    adam_step(model.parameters(), lr);
    loss_sum += ce.loss;
    ++batches;
  }
  return batches ? loss_sum / static_cast<double>(batches) : 0.0;
}

FoldResult train_fold(const PreparedDataset& data, std::span<const std::size_t> train, std::span<const std::size_t> test,
                      int fold, const ModelConfig& model_config, const TrainConfig& train_config, Model* trained) {
  train_config.validate();
  require(!train.empty(), "train_fold: empty training split");
  require(!test.empty(), "train_fold: empty test split");
  require(!model_config.uses_adjacency() || data.adjacency.size() == data.size(),
          "train_fold: GCN needs a dataset prepared with adjacency");

  ModelConfig cfg = model_config;
  cfg.num_classes = data.num_classes;
  Model model(cfg, data.input_dim, derive_seed(train_config.seed, static_cast<std::uint64_t>(fold), 0xA11CE));

  FoldResult result;
  result.fold = fold;
  result.train_size = train.size();
  result.test_size = test.size();
  result.epochs.reserve(static_cast<std::size_t>(train_config.epochs));

  std::vector<std::size_t> order(train.begin(), train.end());
  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    if (train_config.shuffle) {
      std::mt19937_64 rng(derive_seed(train_config.seed, static_cast<std::uint64_t>(fold),
                                      static_cast<std::uint64_t>(epoch) + 1));
      std::shuffle(order.begin(), order.end(), rng);
    }
    train_epoch(model, data, order, train_config.batch_size, train_config.lr);
    const auto tr = evaluate(model, data, train, train_config.batch_size);
    const auto te = evaluate(model, data, test, train_config.batch_size);
    result.epochs.push_back({tr.loss, tr.accuracy, te.loss, te.accuracy});
  }
  if (trained) *trained = std::move(model);
  return result;
}

FoldResult train_fold(const PreparedDataset& data, const FoldPlan& plan, int fold, const ModelConfig& model_config,
                      const TrainConfig& train_config, Model* trained) {
  require(plan.assignments.size() == data.size(), "train_fold: fold plan does not match the dataset");
  const auto train = plan.train_indices(fold);
  const auto test = plan.test_indices(fold);
  return train_fold(data, train, test, fold, model_config, train_config, trained);
}

EpochSelection select_epoch(std::span<const FoldResult> folds) {
  require(!folds.empty(), "select_epoch: no folds");
  const std::size_t epochs = folds.front().epochs.size();
  for (const auto& f : folds) require(f.epochs.size() == epochs, "select_epoch: folds have different epoch counts");
  require(epochs > 0, "select_epoch: no epochs");

  EpochSelection sel;
  sel.mean_per_epoch.assign(epochs, 0.0);
  for (std::size_t e = 0; e < epochs; ++e) {
    double s = 0.0;
    for (const auto& f : folds) s += f.epochs[e].test_acc;
    sel.mean_per_epoch[e] = s / static_cast<double>(folds.size());
  }
  std::size_t best = 0;
  for (std::size_t e = 1; e < epochs; ++e)
    if (sel.mean_per_epoch[e] > sel.mean_per_epoch[best]) best = e;
  sel.epoch = static_cast<int>(best) + 1;
  sel.mean = sel.mean_per_epoch[best];
  double var = 0.0;
  for (const auto& f : folds) var += (f.epochs[best].test_acc - sel.mean) * (f.epochs[best].test_acc - sel.mean);
  sel.std = std::sqrt(var / static_cast<double>(folds.size()));
  return sel;
}

CVReport run_cv(const Dataset& dataset, const ModelConfig& model_config, const TrainConfig& train_config, int k,
                std::uint64_t seed, const CvOptions& options) {
  train_config.validate();
  const FoldPlan plan = stratified_kfold(dataset, k, seed);
  ModelConfig cfg = model_config;
  cfg.num_classes = dataset.num_classes;
  const PreparedDataset data = prepare_dataset(dataset, cfg, options.precompute);

  CVReport report;
  report.dataset = dataset.name;
  report.model = cfg;
  report.train = train_config;
  report.k = k;
  report.fold_seed = seed;
  report.folds.resize(static_cast<std::size_t>(k));

  if (options.checkpoint_dir) std::filesystem::create_directories(*options.checkpoint_dir);
  auto run_one = [&](int fold) {
    Model trained(cfg, data.input_dim, 0);
    report.folds[static_cast<std::size_t>(fold)] = train_fold(data, plan, fold, cfg, train_config, &trained);
    if (options.checkpoint_dir)
      save_checkpoint(trained, *options.checkpoint_dir / ("fold_" + std::to_string(fold) + ".ckpt"));
  };

  const int jobs = std::clamp(options.jobs, 1, k);
  if (jobs == 1) {
    for (int f = 0; f < k; ++f) run_one(f);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (int f = next++; f < k; f = next++) {
          try {
            run_one(f);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
  }

  const auto sel = select_epoch(report.folds);
  report.mean_test_acc_per_epoch = sel.mean_per_epoch;
  report.selected_epoch = sel.epoch;
  report.mean_test_acc = sel.mean;
  report.std_test_acc = sel.std;
  return report;
}

Dataset subsample_dataset(const Dataset& dataset, double ratio, std::uint64_t seed) {
  require(ratio > 0.0 && ratio <= 1.0, "subsample_dataset: ratio must be in (0, 1]");
  const std::size_t n = dataset.size();
  const auto target = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(dataset.num_classes));
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(dataset.graphs[i].label)].push_back(i);

  // Largest-remainder apportionment of the target across classes.
  std::vector<std::size_t> quota(by_class.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const double exact = ratio * static_cast<double>(by_class[c].size());
    quota[c] = std::min(by_class[c].size(), static_cast<std::size_t>(std::floor(exact)));
    assigned += quota[c];
    remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i) {
    const std::size_t c = remainders[i].second;
    if (quota[c] < by_class[c].size()) {
      ++quota[c];
      ++assigned;
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<char> keep(n, 0);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto members = by_class[c];
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t j = 0; j < quota[c]; ++j) keep[members[j]] = 1;
  }

  Dataset out;
  out.name = dataset.name;
  out.num_classes = dataset.num_classes;
  out.feature_dim = dataset.feature_dim;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.graphs.push_back(dataset.graphs[i]);
  return out;
}

std::vector<FeatureSpec> default_feature_cells() {
  std::vector<FeatureSpec> cells;
  for (bool degree : {false, true}) {
    for (int k = 0; k <= 3; ++k) {
      FeatureSpec s;
      s.use_degree = degree;
      s.include_raw = true;
      s.K = k;
      cells.push_back(s);
    }
  }
  // Column order: none, d, A1X, A1-2X, A1-3X, d+A1X, d+A1-2X, d+A1-3X.
  return {cells[0], cells[4], cells[1], cells[2], cells[3], cells[5], cells[6], cells[7]};
}

AblationTable ablation_sweep(const Dataset& dataset, const AblationRequest& request, const TrainConfig& train_config) {
  require(!request.models.empty(), "ablation_sweep: no models");
  AblationTable table;
  table.axis = request.axis;
  if (request.axis == AblationAxis::Features) {
    require(!request.feature_cells.empty(), "ablation_sweep: empty feature grid");
    for (ModelKind kind : request.models) {
      for (const auto& spec : request.feature_cells) {
        ModelConfig cfg = ModelConfig::defaults(kind, dataset.num_classes);
        cfg.features = spec;
        table.rows.push_back({to_string(kind), spec.label(),
                              run_cv(dataset, cfg, train_config, request.k, request.seed, request.cv)});
      }
    }
  } else {
    require(!request.depths.empty(), "ablation_sweep: empty depth grid");
    for (int d : request.depths) require(d >= 1, "ablation_sweep: depth must be >= 1");
    for (ModelKind kind : request.models) {
      ModelConfig cfg = ModelConfig::defaults(kind, dataset.num_classes);
      if (kind == ModelKind::GLN || kind == ModelKind::GFNLight) {
        table.rows.push_back({to_string(kind), kind == ModelKind::GLN ? "flat" : "1",
                              run_cv(dataset, cfg, train_config, request.k, request.seed, request.cv)});
        continue;
      }
      for (int d : request.depths) {
        cfg.num_conv_layers = d;
        table.rows.push_back({to_string(kind), std::to_string(d),
                              run_cv(dataset, cfg, train_config, request.k, request.seed, request.cv)});
      }
    }
  }
  return table;
}

double median_after(std::span<const double> values, std::size_t skip) {
  if (values.size() <= skip) skip = 0;
  std::vector<double> v(values.begin() + static_cast<std::ptrdiff_t>(skip), values.end());
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

TimingReport benchmark_timing(const Dataset& dataset, std::span<const ModelConfig> configs,
                              const TrainConfig& train_config, int warmup_epochs, const PrecomputeOptions& options) {
  train_config.validate();
  require(configs.size() >= 2, "benchmark_timing: need at least two configs");
  const auto gcn = std::find_if(configs.begin(), configs.end(),
                                [](const ModelConfig& c) { return c.kind == ModelKind::GCN; });
  require(gcn != configs.end(), "benchmark_timing: a GCN config is required as the baseline");
  require(warmup_epochs >= 0, "benchmark_timing: warmup_epochs must be >= 0");

  const FoldPlan plan = stratified_kfold(dataset, 10, train_config.seed);
  const auto train = plan.train_indices(0);

  TimingReport report;
  report.dataset = dataset.name;
  report.train = train_config;
  report.warmup_epochs = warmup_epochs;
  for (const auto& base : configs) {
    ModelConfig cfg = base;
    cfg.num_classes = dataset.num_classes;
    const PreparedDataset data = prepare_dataset(dataset, cfg, options);
    Model model(cfg, data.input_dim, derive_seed(train_config.seed, 0, 0xA11CE));
    TimingEntry entry;
    entry.model = model_label(cfg);
    entry.config = cfg;
    entry.precompute_seconds = data.precompute_seconds;
    std::vector<std::size_t> order(train.begin(), train.end());
    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
      if (train_config.shuffle) {
        std::mt19937_64 rng(derive_seed(train_config.seed, 0, static_cast<std::uint64_t>(epoch) + 1));
        std::shuffle(order.begin(), order.end(), rng);
      }
      const auto t0 = std::chrono::steady_clock::now();
      train_epoch(model, data, order, train_config.batch_size, train_config.lr);
      entry.epoch_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    entry.median_epoch_seconds = median_after(entry.epoch_seconds, static_cast<std::size_t>(warmup_epochs));
    report.entries.push_back(std::move(entry));
  }
  const double baseline = report.entries[static_cast<std::size_t>(gcn - configs.begin())].median_epoch_seconds;
  for (auto& e : report.entries) e.speedup = e.median_epoch_seconds > 0.0 ? baseline / e.median_epoch_seconds : 0.0;
  return report;
}

}  // namespace gfnlab

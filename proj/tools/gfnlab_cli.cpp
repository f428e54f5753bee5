#include "gfnlab/errors.hpp"
#include "gfnlab/features.hpp"
#include "gfnlab/harness.hpp"
#include "gfnlab/reports.hpp"
#include "gfnlab/synthetic.hpp"
#include "gfnlab/tu_dataset.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gfnlab;

namespace {

struct Options {
  std::string dataset = "synthetic";
  std::string model = "gfn";
  int folds = 10;
  int epochs = 100;
  int batch = 128;
  double lr = 0.001;
  int k = 3;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
  std::string data_dir;
  std::string cache_dir;
  bool no_cache = false;
  std::size_t num_graphs = 200;
  int hidden = 128;
  int layers = 3;
  bool no_degree = false;
  bool no_raw = false;
  bool raw_degree = false;
  bool normalize_attributes = false;
  std::string checkpoint_dir;
  // benchmark / ablate
  std::string models;
  int warmup = 1;
  std::string axis = "features";
  std::string grid;

  const CLI::Option* k_option = nullptr;
  const CLI::Option* grid_option = nullptr;
};

// Raised for inputs CLI11 cannot validate on its own; maps to exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string compact_stamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  char out[48];
  std::snprintf(out, sizeof out, "%s-%03lld", buf, static_cast<long long>(ms));
  return out;
}

fs::path data_root(const Options& o) {
  if (!o.data_dir.empty()) return o.data_dir;
  if (const char* env = std::getenv("GFNLAB_DATA"); env && *env) return env;
  return "data";
}

struct LoadedDataset {
  Dataset dataset;
  std::string source;  // "synthetic" or a directory
};

LoadedDataset load_dataset(const Options& o) {
  if (o.dataset == "synthetic") return {generate_synthetic_dataset(o.num_graphs, o.seed), "synthetic"};
  if (o.dataset == "synthetic-dense") return {generate_dense_dataset(o.num_graphs, o.seed), "synthetic-dense"};
  TuParseOptions parse;
  parse.normalize_attributes = o.normalize_attributes;
  fs::path dir = o.dataset;
  if (fs::is_directory(dir)) {
    const std::string name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    return {parse_tu_dataset(dir, name, parse), fs::absolute(dir).string()};
  }
  const std::string name = canonical_dataset_name(o.dataset);
  dir = data_root(o) / name;
  if (!fs::is_directory(dir))
    throw ParseError("dataset '" + o.dataset + "' not found: no directory " + dir.string() +
                     " (set --data-dir or GFNLAB_DATA)");
  return {parse_tu_dataset(dir, name, parse), fs::absolute(dir).string()};
}

FeatureSpec feature_spec(const Options& o, ModelKind kind) {
  FeatureSpec s;
  s.use_degree = !o.no_degree;
  s.include_raw = !o.no_raw;
  s.degree_encoding = o.raw_degree ? DegreeEncoding::Raw : DegreeEncoding::OneHot;
  // GCN propagates inside the network; its inputs are [d, X] unless --k is given.
  s.K = kind == ModelKind::GCN && o.k_option && o.k_option->count() == 0 ? 0 : o.k;
  return s;
}

ModelConfig model_config(const Options& o, ModelKind kind, int num_classes) {
  ModelConfig c = ModelConfig::defaults(kind, num_classes);
  c.hidden_dim = o.hidden;
  c.num_conv_layers = o.layers;
  c.features = feature_spec(o, kind);
  return c;
}

TrainConfig train_config(const Options& o) {
  TrainConfig t;
  t.epochs = o.epochs;
  t.batch_size = o.batch;
  t.lr = o.lr;
  t.seed = o.seed;
  return t;
}

PrecomputeOptions precompute_options(const Options& o) {
  PrecomputeOptions p;
  if (o.no_cache) return p;
  if (!o.cache_dir.empty())
    p.cache_dir = fs::path(o.cache_dir);
  else if (auto env = cache_dir_from_env())
    p.cache_dir = env;
  else
    p.cache_dir = fs::path(".gfnlab_cache");
  return p;
}

std::vector<ModelKind> parse_models(const std::string& list, std::vector<ModelKind> fallback) {
  if (list.empty()) return fallback;
  std::vector<ModelKind> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(parse_model_kind(item));
    } catch (const ContractViolation& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("--models is empty");
  return out;
}

// "1..5", "1,2,3" or a mix such as "1..2,4".
std::vector<int> parse_int_grid(const std::string& grid) {
  std::vector<int> out;
  std::stringstream ss(grid);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      const auto dots = item.find("..");
      if (dots == std::string::npos) {
        out.push_back(std::stoi(item));
      } else {
        const int lo = std::stoi(item.substr(0, dots));
        const int hi = std::stoi(item.substr(dots + 2));
        if (hi < lo) throw UsageError("grid range '" + item + "' is empty");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::invalid_argument&) {
      throw UsageError("cannot parse grid entry '" + item + "'");
    } catch (const std::out_of_range&) {
      throw UsageError("grid entry '" + item + "' is out of range");
    }
  }
  if (out.empty()) throw UsageError("--grid is empty");
  for (int v : out)
    if (v < 1) throw UsageError("grid depths must be >= 1");
  return out;
}

std::vector<FeatureSpec> parse_feature_grid(const std::string& grid) {
  const auto all = default_feature_cells();
  if (grid.empty()) return all;
  std::vector<FeatureSpec> out;
  std::stringstream ss(grid);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto it = std::find_if(all.begin(), all.end(), [&](const FeatureSpec& s) { return s.label() == item; });
    if (it == all.end()) throw UsageError("unknown feature cell '" + item + "'");
    out.push_back(*it);
  }
  if (out.empty()) throw UsageError("--grid is empty");
  return out;
}

json options_json(const Options& o) {
  return {{"dataset", o.dataset},   {"model", o.model},
          {"folds", o.folds},       {"epochs", o.epochs},
          {"batch", o.batch},       {"lr", o.lr},
          {"k", o.k},               {"seed", o.seed},
          {"jobs", o.jobs},         {"num_graphs", o.num_graphs},
          {"hidden", o.hidden},     {"layers", o.layers},
          {"no_degree", o.no_degree}, {"no_raw", o.no_raw},
          {"raw_degree", o.raw_degree}, {"normalize_attributes", o.normalize_attributes},
          {"models", o.models},     {"warmup", o.warmup},
          {"axis", o.axis},         {"grid", o.grid}};
}

class Run {
 public:
  Run(std::string command, const Options& o) : command_(std::move(command)), options_(o), started_(utc_now()) {
    dir_ = o.out.empty() ? fs::path("runs") / (command_ + "-" + compact_stamp()) : fs::path(o.out);
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }
  fs::path output(const std::string& name) {
    outputs_.push_back(name);
    return dir_ / name;
  }

  void write_manifest(const LoadedDataset& data, const json& resolved, const std::string& model) {
    json m = {{"command", command_},
              {"dataset", {{"name", data.dataset.name}, {"source", data.source}, {"graphs", data.dataset.size()},
                           {"fingerprint", data.dataset.fingerprint()}}},
              {"model", model},
              {"options", options_json(options_)},
              {"config", resolved},
              {"seeds", {{"seed", options_.seed}, {"fold_seed", options_.seed}}},
              {"started_at", started_},
              {"finished_at", utc_now()},
              {"outputs", outputs_}};
    write_json(dir_ / "manifest.json", m);
  }

 private:
  std::string command_;
  Options options_;
  std::string started_;
  fs::path dir_;
  std::vector<std::string> outputs_;
};

CvOptions cv_options(const Options& o) {
  CvOptions cv;
  cv.jobs = o.jobs;
  cv.precompute = precompute_options(o);
  if (!o.checkpoint_dir.empty()) cv.checkpoint_dir = fs::path(o.checkpoint_dir);
  return cv;
}

int cmd_cv(const Options& o) {
  const auto data = load_dataset(o);
  const auto kind = parse_model_kind(o.model);
  const auto mc = model_config(o, kind, data.dataset.num_classes);
  const auto tc = train_config(o);
  Run run("cv", o);
  const CVReport report = run_cv(data.dataset, mc, tc, o.folds, o.seed, cv_options(o));
  write_json(run.output("report.json"), to_json(report));
  write_epoch_csv(run.output("epochs.csv"), report);
  run.write_manifest(data, {{"model", to_json(mc)}, {"train", to_json(tc)}, {"k", o.folds}}, o.model);
  std::cout << data.dataset.name << ' ' << o.model << ": " << summary_line(report) << '\n';
  return 0;
}

int cmd_features(const Options& o) {
  const auto data = load_dataset(o);
  const auto kind = parse_model_kind(o.model);
  const FeatureSpec spec = feature_spec(o, kind);
  Run run("features", o);
  const auto features = precompute_dataset(data.dataset, spec, precompute_options(o));
  const auto files = export_features_csv(features, run.dir() / "features", data.dataset.name, o.seed);
  run.output("features");
  run.write_manifest(data,
                     {{"features", to_json(spec)},
                      {"degree_cap", features.degree_cap},
                      {"width", features.width()},
                      {"cache_hit", features.cache_hit},
                      {"files", files.size()}},
                     o.model);
  std::printf("%zu graphs, width %lld, %s (%.3fs)\n", files.size(), static_cast<long long>(features.width()),
              features.cache_hit ? "cache hit" : "computed", features.seconds);
  return 0;
}

int cmd_benchmark(const Options& o) {
  const auto data = load_dataset(o);
  const auto kinds = parse_models(o.models, {ModelKind::GCN, ModelKind::GFN, ModelKind::GFNLight});
  std::vector<ModelConfig> configs;
  for (auto k : kinds) configs.push_back(model_config(o, k, data.dataset.num_classes));
  const auto tc = train_config(o);
  Run run("benchmark", o);
  const TimingReport report = benchmark_timing(data.dataset, configs, tc, o.warmup, precompute_options(o));
  write_json(run.output("timing.json"), to_json(report));
  json cfg = json::array();
  for (const auto& c : configs) cfg.push_back(to_json(c));
  run.write_manifest(data, {{"models", cfg}, {"train", to_json(tc)}, {"warmup", o.warmup}}, o.models);

  std::printf("%-12s %14s %14s %9s\n", "model", "median_ms", "precompute_s", "speedup");
  for (const auto& e : report.entries)
    std::printf("%-12s %14.3f %14.4f %8.2fx\n", e.model.c_str(), 1000.0 * e.median_epoch_seconds,
                e.precompute_seconds, e.speedup);
  return 0;
}

int cmd_ablate(const Options& o) {
  AblationRequest req;
  const bool grid_given = o.grid_option && o.grid_option->count() > 0;
  if (grid_given && o.grid.empty()) throw UsageError("--grid is empty");
  if (o.axis == "features") {
    req.axis = AblationAxis::Features;
    req.feature_cells = parse_feature_grid(o.grid);
  } else {
    req.axis = AblationAxis::Depth;
    req.depths = parse_int_grid(o.grid.empty() ? "1..5" : o.grid);
  }
  req.models = parse_models(o.models, {ModelKind::GCN, ModelKind::GFN});
  req.k = o.folds;
  req.seed = o.seed;
  req.cv = cv_options(o);
  const auto data = load_dataset(o);
  const auto tc = train_config(o);
  Run run("ablate", o);
  const AblationTable table = ablation_sweep(data.dataset, req, tc);
  write_ablation_csv(run.output("ablation.csv"), table);
  json rows = json::array();
  for (const auto& r : table.rows) rows.push_back({{"model", r.model}, {"cell", r.cell}, {"report", to_json(r.report)}});
  write_json(run.output("ablation.json"), {{"axis", o.axis}, {"rows", rows}});
  run.write_manifest(data, {{"axis", o.axis}, {"train", to_json(tc)}, {"k", o.folds}}, o.models);

  std::printf("%-12s %-10s %8s %8s %6s\n", "model", "cell", "mean", "std", "epoch");
  for (const auto& r : table.rows)
    std::printf("%-12s %-10s %8.2f %8.2f %6d\n", r.model.c_str(), r.cell.c_str(), 100.0 * r.report.mean_test_acc,
                100.0 * r.report.std_test_acc, r.report.selected_epoch);
  return 0;
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--dataset", o.dataset, "synthetic, synthetic-dense, a TU name or a directory")
      ->capture_default_str();
  app->add_option("--model", o.model, "Model kind")
      ->check(CLI::IsMember({"gcn", "gfn", "gfn-light", "gln"}))
      ->capture_default_str();
  app->add_option("--folds", o.folds, "Cross-validation folds")->check(CLI::Range(2, 1000))->capture_default_str();
  app->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--batch", o.batch, "Batch size")->check(CLI::Range(2, 1 << 20))->capture_default_str();
  app->add_option("--lr", o.lr, "Adam learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
  o.k_option = app->add_option("--k", o.k, "Feature propagation depth K")->check(CLI::Range(0, 64))->capture_default_str();
  app->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  app->add_option("--jobs", o.jobs, "Folds trained concurrently")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--out", o.out, "Output directory (default runs/<command>-<timestamp>)");
  app->add_option("--data-dir", o.data_dir, "Root holding TU dataset directories (default $GFNLAB_DATA or ./data)");
  app->add_option("--cache-dir", o.cache_dir, "Feature cache directory (default $GFNLAB_CACHE or ./.gfnlab_cache)");
  app->add_flag("--no-cache", o.no_cache, "Do not read or write the feature cache");
  app->add_option("--num-graphs", o.num_graphs, "Graph count for synthetic datasets")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 24))
      ->capture_default_str();
  app->add_option("--hidden", o.hidden, "Hidden width")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--layers", o.layers, "Conv / transform layers after the input layer")
      ->check(CLI::Range(0, 64))
      ->capture_default_str();
  app->add_flag("--no-degree", o.no_degree, "Drop the degree block");
  app->add_flag("--no-raw", o.no_raw, "Drop the raw X block");
  app->add_flag("--raw-degree", o.raw_degree, "Use the raw degree value instead of one-hot buckets");
  app->add_flag("--normalize-attributes", o.normalize_attributes, "Z-score continuous node attributes");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gfnlab: graph classification with GCN, GFN and GLN"};
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.require_subcommand(1);
  Options o;

  auto* cv = app.add_subcommand("cv", "k-fold cross-validation with best-epoch selection");
  add_common(cv, o);
  cv->add_option("--checkpoint-dir", o.checkpoint_dir, "Write each fold's final model here");

  auto* features = app.add_subcommand("features", "Precompute augmented features and export them as CSV");
  add_common(features, o);

  auto* bench = app.add_subcommand("benchmark", "Per-epoch training time against GCN");
  add_common(bench, o);
  bench->add_option("--models", o.models, "Comma-separated model kinds (default gcn,gfn,gfn-light)");
  bench->add_option("--warmup", o.warmup, "Epochs excluded from the median")->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "Feature or depth ablation table");
  add_common(ablate, o);
  ablate->add_option("--axis", o.axis, "features or depth")->check(CLI::IsMember({"features", "depth"}))
      ->capture_default_str();
  o.grid_option = ablate->add_option("--grid", o.grid, "Depths such as 1..5, or feature cells such as d,d+A1-3X");
  ablate->add_option("--models", o.models, "Comma-separated model kinds (default gcn,gfn)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*cv) return cmd_cv(o);
    if (*features) return cmd_features(o);
    if (*bench) return cmd_benchmark(o);
    if (*ablate) return cmd_ablate(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

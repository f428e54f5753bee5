#include "gfnlab/reports.hpp"

#include "gfnlab/errors.hpp"

#include <cstdio>
#include <fstream>

namespace gfnlab {

using nlohmann::json;

json to_json(const FeatureSpec& s) {
  return {{"use_degree", s.use_degree},
          {"include_raw", s.include_raw},
          {"K", s.K},
          {"epsilon", s.epsilon},
          {"degree_encoding", s.degree_encoding == DegreeEncoding::OneHot ? "one_hot" : "raw"}};
}

json to_json(const ModelConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"hidden_dim", c.hidden_dim},
          {"num_conv_layers", c.num_conv_layers},
          {"features", to_json(c.features)},
          {"num_classes", c.num_classes},
          {"linear_filter", c.linear_filter}};
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"lr", c.lr}, {"seed", c.seed}, {"shuffle", c.shuffle}};
}

json to_json(const CVReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    json epochs = json::array();
    for (const auto& e : f.epochs)
      epochs.push_back(
          {{"train_loss", e.train_loss}, {"train_acc", e.train_acc}, {"test_loss", e.test_loss}, {"test_acc", e.test_acc}});
    folds.push_back({{"fold", f.fold}, {"train_size", f.train_size}, {"test_size", f.test_size}, {"epochs", epochs}});
  }
  return {{"dataset", r.dataset},
          {"model", to_json(r.model)},
          {"train", to_json(r.train)},
          {"k", r.k},
          {"fold_seed", r.fold_seed},
          {"selected_epoch", r.selected_epoch},
          {"mean_test_acc", r.mean_test_acc},
          {"std_test_acc", r.std_test_acc},
          {"mean_test_acc_per_epoch", r.mean_test_acc_per_epoch},
          {"folds", folds}};
}

json to_json(const TimingReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"model", e.model},
                       {"config", to_json(e.config)},
                       {"epoch_seconds", e.epoch_seconds},
                       {"median_epoch_seconds", e.median_epoch_seconds},
                       {"precompute_seconds", e.precompute_seconds},
                       {"speedup", e.speedup}});
  return {{"dataset", r.dataset}, {"train", to_json(r.train)}, {"warmup_epochs", r.warmup_epochs}, {"entries", entries}};
}

FeatureSpec feature_spec_from_json(const json& j) {
  FeatureSpec s;
  s.use_degree = j.at("use_degree").get<bool>();
  s.include_raw = j.at("include_raw").get<bool>();
  s.K = j.at("K").get<int>();
  s.epsilon = j.at("epsilon").get<double>();
  s.degree_encoding = j.at("degree_encoding").get<std::string>() == "raw" ? DegreeEncoding::Raw : DegreeEncoding::OneHot;
  return s;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.kind = parse_model_kind(j.at("kind").get<std::string>());
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.num_conv_layers = j.at("num_conv_layers").get<int>();
  c.features = feature_spec_from_json(j.at("features"));
  c.num_classes = j.at("num_classes").get<int>();
  c.linear_filter = j.value("linear_filter", false);
  return c;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lr = j.at("lr").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.shuffle = j.at("shuffle").get<bool>();
  return c;
}

CVReport cv_report_from_json(const json& j) {
  CVReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.model = model_config_from_json(j.at("model"));
  r.train = train_config_from_json(j.at("train"));
  r.k = j.at("k").get<int>();
  r.fold_seed = j.at("fold_seed").get<std::uint64_t>();
  r.selected_epoch = j.at("selected_epoch").get<int>();
  r.mean_test_acc = j.at("mean_test_acc").get<double>();
  r.std_test_acc = j.at("std_test_acc").get<double>();
  r.mean_test_acc_per_epoch = j.at("mean_test_acc_per_epoch").get<std::vector<double>>();
  for (const auto& f : j.at("folds")) {
    FoldResult fr;
    fr.fold = f.at("fold").get<int>();
    fr.train_size = f.at("train_size").get<std::size_t>();
    fr.test_size = f.at("test_size").get<std::size_t>();
    for (const auto& e : f.at("epochs"))
      fr.epochs.push_back({e.at("train_loss").get<double>(), e.at("train_acc").get<double>(),
                           e.at("test_loss").get<double>(), e.at("test_acc").get<double>()});
    r.folds.push_back(std::move(fr));
  }
  return r;
}

TimingReport timing_report_from_json(const json& j) {
  TimingReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.train = train_config_from_json(j.at("train"));
  r.warmup_epochs = j.at("warmup_epochs").get<int>();
  for (const auto& e : j.at("entries")) {
    TimingEntry t;
    t.model = e.at("model").get<std::string>();
    t.config = model_config_from_json(e.at("config"));
    t.epoch_seconds = e.at("epoch_seconds").get<std::vector<double>>();
    t.median_epoch_seconds = e.at("median_epoch_seconds").get<double>();
    t.precompute_seconds = e.at("precompute_seconds").get<double>();
    t.speedup = e.at("speedup").get<double>();
    r.entries.push_back(std::move(t));
  }
  return r;
}

std::string summary_line(const CVReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f @ epoch %d", 100.0 * r.mean_test_acc, 100.0 * r.std_test_acc,
                r.selected_epoch);
  return buf;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return json::parse(in);
}

void write_epoch_csv(const std::filesystem::path& path, const CVReport& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "seed,fold,epoch,train_loss,train_acc,test_loss,test_acc\n";
  char buf[256];
  for (const auto& f : r.folds) {
    for (std::size_t e = 0; e < f.epochs.size(); ++e) {
      const auto& m = f.epochs[e];
      std::snprintf(buf, sizeof buf, "%llu,%d,%zu,%.17g,%.17g,%.17g,%.17g\n",
                    static_cast<unsigned long long>(r.train.seed), f.fold, e + 1, m.train_loss, m.train_acc,
                    m.test_loss, m.test_acc);
      out << buf;
    }
  }
}

void write_ablation_csv(const std::filesystem::path& path, const AblationTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "model,cell,mean,std,selected_epoch,seed\n";
  char buf[256];
  for (const auto& row : table.rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.2f,%.2f,%d,%llu\n", row.model.c_str(), row.cell.c_str(),
                  100.0 * row.report.mean_test_acc, 100.0 * row.report.std_test_acc, row.report.selected_epoch,
                  static_cast<unsigned long long>(row.report.train.seed));
    out << buf;
  }
}

}  // namespace gfnlab

#pragma once

#include "gfnlab/features.hpp"
#include "gfnlab/folds.hpp"
#include "gfnlab/graph.hpp"
#include "gfnlab/models.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gfnlab {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 128;
  double lr = 0.001;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

/// Model-ready inputs: per-graph float features (and adjacency for GCN).
struct PreparedDataset {
  std::string name;
  std::vector<Tensor> features;
  std::vector<NormalizedAdjacency> adjacency;  // empty unless the model propagates
  std::vector<int> labels;
  int num_classes = 0;
  Index input_dim = 0;
  double precompute_seconds = 0.0;
  bool cache_hit = false;

  std::size_t size() const { return labels.size(); }
};

PreparedDataset prepare_dataset(const Dataset& dataset, const ModelConfig& config,
                                const PrecomputeOptions& options = {});

struct EpochMetrics {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;
};

struct FoldResult {
  int fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<EpochMetrics> epochs;
};

/// Mean loss and accuracy in eval mode. Accuracy is correct / size with argmax
/// ties broken toward the lowest class.
struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};
Evaluation evaluate(Model& model, const PreparedDataset& data, std::span<const std::size_t> indices, int batch_size);

/// One pass over `order` in mini-batches with Adam updates. Returns the mean
/// training loss of the batches.
double train_epoch(Model& model, const PreparedDataset& data, std::span<const std::size_t> order, int batch_size,
                   double lr);

/// Trains a fresh model on `train` and records eval-mode metrics on both
/// splits after every epoch. Shuffling uses an RNG seeded from
/// (train.seed, fold, epoch); the model is initialized from (train.seed, fold).
FoldResult train_fold(const PreparedDataset& data, std::span<const std::size_t> train,
                      std::span<const std::size_t> test, int fold, const ModelConfig& model_config,
                      const TrainConfig& train_config, Model* trained = nullptr);

FoldResult train_fold(const PreparedDataset& data, const FoldPlan& plan, int fold, const ModelConfig& model_config,
                      const TrainConfig& train_config, Model* trained = nullptr);

struct EpochSelection {
  int epoch = 1;  // 1-based
  double mean = 0.0;
  double std = 0.0;  // population std over folds at `epoch`
  std::vector<double> mean_per_epoch;
};

/// Picks the single epoch with the best fold-averaged test accuracy; earliest
/// epoch on ties.
EpochSelection select_epoch(std::span<const FoldResult> folds);

struct CVReport {
  std::string dataset;
  ModelConfig model;
  TrainConfig train;
  int k = 10;
  std::uint64_t fold_seed = 0;
  std::vector<FoldResult> folds;
  std::vector<double> mean_test_acc_per_epoch;
  int selected_epoch = 1;  // 1-based
  double mean_test_acc = 0.0;
  double std_test_acc = 0.0;
};

struct CvOptions {
  /// Folds trained concurrently. Results do not depend on this value.
  int jobs = 1;
  PrecomputeOptions precompute;
  /// When set, each fold's final model is written as fold_<i>.ckpt.
  std::optional<std::filesystem::path> checkpoint_dir;
};

CVReport run_cv(const Dataset& dataset, const ModelConfig& model_config, const TrainConfig& train_config, int k,
                std::uint64_t seed, const CvOptions& options = {});

/// Stratified random subset of ceil(ratio * N) graphs; original order is kept.
Dataset subsample_dataset(const Dataset& dataset, double ratio, std::uint64_t seed);

enum class AblationAxis { Features, Depth };

struct AblationRequest {
  AblationAxis axis = AblationAxis::Features;
  std::vector<FeatureSpec> feature_cells;  // features axis
  std::vector<int> depths;                 // depth axis: conv / transform layers after the input layer
  std::vector<ModelKind> models{ModelKind::GCN, ModelKind::GFN};
  int k = 10;
  std::uint64_t seed = 0;
  CvOptions cv;
};

struct AblationRow {
  std::string model;
  std::string cell;
  CVReport report;
};

struct AblationTable {
  AblationAxis axis = AblationAxis::Features;
  std::vector<AblationRow> rows;
};

/// The eight feature cells of the feature ablation: none, d, A1X, A1-2X,
/// A1-3X, d+A1X, d+A1-2X, d+A1-3X. Raw X is always included.
std::vector<FeatureSpec> default_feature_cells();

/// One CV run per (model, cell). Features axis: the cell's spec replaces the
/// model's input features (GCN still propagates on top). Depth axis: the
/// cell sets num_conv_layers; GLN contributes a single "flat" row.
AblationTable ablation_sweep(const Dataset& dataset, const AblationRequest& request, const TrainConfig& train_config);

struct TimingEntry {
  std::string model;
  ModelConfig config;
  std::vector<double> epoch_seconds;
  double median_epoch_seconds = 0.0;
  double precompute_seconds = 0.0;
  double speedup = 1.0;  // GCN median / this median
};

struct TimingReport {
  std::string dataset;
  TrainConfig train;
  int warmup_epochs = 1;
  std::vector<TimingEntry> entries;
};

/// Trains each config on the same fold split and seed, timing each epoch of
/// training (forward, backward, update) with a monotonic clock. The median
/// excludes the first `warmup_epochs` epochs. Feature precomputation is timed
/// separately and not included in the epoch times.
TimingReport benchmark_timing(const Dataset& dataset, std::span<const ModelConfig> configs,
                              const TrainConfig& train_config, int warmup_epochs = 1,
                              const PrecomputeOptions& options = {});

/// Median of the values after dropping the first `skip`.
double median_after(std::span<const double> values, std::size_t skip);

}  // namespace gfnlab

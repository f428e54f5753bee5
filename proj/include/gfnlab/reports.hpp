#pragma once

#include "gfnlab/harness.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace gfnlab {

nlohmann::json to_json(const FeatureSpec& spec);
nlohmann::json to_json(const ModelConfig& config);
nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const CVReport& report);
nlohmann::json to_json(const TimingReport& report);

FeatureSpec feature_spec_from_json(const nlohmann::json& j);
ModelConfig model_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);
CVReport cv_report_from_json(const nlohmann::json& j);
TimingReport timing_report_from_json(const nlohmann::json& j);

/// "mean ± std @ epoch E" with accuracies in percent.
std::string summary_line(const CVReport& report);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Columns: seed,fold,epoch,train_loss,train_acc,test_loss,test_acc.
void write_epoch_csv(const std::filesystem::path& path, const CVReport& report);
/// Columns: model,cell,mean,std,selected_epoch,seed (accuracies in percent).
void write_ablation_csv(const std::filesystem::path& path, const AblationTable& table);

}  // namespace gfnlab

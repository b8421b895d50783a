#pragma once

#include "perfcast/forecaster.hpp"

#include <json.hpp>

#include <filesystem>

namespace perfcast {

inline constexpr int kModelVersion = 1;

/// {version, basis, stage1, stage2, feature_schema}; trees are flat node
/// arrays and every double is written with round-trip precision.
nlohmann::json model_to_json(const ForecastModel& model);

/// Throws InputError on a version mismatch or a malformed document.
ForecastModel model_from_json(const nlohmann::json& doc);

void save_model(const ForecastModel& model, const std::filesystem::path& path);
ForecastModel load_model(const std::filesystem::path& path);

nlohmann::json params_to_json(const OffsetParams& params);
std::string kind_name(EnsembleKind kind); // "gbt" or "rf"
EnsembleKind parse_kind(const std::string& name);

} // namespace perfcast

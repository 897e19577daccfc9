#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "wgboost/boosting.hpp"

namespace wgboost {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json tree_to_json(const RegressionTree& tree);
RegressionTree tree_from_json(const nlohmann::json& j, Index num_features);

nlohmann::json config_to_json(const BoostConfig& cfg);
/// Overlays the fields present in `j` onto `base`.
BoostConfig config_from_json(const nlohmann::json& j, BoostConfig base = {});

nlohmann::json model_to_json(const WGBoostModel& model);
WGBoostModel model_from_json(const nlohmann::json& j);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

void save_model(const WGBoostModel& model, const std::filesystem::path& path);
WGBoostModel load_model(const std::filesystem::path& path);

} // namespace wgboost

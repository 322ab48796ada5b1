#pragma once

#include <filesystem>

#include "milkit/models/model.hpp"

#include "json.hpp"

namespace milkit {

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

/// Writes `dir/model.json` plus one float64 ArrayFile per parameter under
/// `dir/params/`. Parameter names double as file names.
void save_checkpoint(MILModel& model, const std::filesystem::path& dir);

/// Rebuilds the model from `dir/model.json` and restores every parameter.
MILModelPtr load_checkpoint(const std::filesystem::path& dir);

}  // namespace milkit

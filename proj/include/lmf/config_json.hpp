#pragma once

#include <string>

#include <json.hpp>

#include "lmf/lmfnet.hpp"
#include "lmf/train.hpp"

namespace lmf {

nlohmann::json network_config_to_json(const NetworkConfig& cfg);
NetworkConfig network_config_from_json(const nlohmann::json& j);

nlohmann::json recipe_to_json(const TrainRecipe& recipe);
TrainRecipe recipe_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const nlohmann::json& j, const std::string& path);

// Named stock configurations usable from the CLI (--config name or a path).
NetworkConfig resolve_network_config(const std::string& name_or_path);

}  // namespace lmf

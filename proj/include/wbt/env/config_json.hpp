#pragma once

#include <nlohmann/json.hpp>

#include "wbt/env/tracking_env.hpp"

namespace wbt::env {

nlohmann::json ToJson(const RewardWeights& w);
nlohmann::json ToJson(const EnvConfig& c);
nlohmann::json ToJson(const ObsLayout& l);

// Each overlays the keys present in `j` onto `base`. Unknown keys and
// wrongly typed values throw ConfigError; the result is validated.
RewardWeights RewardWeightsFromJson(const nlohmann::json& j, const RewardWeights& base);
EnvConfig EnvConfigFromJson(const nlohmann::json& j, const EnvConfig& base);
ObsLayout ObsLayoutFromJson(const nlohmann::json& j, const ObsLayout& base);

}  // namespace wbt::env

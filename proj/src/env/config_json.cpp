#include "wbt/env/config_json.hpp"

#include <string>
#include <utility>
#include <vector>

#include "wbt/core/errors.hpp"

namespace wbt::env {
namespace {

using nlohmann::json;

const std::vector<std::pair<const char*, double RewardWeights::*>>& WeightFields() {
  static const std::vector<std::pair<const char*, double RewardWeights::*>> fields = {
      {"dof_pos", &RewardWeights::dof_pos},
      {"dof_pos_scale", &RewardWeights::dof_pos_scale},
      {"keypoint_pos", &RewardWeights::keypoint_pos},
      {"keypoint_pos_scale", &RewardWeights::keypoint_pos_scale},
      {"lin_vel", &RewardWeights::lin_vel},
      {"lin_vel_scale", &RewardWeights::lin_vel_scale},
      {"vel_direction", &RewardWeights::vel_direction},
      {"vel_direction_scale", &RewardWeights::vel_direction_scale},
      {"roll_pitch", &RewardWeights::roll_pitch},
      {"roll_pitch_scale", &RewardWeights::roll_pitch_scale},
      {"yaw", &RewardWeights::yaw},
      {"yaw_scale", &RewardWeights::yaw_scale},
      {"direction_min_speed", &RewardWeights::direction_min_speed},
      {"dof_limits", &RewardWeights::dof_limits},
      {"dof_acc", &RewardWeights::dof_acc},
      {"dof_error", &RewardWeights::dof_error},
      {"energy", &RewardWeights::energy},
      {"lin_vel_z", &RewardWeights::lin_vel_z},
      {"ang_vel_xy", &RewardWeights::ang_vel_xy},
      {"action_rate", &RewardWeights::action_rate},
      {"feet_air_time", &RewardWeights::feet_air_time},
      {"air_time_target", &RewardWeights::air_time_target},
      {"feet_velocity", &RewardWeights::feet_velocity},
      {"contact_force", &RewardWeights::contact_force},
      {"contact_force_allowance", &RewardWeights::contact_force_allowance},
      {"stumble", &RewardWeights::stumble},
      {"stumble_ratio", &RewardWeights::stumble_ratio},
      {"hip_pos", &RewardWeights::hip_pos},
      {"waist_roll_pitch", &RewardWeights::waist_roll_pitch},
      {"ankle_action", &RewardWeights::ankle_action},
  };
  return fields;
}

std::string_view NormName(NormType n) {
  switch (n) {
    case NormType::kL2: return "l2";
    case NormType::kL1: return "l1";
    case NormType::kMean: return "mean";
  }
  return "l2";
}

NormType ParseNorm(const std::string& s) {
  if (s == "l2") return NormType::kL2;
  if (s == "l1") return NormType::kL1;
  if (s == "mean") return NormType::kMean;
  throw ConfigError("unknown norm '" + s + "' (expected l2, l1 or mean)");
}

template <typename T>
T Get(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void RequireObject(const json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
}

}  // namespace

json ToJson(const RewardWeights& w) {
  json j = json::object();
  for (const auto& [name, field] : WeightFields()) j[name] = w.*field;
  return j;
}

RewardWeights RewardWeightsFromJson(const json& j, const RewardWeights& base) {
  RequireObject(j, "weights");
  RewardWeights w = base;
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (const auto& [name, field] : WeightFields()) {
      if (key == name) {
        w.*field = Get<double>(value, "weights." + key);
        found = true;
      }
    }
    if (!found) throw ConfigError("unknown reward weight '" + key + "'");
  }
  return w;
}

json ToJson(const ObsLayout& l) { return {{"privileged", l.privileged}, {"history", l.history}, {"goal", l.goal}}; }

ObsLayout ObsLayoutFromJson(const json& j, const ObsLayout& base) {
  RequireObject(j, "observation layout");
  ObsLayout l = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "privileged") l.privileged = Get<bool>(value, key);
    else if (key == "history") l.history = Get<int>(value, key);
    else if (key == "goal") l.goal = Get<bool>(value, key);
    else throw ConfigError("unknown observation layout key '" + key + "'");
  }
  if (l.history < 0) throw ConfigError("observation history must be >= 0");
  return l;
}

json ToJson(const EnvConfig& c) {
  return {{"mode", std::string(TrackingModeName(c.mode))},
          {"reset_period", c.reset_period},
          {"history_length", c.history_length},
          {"action_scale", c.action_scale},
          {"kp", c.kp},
          {"kd", c.kd},
          {"randomize", c.randomize},
          {"ranges",
           {{"friction_min", c.ranges.friction_min},
            {"friction_max", c.ranges.friction_max},
            {"motor_min", c.ranges.motor_min},
            {"motor_max", c.ranges.motor_max}}},
          {"privileged_physical_params", c.privileged_physical_params},
          {"command_latency", c.command_latency},
          {"latency_min_substeps", c.latency_min_substeps},
          {"latency_max_substeps", c.latency_max_substeps},
          {"weights", ToJson(c.weights)},
          {"contact_allowance_body_weights", c.contact_allowance_body_weights},
          {"norm", std::string(NormName(c.norm))},
          {"termination",
           {{"min_height_fraction", c.termination.min_height_fraction},
            {"max_tilt", c.termination.max_tilt},
            {"max_keypoint_error", c.termination.max_keypoint_error}}},
          {"max_episode_s", c.max_episode_s},
          {"only_positive_rewards", c.only_positive_rewards}};
}

EnvConfig EnvConfigFromJson(const json& j, const EnvConfig& base) {
  RequireObject(j, "env");
  EnvConfig c = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "mode") {
      const auto m = ParseTrackingMode(Get<std::string>(value, key));
      if (!m) throw ConfigError("unknown tracking mode '" + value.dump() + "'");
      c.mode = *m;
    } else if (key == "reset_period") {
      c.reset_period = Get<int>(value, key);
    } else if (key == "history_length") {
      c.history_length = Get<int>(value, key);
    } else if (key == "action_scale") {
      c.action_scale = Get<double>(value, key);
    } else if (key == "kp") {
      c.kp = Get<double>(value, key);
    } else if (key == "kd") {
      c.kd = Get<double>(value, key);
    } else if (key == "randomize") {
      c.randomize = Get<bool>(value, key);
    } else if (key == "ranges") {
      RequireObject(value, "env.ranges");
      for (const auto& [k, v] : value.items()) {
        if (k == "friction_min") c.ranges.friction_min = Get<double>(v, k);
        else if (k == "friction_max") c.ranges.friction_max = Get<double>(v, k);
        else if (k == "motor_min") c.ranges.motor_min = Get<double>(v, k);
        else if (k == "motor_max") c.ranges.motor_max = Get<double>(v, k);
        else throw ConfigError("unknown randomization key '" + k + "'");
      }
    } else if (key == "privileged_physical_params") {
      c.privileged_physical_params = Get<bool>(value, key);
    } else if (key == "command_latency") {
      c.command_latency = Get<bool>(value, key);
    } else if (key == "latency_min_substeps") {
      c.latency_min_substeps = Get<int>(value, key);
    } else if (key == "latency_max_substeps") {
      c.latency_max_substeps = Get<int>(value, key);
    } else if (key == "weights") {
      c.weights = RewardWeightsFromJson(value, c.weights);
    } else if (key == "contact_allowance_body_weights") {
      c.contact_allowance_body_weights = Get<double>(value, key);
    } else if (key == "norm") {
      c.norm = ParseNorm(Get<std::string>(value, key));
    } else if (key == "termination") {
      RequireObject(value, "env.termination");
      for (const auto& [k, v] : value.items()) {
        if (k == "min_height_fraction") c.termination.min_height_fraction = Get<double>(v, k);
        else if (k == "max_tilt") c.termination.max_tilt = Get<double>(v, k);
        else if (k == "max_keypoint_error") c.termination.max_keypoint_error = Get<double>(v, k);
        else throw ConfigError("unknown termination key '" + k + "'");
      }
    } else if (key == "max_episode_s") {
      c.max_episode_s = Get<double>(value, key);
    } else if (key == "only_positive_rewards") {
      c.only_positive_rewards = Get<bool>(value, key);
    } else {
      throw ConfigError("unknown env key '" + key + "'");
    }
  }
  c.Validate();
  return c;
}

}  // namespace wbt::env

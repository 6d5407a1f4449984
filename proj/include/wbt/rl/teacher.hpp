#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wbt/env/tracking_env.hpp"
#include "wbt/rl/policy.hpp"
#include "wbt/rl/ppo.hpp"

namespace wbt::rl {

struct TeacherConfig {
  env::EnvConfig env;
  PpoConfig ppo;
  int num_envs = 171;
  int updates = 1500;
  // Teacher: privileged + 5 proprio frames + goal for both networks. The
  // single-stage baseline drops the privileged block from the actor.
  env::ObsLayout actor{true, 5, true};
  env::ObsLayout critic{true, 5, true};
  std::vector<int> actor_hidden = {512, 256, 128};
  std::vector<int> critic_hidden = {512, 256, 128};
  nn::Activation activation = nn::Activation::kElu;
  double init_std = 0.8;

  void Validate() const;
  nlohmann::json ToJson() const;
  static TeacherConfig FromJson(const nlohmann::json& j, const TeacherConfig& base);
};

struct TeacherResult {
  std::unique_ptr<GaussianPolicy> policy;
  std::vector<UpdateStats> curve;
  std::vector<std::string> info_names;
};

/// Curve columns: step, env_steps, mean_reward, mean_episode_return,
/// mean_episode_length, value_loss, entropy, action_std, one column per
/// reward term, tracking, e_vel.
std::vector<std::string> TeacherCurveColumns();

/// PPO on `clips` (policy rate). Writes the checkpoint (with optimizer
/// moments) and curve when the paths are non-empty. On divergence the last
/// good parameters are written to the checkpoint path and DivergenceError is rethrown.
TeacherResult TrainTeacher(std::shared_ptr<const sim::HumanoidModel> model,
                           std::shared_ptr<const std::vector<motion::MotionClip>> clips, const TeacherConfig& cfg,
                           uint64_t seed, const std::string& checkpoint_path, const std::string& curve_path,
                           const std::function<void(const UpdateStats&)>& progress = {});

/// Metadata written next to a teacher checkpoint: model, env config, layouts.
nlohmann::json TeacherMetadata(const sim::HumanoidModel& model, const TeacherConfig& cfg, uint64_t seed);

}  // namespace wbt::rl

#include "wbt/rl/teacher.hpp"

#include "wbt/core/errors.hpp"
#include "wbt/env/config_json.hpp"
#include "wbt/rl/curve.hpp"

namespace wbt::rl {

void TeacherConfig::Validate() const {
  env.Validate();
  ppo.Validate();
  if (num_envs < 1) throw ConfigError("teacher.num_envs must be >= 1");
  if (updates < 0) throw ConfigError("teacher.updates must be >= 0");
  if (actor.history > env.history_length || critic.history > env.history_length) {
    throw ConfigError("observation history exceeds env.history_length");
  }
  if (!(init_std > 0.0)) throw ConfigError("teacher.init_std must be > 0");
}

nlohmann::json TeacherConfig::ToJson() const {
  return {{"env", env::ToJson(env)},
          {"ppo", ppo.ToJson()},
          {"num_envs", num_envs},
          {"updates", updates},
          {"actor", env::ToJson(actor)},
          {"critic", env::ToJson(critic)},
          {"actor_hidden", actor_hidden},
          {"critic_hidden", critic_hidden},
          {"activation", nn::ActivationName(activation)},
          {"init_std", init_std}};
}

TeacherConfig TeacherConfig::FromJson(const nlohmann::json& j, const TeacherConfig& base) {
  if (!j.is_object()) throw ConfigError("teacher config must be a JSON object");
  TeacherConfig c = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "env") c.env = env::EnvConfigFromJson(value, c.env);
      else if (key == "ppo") c.ppo = PpoConfig::FromJson(value, c.ppo);
      else if (key == "num_envs") c.num_envs = value.get<int>();
      else if (key == "updates") c.updates = value.get<int>();
      else if (key == "actor") c.actor = env::ObsLayoutFromJson(value, c.actor);
      else if (key == "critic") c.critic = env::ObsLayoutFromJson(value, c.critic);
      else if (key == "actor_hidden") c.actor_hidden = value.get<std::vector<int>>();
      else if (key == "critic_hidden") c.critic_hidden = value.get<std::vector<int>>();
      else if (key == "activation") c.activation = nn::ParseActivation(value.get<std::string>());
      else if (key == "init_std") c.init_std = value.get<double>();
      else throw ConfigError("unknown teacher key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("teacher config: ") + e.what());
  }
  c.Validate();
  return c;
}

std::vector<std::string> TeacherCurveColumns() {
  std::vector<std::string> cols = {"step",       "env_steps", "mean_reward", "mean_episode_return",
                                   "mean_episode_length", "value_loss", "entropy", "action_std"};
  for (auto name : env::kRewardTermNames) cols.emplace_back(name);
  cols.push_back("tracking");
  cols.push_back("e_vel");
  return cols;
}

nlohmann::json TeacherMetadata(const sim::HumanoidModel& model, const TeacherConfig& cfg, uint64_t seed) {
  return {{"kind", "teacher"},
          {"model", model.name()},
          {"seed", seed},
          {"env", env::ToJson(cfg.env)},
          {"actor_layout", env::ToJson(cfg.actor)},
          {"critic_layout", env::ToJson(cfg.critic)}};
}

TeacherResult TrainTeacher(std::shared_ptr<const sim::HumanoidModel> model,
                           std::shared_ptr<const std::vector<motion::MotionClip>> clips, const TeacherConfig& cfg,
                           uint64_t seed, const std::string& checkpoint_path, const std::string& curve_path,
                           const std::function<void(const UpdateStats&)>& progress) {
  cfg.Validate();
  env::TrackingVecEnv venv(model, clips, cfg.env, cfg.num_envs, env::DeriveSeed(seed, 1), cfg.actor, cfg.critic);
  PolicySpec spec;
  spec.actor_obs_dim = venv.actor_obs_dim();
  spec.critic_obs_dim = venv.critic_obs_dim();
  spec.action_dim = venv.action_dim();
  spec.actor_hidden = cfg.actor_hidden;
  spec.critic_hidden = cfg.critic_hidden;
  spec.activation = cfg.activation;
  spec.init_std = cfg.init_std;
  TeacherResult result;
  result.policy = std::make_unique<GaussianPolicy>(spec, env::DeriveSeed(seed, 2));
  GaussianPolicy& policy = *result.policy;
  PpoTrainer trainer(&venv, &policy, cfg.ppo, env::DeriveSeed(seed, 3));

  result.info_names = venv.info_names();
  CurveWriter curve(curve_path, TeacherCurveColumns());
  const nlohmann::json meta = TeacherMetadata(*model, cfg, seed);

  std::vector<MatX> good;
  RunningMeanStd good_actor = policy.actor_norm(), good_critic = policy.critic_norm();
  auto snapshot = [&] {
    good.clear();
    for (const auto& p : policy.store().params()) good.push_back(p.value());
    good_actor = policy.actor_norm();
    good_critic = policy.critic_norm();
  };
  snapshot();
  for (int u = 0; u < cfg.updates; ++u) {
    UpdateStats stats;
    try {
      stats = trainer.Iterate();
    } catch (const DivergenceError&) {
      if (!checkpoint_path.empty()) {
        for (size_t i = 0; i < good.size(); ++i) policy.store().params()[i].node()->value = good[i];
        policy.actor_norm() = good_actor;
        policy.critic_norm() = good_critic;
        nlohmann::json m = meta;
        m["diverged_at_update"] = u + 1;
        policy.Save(checkpoint_path, m, false);
      }
      throw;
    }
    snapshot();
    std::vector<double> row = {static_cast<double>(stats.update), static_cast<double>(stats.env_steps),
                               stats.mean_reward,  stats.mean_episode_return,
                               stats.mean_episode_length, stats.value_loss,
                               stats.entropy,      stats.action_std};
    for (int i = 0; i < env::kNumRewardTerms; ++i) row.push_back(stats.info_means[i]);
    row.push_back(stats.info_means[env::kNumRewardTerms + 1]);  // tracking
    row.push_back(stats.info_means[env::kNumRewardTerms + 2]);  // vel_error
    curve.Row(row);
    result.curve.push_back(stats);
    if (progress) progress(stats);
  }
  if (!checkpoint_path.empty()) {
    nlohmann::json m = meta;
    m["updates"] = cfg.updates;
    policy.Save(checkpoint_path, m, true);
  }
  return result;
}

}  // namespace wbt::rl

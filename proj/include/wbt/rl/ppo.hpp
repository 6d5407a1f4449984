#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wbt/rl/policy.hpp"
#include "wbt/rl/vec_env.hpp"

namespace wbt::rl {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double entropy_coef = 0.005;
  double value_coef = 1.0;
  int epochs = 5;
  int mini_batches = 4;
  double lr = 1e-4;
  double max_grad_norm = 1.0;
  int steps_per_env = 24;  // rollout horizon per update
  bool normalize_advantages = true;
  bool normalize_observations = true;
  bool scale_rewards = true;  // divide by the running std of discounted returns

  void Validate() const;
  nlohmann::json ToJson() const;
  /// Overrides fields of `base` with the keys present in `j`.
  static PpoConfig FromJson(const nlohmann::json& j, const PpoConfig& base);
};

/// Time-major (T x N) rollout storage; observations are stored normalized.
struct RolloutBuffer {
  int steps = 0;
  int envs = 0;
  std::vector<MatX> actor_obs;   // T entries of N x actor_dim
  std::vector<MatX> critic_obs;  // T entries of N x critic_dim
  std::vector<MatX> actions;     // T entries of N x A
  MatX log_probs, rewards, values, dones;  // T x N
  VecX last_values;                        // V(s_T), N
  MatX advantages, returns;                // filled by ComputeAdvantages

  void Reset(int steps, int envs);
  bool empty() const { return steps == 0 || envs == 0; }
};

/// Generalized advantage estimation over T x N arrays. `dones` marks steps
/// after which the episode does not continue (truncation bootstraps must
/// already be folded into the reward). Throws std::invalid_argument if empty.
void GaeAdvantages(const MatX& rewards, const MatX& values, const MatX& dones, const VecX& last_values,
                   double gamma, double lambda, MatX* advantages, MatX* returns);

struct MiniBatch {
  MatX actor_obs, critic_obs, actions;
  VecX old_log_probs, advantages, returns;
};

struct PpoLossParts {
  nn::Tensor total;
  nn::Tensor surrogate;  // mean clipped surrogate (to be maximized)
  nn::Tensor value_loss;
  nn::Tensor entropy;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// -surrogate + value_coef * value loss - entropy_coef * entropy.
PpoLossParts PpoLoss(const GaussianPolicy& policy, const MiniBatch& batch, const PpoConfig& cfg);

struct UpdateStats {
  long update = 0;
  long env_steps = 0;
  double mean_reward = 0.0;          // learning signal per env step, before scaling
  double mean_episode_return = std::numeric_limits<double>::quiet_NaN();
  double mean_episode_length = std::numeric_limits<double>::quiet_NaN();
  int episodes = 0;
  double surrogate = 0.0, value_loss = 0.0, entropy = 0.0, approx_kl = 0.0, clip_fraction = 0.0;
  double grad_norm = 0.0;
  double action_std = 0.0;
  VecX info_means;  // rollout means of the env info columns
};

/// Runs PPO iterations (collect, then update) on a vectorized environment.
class PpoTrainer {
 public:
  PpoTrainer(VecEnv* env, GaussianPolicy* policy, PpoConfig cfg, uint64_t seed);

  UpdateStats Iterate();
  const RolloutBuffer& buffer() const { return buffer_; }

 private:
  void Collect(UpdateStats* stats);
  void Update(UpdateStats* stats);

  VecEnv* env_;
  GaussianPolicy* policy_;
  PpoConfig cfg_;
  std::mt19937_64 rng_;
  RolloutBuffer buffer_;
  RewardScaler scaler_;
  MatX actor_obs_;
  MatX critic_obs_;
  VecX episode_return_;
  VecX episode_length_;
  long updates_ = 0;
  long env_steps_ = 0;
};

}  // namespace wbt::rl

#pragma once

#include <string>
#include <vector>

#include "wbt/core/math.hpp"

namespace wbt::rl {

/// Result of stepping every environment once. Environments that finish are
/// reset in place, so `actor_obs`/`critic_obs` already belong to the next episode.
struct VecStep {
  MatX actor_obs;
  MatX critic_obs;
  VecX rewards;
  std::vector<char> terminated;  // failure: no bootstrap
  std::vector<char> truncated;   // time limit: bootstrap from terminal_critic_obs
  MatX terminal_critic_obs;      // rows valid where truncated
  MatX info;                     // per-env diagnostics, columns named by info_names()
};

class VecEnv {
 public:
  virtual ~VecEnv() = default;
  virtual int num_envs() const = 0;
  virtual int actor_obs_dim() const = 0;
  virtual int critic_obs_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual std::vector<std::string> info_names() const { return {}; }

  virtual void Reset(MatX* actor_obs, MatX* critic_obs) = 0;
  virtual void Step(const MatX& actions, VecStep* out) = 0;
};

}  // namespace wbt::rl

#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <random>
#include <vector>

#include "wbt/env/observations.hpp"
#include "wbt/env/rewards.hpp"
#include "wbt/motion/motion_clip.hpp"
#include "wbt/rl/vec_env.hpp"
#include "wbt/sim/humanoid_model.hpp"
#include "wbt/sim/simulator.hpp"

namespace wbt::env {

struct EnvConfig {
  TrackingMode mode = TrackingMode::kLocalDecomposed;
  int reset_period = 100;  // policy steps between goal-origin snaps
  int history_length = 25;  // proprio frames kept
  double action_scale = 0.25;  // PD target = default pose + scale * action
  double kp = 40.0;
  double kd = 1.0;
  bool randomize = true;
  sim::RandomizationRanges ranges;
  bool privileged_physical_params = true;
  bool command_latency = false;
  int latency_min_substeps = 9;  // 18 ms at 500 Hz
  int latency_max_substeps = 15;
  RewardWeights weights;
  // Added to weights.contact_force_allowance in units of the robot's weight.
  double contact_allowance_body_weights = 1.0;
  NormType norm = NormType::kL2;
  TerminationConfig termination;
  double max_episode_s = 0.0;  // 0: run to the end of the clip
  // The learning signal is max(total, 0) so that ending an episode early never pays.
  bool only_positive_rewards = true;

  /// Throws ConfigError on invalid values.
  void Validate() const;
};

/// Observation blocks after a reset or step. History rows are oldest first,
/// zero-padded at episode start.
struct Observation {
  VecX privileged;
  VecX goal;
  MatX history;

  /// Last `h` history frames flattened oldest first; empty for h = 0.
  VecX Proprio(int h) const;
};

/// Quantities compared by the metrics, each in its own heading frame.
struct TraceFrame {
  Vec3 lin_vel = Vec3::Zero();
  VecX dof_pos;
  Keypoints keypoints = Keypoints::Zero();
};

TraceFrame RobotTraceFrame(const sim::HumanoidModel& model, const sim::SimState& state);
TraceFrame ReferenceTraceFrame(const motion::MotionFrame& frame);

struct StepResult {
  RewardBreakdown reward;
  bool terminated = false;
  bool truncated = false;
  TrackingErrors errors;
  TraceFrame robot;
  TraceFrame reference;
  int reference_index = 0;
};

/// One tracking environment: simulator, reference clip, goal origin, history.
class TrackingEnv {
 public:
  TrackingEnv(std::shared_ptr<const sim::HumanoidModel> model,
              std::shared_ptr<const std::vector<motion::MotionClip>> clips, EnvConfig config, uint64_t seed);

  /// Random clip and random start frame.
  void Reset();
  void ResetTo(int clip_index, int frame_index);

  /// Applies a raw action for one policy step. A non-finite or mis-sized
  /// action is rejected with std::invalid_argument and the state is unchanged.
  StepResult Step(const VecX& action);

  const Observation& observation() const { return obs_; }
  const sim::SimState& state() const { return state_; }
  const sim::PhysicalParams& params() const { return params_; }
  const sim::HumanoidModel& model() const { return *model_; }
  const EnvConfig& config() const { return config_; }
  const GoalOrigin& origin() const { return origin_; }
  int step_count() const { return steps_; }
  int clip_index() const { return clip_; }
  int horizon() const { return horizon_; }
  const motion::MotionClip& clip() const { return (*clips_)[clip_]; }

 private:
  const motion::MotionFrame& Reference(int offset) const;
  void BuildObservation();

  std::shared_ptr<const sim::HumanoidModel> model_;
  std::shared_ptr<const std::vector<motion::MotionClip>> clips_;
  EnvConfig config_;
  RewardWeights weights_;
  sim::PdGains gains_;
  std::mt19937_64 rng_;

  sim::SimState state_;
  sim::PhysicalParams params_;
  GoalOrigin origin_;
  Observation obs_;
  VecX last_action_;
  VecX current_target_;
  std::deque<std::pair<long, VecX>> pending_;  // (substep it takes effect, PD target)
  long substep_ = 0;
  int clip_ = 0;
  int start_ = 0;
  int steps_ = 0;
  int horizon_ = 0;
  int latency_ = 0;
};

/// Which observation blocks a policy consumes.
struct ObsLayout {
  bool privileged = true;
  int history = 5;
  bool goal = true;

  int Dim(int num_joints, bool with_physical_params) const;
  VecX Build(const Observation& obs) const;
};

/// N independent tracking environments behind the generic RL interface.
/// Foot forces entering the reward are averaged over the policy step.
/// Info columns: the reward terms, then total, tracking, vel_error.
class TrackingVecEnv : public rl::VecEnv {
 public:
  TrackingVecEnv(std::shared_ptr<const sim::HumanoidModel> model,
                 std::shared_ptr<const std::vector<motion::MotionClip>> clips, const EnvConfig& config,
                 int num_envs, uint64_t seed, ObsLayout actor, ObsLayout critic);

  int num_envs() const override { return static_cast<int>(envs_.size()); }
  int actor_obs_dim() const override;
  int critic_obs_dim() const override;
  int action_dim() const override { return model_->num_joints(); }
  std::vector<std::string> info_names() const override;

  void Reset(MatX* actor_obs, MatX* critic_obs) override;
  void Step(const MatX& actions, rl::VecStep* out) override;

  TrackingEnv& env(int i) { return envs_[i]; }

 private:
  std::shared_ptr<const sim::HumanoidModel> model_;
  std::vector<TrackingEnv> envs_;
  ObsLayout actor_;
  ObsLayout critic_;
  bool with_params_;
  bool only_positive_;
};

/// Per-instance RNG seed derived from a global seed and an index.
uint64_t DeriveSeed(uint64_t seed, uint64_t index);

/// Clips resampled to the policy rate.
std::vector<motion::MotionClip> ToPolicyRate(const std::vector<motion::MotionClip>& clips);

}  // namespace wbt::env

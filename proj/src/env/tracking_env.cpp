#include "wbt/env/tracking_env.hpp"

#include <cmath>

#include "wbt/core/errors.hpp"
#include "wbt/sim/kinematics.hpp"

namespace wbt::env {

void EnvConfig::Validate() const {
  if (reset_period < 1) throw ConfigError("reset_period must be at least 1");
  if (history_length < 0) throw ConfigError("history_length must be non-negative");
  if (!(action_scale > 0)) throw ConfigError("action_scale must be positive");
  if (!(kp >= 0) || !(kd >= 0)) throw ConfigError("PD gains must be non-negative");
  if (latency_min_substeps < 0 || latency_max_substeps < latency_min_substeps) {
    throw ConfigError("invalid command latency range");
  }
  if (!(max_episode_s >= 0)) throw ConfigError("max_episode_s must be non-negative");
  if (!(contact_allowance_body_weights >= 0)) throw ConfigError("contact allowance must be non-negative");
  ranges.Validate();
}

VecX Observation::Proprio(int h) const {
  if (h > history.rows()) {
    throw std::invalid_argument("requested " + std::to_string(h) + " history frames, only " +
                                std::to_string(history.rows()) + " kept");
  }
  VecX out(h * history.cols());
  for (int r = 0; r < h; ++r) out.segment(r * history.cols(), history.cols()) = history.row(history.rows() - h + r);
  return out;
}

TraceFrame RobotTraceFrame(const sim::HumanoidModel& model, const sim::SimState& state) {
  return {RotZ(-state.yaw()) * state.root_lin_vel, state.dof_pos, sim::KeypointPositions(model, state)};
}

TraceFrame ReferenceTraceFrame(const motion::MotionFrame& frame) {
  return {RotZ(-frame.yaw()) * frame.root_lin_vel, frame.dof_pos, frame.keypoints_local};
}

TrackingEnv::TrackingEnv(std::shared_ptr<const sim::HumanoidModel> model,
                         std::shared_ptr<const std::vector<motion::MotionClip>> clips, EnvConfig config,
                         uint64_t seed)
    : model_(std::move(model)), clips_(std::move(clips)), config_(std::move(config)), rng_(seed) {
  config_.Validate();
  if (!clips_ || clips_->empty()) throw DataError("tracking environment needs at least one clip");
  for (const auto& c : *clips_) {
    motion::ValidateClip(c);
    if (c.num_dofs() != model_->num_joints()) {
      throw DataError("clip '" + c.name + "' has " + std::to_string(c.num_dofs()) + " dofs, model '" +
                      model_->name() + "' has " + std::to_string(model_->num_joints()));
    }
  }
  weights_ = config_.weights;
  weights_.contact_force_allowance += config_.contact_allowance_body_weights * model_->total_mass() * kGravity;
  gains_ = sim::PdGains::Uniform(model_->num_joints(), config_.kp, config_.kd);
  Reset();
}

void TrackingEnv::Reset() {
  const int c = std::uniform_int_distribution<int>(0, static_cast<int>(clips_->size()) - 1)(rng_);
  const int n = (*clips_)[c].num_frames();
  const int f = std::uniform_int_distribution<int>(0, n - 2)(rng_);
  ResetTo(c, f);
}

void TrackingEnv::ResetTo(int clip_index, int frame_index) {
  if (clip_index < 0 || clip_index >= static_cast<int>(clips_->size())) throw std::out_of_range("clip index");
  const motion::MotionClip& clip = (*clips_)[clip_index];
  if (frame_index < 0 || frame_index >= clip.num_frames() - 1) throw std::out_of_range("start frame");
  clip_ = clip_index;
  start_ = frame_index;
  steps_ = 0;
  horizon_ = clip.num_frames() - frame_index;
  if (config_.max_episode_s > 0) {
    horizon_ = std::min(horizon_, std::max(1, static_cast<int>(std::lround(config_.max_episode_s / sim::kPolicyDt))));
  }

  params_ = config_.randomize ? sim::RandomizeParams(*model_, rng_(), config_.ranges) : sim::DefaultParams(*model_);
  const int a = std::max(frame_index - 1, 0);
  const int b = frame_index + 1;
  const VecX dof_vel = (clip.frames[b].dof_pos - clip.frames[a].dof_pos) / ((b - a) * clip.dt());
  state_ = sim::ResetToFrame(*model_, clip.frames[frame_index], params_, &dof_vel);
  origin_ = SnapOrigin(state_, clip.frames[frame_index]);

  latency_ = 0;
  if (config_.command_latency) {
    latency_ = std::uniform_int_distribution<int>(config_.latency_min_substeps, config_.latency_max_substeps)(rng_);
  }
  pending_.clear();
  substep_ = 0;
  current_target_ = state_.dof_pos;
  last_action_ = VecX::Zero(model_->num_joints());

  const int frame_dim = ProprioFrameDim(model_->num_joints());
  obs_.history = MatX::Zero(config_.history_length, frame_dim);
  if (config_.history_length > 0) obs_.history.bottomRows(1) = ProprioFrame(state_, last_action_).transpose();
  BuildObservation();
}

const motion::MotionFrame& TrackingEnv::Reference(int offset) const {
  const motion::MotionClip& c = clip();
  return c.frames[std::min(start_ + offset, c.num_frames() - 1)];
}

void TrackingEnv::BuildObservation() {
  const WorldGoal goal = MakeWorldGoal(*model_, Reference(steps_ + 1), origin_, config_.mode);
  obs_.goal = GoalVector(*model_, goal, state_);
  obs_.privileged = PrivilegedVector(*model_, goal, state_, params_, config_.privileged_physical_params);
}

StepResult TrackingEnv::Step(const VecX& action) {
  const int nj = model_->num_joints();
  if (action.size() != nj) {
    throw std::invalid_argument("action has " + std::to_string(action.size()) + " entries, expected " +
                                std::to_string(nj));
  }
  if (!action.allFinite()) throw std::invalid_argument("action contains non-finite values");

  const VecX target = model_->default_pose() + config_.action_scale * action;
  pending_.emplace_back(substep_ + latency_, target);

  RegularizationInputs reg;
  sim::SimState next = state_;
  for (int s = 0; s < sim::kDecimation; ++s) {
    while (!pending_.empty() && pending_.front().first <= substep_) {
      current_target_ = pending_.front().second;
      pending_.pop_front();
    }
    const VecX tau = sim::PdTorques(*model_, params_, next, current_target_, gains_);
    next = sim::Step(*model_, params_, next, tau, sim::kSimDt);
    ++substep_;
    for (int f = 0; f < 2; ++f) {
      reg.foot_force[f] += next.feet[f].force / sim::kDecimation;
      if (next.feet[f].touchdown) reg.touchdown_air_times.push_back(next.feet[f].touchdown_air_time);
    }
  }

  ++steps_;
  const motion::MotionFrame& ref = Reference(steps_);
  if (config_.mode != TrackingMode::kGlobal) {
    origin_ = DelayedResetUpdate(origin_, next, ref, config_.reset_period);
  }
  const WorldGoal goal = MakeWorldGoal(*model_, ref, origin_, config_.mode);

  StepResult result;
  result.errors = ComputeTrackingErrors(*model_, next, goal, config_.mode);
  TrackingReward(result.errors, weights_, config_.norm, &result.reward);

  const sim::KinematicsResult kin = sim::ForwardKinematics(*model_, next.root_pos, next.root_quat, next.dof_pos);
  reg.dof_pos = next.dof_pos;
  reg.dof_vel = next.dof_vel;
  reg.prev_dof_vel = state_.dof_vel;
  reg.torques = next.last_torques;
  reg.action = action;
  reg.prev_action = last_action_;
  reg.root_lin_vel = next.root_lin_vel;
  reg.root_ang_vel_body = next.root_quat.conjugate() * next.root_ang_vel;
  for (int f = 0; f < 2; ++f) {
    const sim::FootSpec& foot = model_->feet()[f];
    reg.foot_contact[f] = next.feet[f].contact;
    reg.foot_velocity[f] = sim::PointVelocity(*model_, kin, foot.link, sim::SoleCenter(foot, kin), next.root_pos,
                                              next.root_lin_vel, next.root_ang_vel, next.dof_vel);
  }
  RegularizationReward(*model_, reg, weights_, &result.reward);

  result.terminated = TerminateCheck(*model_, next, result.errors, config_.termination);
  result.truncated = !result.terminated && steps_ >= horizon_;
  result.robot = RobotTraceFrame(*model_, next);
  result.reference = ReferenceTraceFrame(ref);
  result.reference_index = std::min(start_ + steps_, clip().num_frames() - 1);

  state_ = std::move(next);
  last_action_ = action;
  if (config_.history_length > 0) {
    const int h = config_.history_length;
    if (h > 1) obs_.history.topRows(h - 1) = obs_.history.bottomRows(h - 1).eval();
    obs_.history.bottomRows(1) = ProprioFrame(state_, last_action_).transpose();
  }
  BuildObservation();
  return result;
}

int ObsLayout::Dim(int num_joints, bool with_physical_params) const {
  return (privileged ? PrivilegedDim(num_joints, with_physical_params) : 0) + history * ProprioFrameDim(num_joints) +
         (goal ? GoalDim(num_joints) : 0);
}

VecX ObsLayout::Build(const Observation& obs) const {
  const VecX proprio = obs.Proprio(history);
  VecX out((privileged ? obs.privileged.size() : 0) + proprio.size() + (goal ? obs.goal.size() : 0));
  int at = 0;
  if (privileged) {
    out.segment(at, obs.privileged.size()) = obs.privileged;
    at += obs.privileged.size();
  }
  out.segment(at, proprio.size()) = proprio;
  at += proprio.size();
  if (goal) out.segment(at, obs.goal.size()) = obs.goal;
  return out;
}

TrackingVecEnv::TrackingVecEnv(std::shared_ptr<const sim::HumanoidModel> model,
                               std::shared_ptr<const std::vector<motion::MotionClip>> clips,
                               const EnvConfig& config, int num_envs, uint64_t seed, ObsLayout actor,
                               ObsLayout critic)
    : model_(model),
      actor_(actor),
      critic_(critic),
      with_params_(config.privileged_physical_params),
      only_positive_(config.only_positive_rewards) {
  if (num_envs < 1) throw ConfigError("num_envs must be at least 1");
  const int needed = std::max(actor.history, critic.history);
  if (config.history_length < needed) {
    throw ConfigError("env history_length " + std::to_string(config.history_length) + " shorter than the " +
                      std::to_string(needed) + " frames a policy consumes");
  }
  envs_.reserve(num_envs);
  for (int i = 0; i < num_envs; ++i) envs_.emplace_back(model, clips, config, DeriveSeed(seed, i));
}

int TrackingVecEnv::actor_obs_dim() const { return actor_.Dim(model_->num_joints(), with_params_); }
int TrackingVecEnv::critic_obs_dim() const { return critic_.Dim(model_->num_joints(), with_params_); }

std::vector<std::string> TrackingVecEnv::info_names() const {
  std::vector<std::string> names(kRewardTermNames.begin(), kRewardTermNames.end());
  names.insert(names.end(), {"total", "tracking", "vel_error"});
  return names;
}

void TrackingVecEnv::Reset(MatX* actor_obs, MatX* critic_obs) {
  actor_obs->resize(num_envs(), actor_obs_dim());
  critic_obs->resize(num_envs(), critic_obs_dim());
  for (int i = 0; i < num_envs(); ++i) {
    envs_[i].Reset();
    actor_obs->row(i) = actor_.Build(envs_[i].observation()).transpose();
    critic_obs->row(i) = critic_.Build(envs_[i].observation()).transpose();
  }
}

void TrackingVecEnv::Step(const MatX& actions, rl::VecStep* out) {
  const int n = num_envs();
  out->actor_obs.resize(n, actor_obs_dim());
  out->critic_obs.resize(n, critic_obs_dim());
  out->terminal_critic_obs.setZero(n, critic_obs_dim());
  out->rewards.resize(n);
  out->terminated.assign(n, 0);
  out->truncated.assign(n, 0);
  out->info.resize(n, kNumRewardTerms + 3);
  for (int i = 0; i < n; ++i) {
    TrackingEnv& env = envs_[i];
    const StepResult r = env.Step(actions.row(i).transpose());
    out->rewards[i] = only_positive_ ? std::max(0.0, r.reward.total()) : r.reward.total();
    for (int t = 0; t < kNumRewardTerms; ++t) out->info(i, t) = r.reward.terms[t];
    out->info(i, kNumRewardTerms) = r.reward.total();
    out->info(i, kNumRewardTerms + 1) = r.reward.tracking();
    out->info(i, kNumRewardTerms + 2) = (r.errors.lin_vel_ref - r.errors.lin_vel).norm();
    out->terminated[i] = r.terminated;
    out->truncated[i] = r.truncated;
    if (r.truncated) out->terminal_critic_obs.row(i) = critic_.Build(env.observation()).transpose();
    if (r.terminated || r.truncated) env.Reset();
    out->actor_obs.row(i) = actor_.Build(env.observation()).transpose();
    out->critic_obs.row(i) = critic_.Build(env.observation()).transpose();
  }
}

uint64_t DeriveSeed(uint64_t seed, uint64_t index) {
  // splitmix64 finalizer over the combined value.
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<motion::MotionClip> ToPolicyRate(const std::vector<motion::MotionClip>& clips) {
  std::vector<motion::MotionClip> out;
  out.reserve(clips.size());
  const double rate = 1.0 / sim::kPolicyDt;
  for (const auto& c : clips) out.push_back(std::abs(c.fps - rate) < 1e-9 ? c : motion::ResampleClip(c, rate));
  return out;
}

}  // namespace wbt::env

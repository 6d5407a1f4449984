#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "wbt/core/math.hpp"
#include "wbt/sim/humanoid_model.hpp"
#include "wbt/sim/simulator.hpp"

namespace wbt::env {

enum class NormType { kL2, kL1, kMean };

inline constexpr int kNumTrackingTerms = 6;
inline constexpr int kNumRegularizationTerms = 14;
inline constexpr int kNumRewardTerms = kNumTrackingTerms + kNumRegularizationTerms;

inline constexpr std::array<std::string_view, kNumRewardTerms> kRewardTermNames = {
    "dof_pos",       "keypoint_pos", "lin_vel",    "vel_direction", "roll_pitch",
    "yaw",           "dof_limits",   "dof_acc",    "dof_error",     "energy",
    "lin_vel_z",     "ang_vel_xy",   "action_rate", "feet_air_time", "feet_velocity",
    "contact_force", "stumble",      "hip_pos",    "waist_roll_pitch", "ankle_action"};

struct RewardWeights {
  // Tracking: weight * exp(-scale * error).
  double dof_pos = 3.0, dof_pos_scale = 0.7;
  double keypoint_pos = 2.0, keypoint_pos_scale = 1.0;
  double lin_vel = 6.0, lin_vel_scale = 4.0;
  double vel_direction = 6.0, vel_direction_scale = 4.0;
  double roll_pitch = 1.0, roll_pitch_scale = 1.0;
  double yaw = 1.0, yaw_scale = 1.0;
  double direction_min_speed = 0.05;
  // Regularization.
  double dof_limits = -10.0;
  double dof_acc = -3e-7;
  double dof_error = -0.5;
  double energy = -0.001;
  double lin_vel_z = -1.0;
  double ang_vel_xy = -0.4;
  double action_rate = -0.1;
  double feet_air_time = 10.0;
  double air_time_target = 0.5;
  double feet_velocity = -0.1;
  double contact_force = -0.003;
  // Per-foot force magnitude that goes unpenalized; 0 gives the plain ||F||^2.
  double contact_force_allowance = 0.0;
  double stumble = -2.0;
  double stumble_ratio = 5.0;
  double hip_pos = -0.2;
  double waist_roll_pitch = -1.0;
  double ankle_action = -0.1;

  double TrackingMax() const { return dof_pos + keypoint_pos + lin_vel + vel_direction + roll_pitch + yaw; }
};

struct RewardBreakdown {
  std::array<double, kNumRewardTerms> terms{};

  double tracking() const;
  double regularization() const;
  double total() const;
  double term(std::string_view name) const;
};

/// Tracking errors between robot and goal, in the robot heading frame.
/// Untracked entries of `dof` and `keypoints` are left out by the caller.
struct TrackingErrors {
  VecX dof;        // q_ref - q
  VecX keypoints;  // flattened p_ref - p
  Vec3 lin_vel_ref = Vec3::Zero();
  Vec3 lin_vel = Vec3::Zero();
  Eigen::Vector2d roll_pitch = Eigen::Vector2d::Zero();  // reference minus robot
  double yaw = 0.0;                                      // reference minus robot
};

double VectorNorm(const VecX& v, NormType norm);

/// Fills the six tracking terms of `out`. Throws std::invalid_argument on
/// non-finite errors.
void TrackingReward(const TrackingErrors& e, const RewardWeights& w, NormType norm, RewardBreakdown* out);

struct RegularizationInputs {
  VecX dof_pos, dof_vel, prev_dof_vel, torques;
  VecX action, prev_action;  // raw policy outputs
  Vec3 root_lin_vel = Vec3::Zero();  // world
  Vec3 root_ang_vel_body = Vec3::Zero();
  std::array<Vec3, 2> foot_force{Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 2> foot_velocity{Vec3::Zero(), Vec3::Zero()};
  std::array<bool, 2> foot_contact{false, false};
  std::vector<double> touchdown_air_times;  // one entry per touchdown during the step
  double dt = sim::kPolicyDt;
};

/// Fills the fourteen regularization terms of `out`.
void RegularizationReward(const sim::HumanoidModel& model, const RegularizationInputs& in,
                          const RewardWeights& w, RewardBreakdown* out);

}  // namespace wbt::env

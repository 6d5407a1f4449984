#pragma once

#include <optional>
#include <string_view>

#include "wbt/env/rewards.hpp"
#include "wbt/motion/motion_clip.hpp"
#include "wbt/sim/humanoid_model.hpp"
#include "wbt/sim/simulator.hpp"

namespace wbt::env {

enum class TrackingMode { kLocalDecomposed, kGlobal, kUpperBodyOnly };

std::string_view TrackingModeName(TrackingMode mode);
std::optional<TrackingMode> ParseTrackingMode(std::string_view name);

/// dof_pos, dof_vel, last_action (J each), base angular velocity, roll, pitch, yaw.
inline int ProprioFrameDim(int num_joints) { return 3 * num_joints + 6; }
/// dof difference (J), keypoint difference (36), root linear and angular velocity;
/// optionally friction and per-joint motor scales.
inline int PrivilegedDim(int num_joints, bool with_physical_params) {
  return num_joints + 42 + (with_physical_params ? 1 + num_joints : 0);
}
/// dof_pos (J), keypoints (36), linear and angular velocity, roll, pitch, yaw delta, height.
inline int GoalDim(int num_joints) { return num_joints + 46; }

/// Frame the reference is replayed from. The reference root at `anchor` is
/// placed at `origin`; the counter drives the periodic snap to the robot.
struct GoalOrigin {
  Vec3 origin_pos = Vec3::Zero();
  double origin_yaw = 0.0;
  Vec3 anchor_pos = Vec3::Zero();
  double anchor_yaw = 0.0;
  int steps_since_reset = 0;
};

/// Places the reference root exactly on the robot.
GoalOrigin SnapOrigin(const sim::SimState& robot, const motion::MotionFrame& reference);

/// Counts one policy step; once the count reaches `reset_period` the origin is
/// snapped to the robot and the count cleared. Period 1 snaps every step.
GoalOrigin DelayedResetUpdate(const GoalOrigin& origin, const sim::SimState& robot,
                              const motion::MotionFrame& reference, int reset_period);

/// Tracking target in world coordinates.
struct WorldGoal {
  VecX dof_pos;
  Vec3 root_pos = Vec3::Zero();
  double roll = 0.0, pitch = 0.0, yaw = 0.0;
  Vec3 lin_vel = Vec3::Zero();
  Vec3 ang_vel = Vec3::Zero();
  Keypoints keypoints = Keypoints::Zero();
  double height = 0.0;
};

/// Replays `reference` through `origin`. In upper-body mode the lower joints
/// and lower keypoints are replaced by the default pose, leaving only root
/// movement as the lower-body target.
WorldGoal MakeWorldGoal(const sim::HumanoidModel& model, const motion::MotionFrame& reference,
                        const GoalOrigin& origin, TrackingMode mode);

/// Goal vector relative to the robot: keypoints in the robot heading frame
/// about the robot root, velocities rotated into that frame, yaw as a wrapped delta.
VecX GoalVector(const sim::HumanoidModel& model, const WorldGoal& goal, const sim::SimState& robot);

VecX ProprioFrame(const sim::SimState& robot, const VecX& last_action);

VecX PrivilegedVector(const sim::HumanoidModel& model, const WorldGoal& goal, const sim::SimState& robot,
                      const sim::PhysicalParams& params, bool with_physical_params);

/// Errors feeding the tracking reward. Upper-body mode keeps only upper joints
/// and upper keypoints.
TrackingErrors ComputeTrackingErrors(const sim::HumanoidModel& model, const sim::SimState& robot,
                                     const WorldGoal& goal, TrackingMode mode);

/// Goal keypoints relative to the robot root, in the robot heading frame.
Keypoints GoalKeypointsLocal(const WorldGoal& goal, const sim::SimState& robot);

struct TerminationConfig {
  double min_height_fraction = 0.3;  // of the model's nominal height
  double max_tilt = 1.0;             // rad, roll or pitch
  double max_keypoint_error = 1.0;   // m, worst single keypoint
};

/// Strict inequalities: a value exactly at a threshold does not terminate.
bool TerminateCheck(const sim::HumanoidModel& model, const sim::SimState& robot, const TrackingErrors& errors,
                    const TerminationConfig& config);

}  // namespace wbt::env

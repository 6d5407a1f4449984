#include "wbt/env/observations.hpp"

#include <cmath>

#include "wbt/sim/kinematics.hpp"

namespace wbt::env {
namespace {

constexpr std::pair<TrackingMode, std::string_view> kModeNames[] = {
    {TrackingMode::kLocalDecomposed, "local_decomposed"},
    {TrackingMode::kGlobal, "global"},
    {TrackingMode::kUpperBodyOnly, "upper_body_only"},
};

}  // namespace

std::string_view TrackingModeName(TrackingMode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

std::optional<TrackingMode> ParseTrackingMode(std::string_view name) {
  for (const auto& [m, n] : kModeNames) {
    if (n == name) return m;
  }
  return std::nullopt;
}

GoalOrigin SnapOrigin(const sim::SimState& robot, const motion::MotionFrame& reference) {
  GoalOrigin o;
  o.origin_pos = robot.root_pos;
  o.origin_yaw = robot.yaw();
  o.anchor_pos = reference.root_pos;
  o.anchor_yaw = reference.yaw();
  return o;
}

GoalOrigin DelayedResetUpdate(const GoalOrigin& origin, const sim::SimState& robot,
                              const motion::MotionFrame& reference, int reset_period) {
  GoalOrigin next = origin;
  next.steps_since_reset += 1;
  if (next.steps_since_reset >= reset_period) next = SnapOrigin(robot, reference);
  return next;
}

WorldGoal MakeWorldGoal(const sim::HumanoidModel& model, const motion::MotionFrame& reference,
                        const GoalOrigin& origin, TrackingMode mode) {
  const double dyaw = origin.origin_yaw - origin.anchor_yaw;
  const Mat3 rot = RotZ(dyaw);
  const Vec3 rpy = reference.rpy();
  WorldGoal g;
  g.dof_pos = reference.dof_pos;
  g.root_pos = origin.origin_pos + rot * (reference.root_pos - origin.anchor_pos);
  g.roll = rpy[0];
  g.pitch = rpy[1];
  g.yaw = WrapAngle(rpy[2] + dyaw);
  g.lin_vel = rot * reference.root_lin_vel;
  g.ang_vel = rot * reference.root_ang_vel;
  g.height = reference.height;
  Keypoints local = reference.keypoints_local;
  if (mode == TrackingMode::kUpperBodyOnly) {
    for (int j : model.lower_joints()) g.dof_pos[j] = model.default_pose()[j];
    const Keypoints rest = sim::HeadingLocalKeypoints(model, Vec3::Zero(), Quat::Identity(), model.default_pose());
    local.bottomRows<kNumKeypoints - kNumUpperKeypoints>() = rest.bottomRows<kNumKeypoints - kNumUpperKeypoints>();
  }
  const Mat3 heading = RotZ(g.yaw);
  for (int k = 0; k < kNumKeypoints; ++k) {
    g.keypoints.row(k) = (g.root_pos + heading * local.row(k).transpose()).transpose();
  }
  return g;
}

Keypoints GoalKeypointsLocal(const WorldGoal& goal, const sim::SimState& robot) {
  const Mat3 inv = RotZ(-robot.yaw());
  Keypoints out;
  for (int k = 0; k < kNumKeypoints; ++k) {
    out.row(k) = (inv * (goal.keypoints.row(k).transpose() - robot.root_pos)).transpose();
  }
  return out;
}

VecX GoalVector(const sim::HumanoidModel& model, const WorldGoal& goal, const sim::SimState& robot) {
  const int nj = model.num_joints();
  const double yaw = robot.yaw();
  const Mat3 inv = RotZ(-yaw);
  VecX g(GoalDim(nj));
  g.head(nj) = goal.dof_pos;
  g.segment(nj, 36) = FlattenKeypoints(GoalKeypointsLocal(goal, robot));
  g.segment<3>(nj + 36) = inv * goal.lin_vel;
  g.segment<3>(nj + 39) = inv * goal.ang_vel;
  g[nj + 42] = goal.roll;
  g[nj + 43] = goal.pitch;
  g[nj + 44] = WrapAngle(goal.yaw - yaw);
  g[nj + 45] = goal.height;
  return g;
}

VecX ProprioFrame(const sim::SimState& robot, const VecX& last_action) {
  const int nj = static_cast<int>(robot.dof_pos.size());
  VecX o(ProprioFrameDim(nj));
  o.head(nj) = robot.dof_pos;
  o.segment(nj, nj) = robot.dof_vel;
  o.segment(2 * nj, nj) = last_action;
  o.segment<3>(3 * nj) = robot.root_quat.conjugate() * robot.root_ang_vel;
  o.tail<3>() = robot.rpy();
  return o;
}

VecX PrivilegedVector(const sim::HumanoidModel& model, const WorldGoal& goal, const sim::SimState& robot,
                      const sim::PhysicalParams& params, bool with_physical_params) {
  const int nj = model.num_joints();
  const Mat3 inv = RotZ(-robot.yaw());
  VecX p(PrivilegedDim(nj, with_physical_params));
  p.head(nj) = goal.dof_pos - robot.dof_pos;
  p.segment(nj, 36) = FlattenKeypoints(GoalKeypointsLocal(goal, robot) - sim::KeypointPositions(model, robot));
  p.segment<3>(nj + 36) = inv * robot.root_lin_vel;
  p.segment<3>(nj + 39) = robot.root_quat.conjugate() * robot.root_ang_vel;
  if (with_physical_params) {
    p[nj + 42] = params.friction;
    p.tail(nj) = params.motor_scale;
  }
  return p;
}

TrackingErrors ComputeTrackingErrors(const sim::HumanoidModel& model, const sim::SimState& robot,
                                     const WorldGoal& goal, TrackingMode mode) {
  TrackingErrors e;
  const Keypoints kp_err = GoalKeypointsLocal(goal, robot) - sim::KeypointPositions(model, robot);
  const VecX dof_err = goal.dof_pos - robot.dof_pos;
  if (mode == TrackingMode::kUpperBodyOnly) {
    const auto& upper = model.upper_joints();
    e.dof.resize(upper.size());
    for (size_t i = 0; i < upper.size(); ++i) e.dof[i] = dof_err[upper[i]];
    e.keypoints = FlattenKeypoints(kp_err).head(3 * kNumUpperKeypoints);
  } else {
    e.dof = dof_err;
    e.keypoints = FlattenKeypoints(kp_err);
  }
  const double yaw = robot.yaw();
  const Mat3 inv = RotZ(-yaw);
  e.lin_vel_ref = inv * goal.lin_vel;
  e.lin_vel = inv * robot.root_lin_vel;
  const Vec3 rpy = robot.rpy();
  e.roll_pitch = Eigen::Vector2d(goal.roll - rpy[0], goal.pitch - rpy[1]);
  e.yaw = WrapAngle(goal.yaw - yaw);
  return e;
}

bool TerminateCheck(const sim::HumanoidModel& model, const sim::SimState& robot, const TrackingErrors& errors,
                    const TerminationConfig& config) {
  if (robot.root_pos.z() < config.min_height_fraction * model.nominal_height()) return true;
  const Vec3 rpy = robot.rpy();
  if (std::abs(rpy[0]) > config.max_tilt || std::abs(rpy[1]) > config.max_tilt) return true;
  for (int k = 0; k < errors.keypoints.size() / 3; ++k) {
    if (errors.keypoints.segment<3>(3 * k).norm() > config.max_keypoint_error) return true;
  }
  return false;
}

}  // namespace wbt::env

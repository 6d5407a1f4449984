#pragma once

#include <string>
#include <vector>

#include "wbt/core/math.hpp"

namespace wbt::motion {

/// One reference frame. Keypoints are root-relative, in the heading (yaw-only)
/// frame of the root. Velocities are world-frame.
struct MotionFrame {
  Vec3 root_pos = Vec3::Zero();
  Quat root_quat = Quat::Identity();
  Vec3 root_lin_vel = Vec3::Zero();
  Vec3 root_ang_vel = Vec3::Zero();
  VecX dof_pos;
  Keypoints keypoints_local = Keypoints::Zero();
  double height = 0.0;

  int num_dofs() const { return static_cast<int>(dof_pos.size()); }
  double yaw() const { return YawFromQuat(root_quat); }
  Vec3 rpy() const { return RpyFromQuat(root_quat); }
};

struct MotionClip {
  double fps = 50.0;
  std::vector<MotionFrame> frames;
  std::string name;
  std::vector<std::string> tags;

  int num_frames() const { return static_cast<int>(frames.size()); }
  int num_dofs() const { return frames.empty() ? 0 : frames.front().num_dofs(); }
  double dt() const { return 1.0 / fps; }
  double duration() const { return (num_frames() - 1) / fps; }
};

/// Throws DataError when fps <= 0, fewer than two frames, mixed dof counts, or
/// a quaternion norm more than 1e-6 away from one.
void ValidateClip(const MotionClip& clip);

/// Recomputes root linear/angular velocities by central differences (one-sided
/// at the ends).
void ReconstructLinearVelocities(MotionClip& clip);
void ReconstructAngularVelocities(MotionClip& clip);

/// Resamples to `target_fps` with linear interpolation of vectors and slerp of
/// orientations. Duration is preserved to within one output frame period.
MotionClip ResampleClip(const MotionClip& clip, double target_fps);

/// Re-expresses a frame in the yaw-aligned frame of a robot at
/// (robot_root_pos, robot_yaw). Positions are translated and rotated, vectors
/// rotated, root-relative keypoints only rotated. The resulting orientation
/// keeps roll and pitch and carries the wrapped yaw difference.
MotionFrame ToLocalFrame(const MotionFrame& frame, const Vec3& robot_root_pos, double robot_yaw);

/// Interpolated frame at fractional index `index` (clamped to the clip).
MotionFrame SampleFrame(const MotionClip& clip, double index);

}  // namespace wbt::motion

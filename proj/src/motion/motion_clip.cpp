#include "wbt/motion/motion_clip.hpp"

#include <cmath>

#include "wbt/core/errors.hpp"

namespace wbt::motion {

void ValidateClip(const MotionClip& clip) {
  if (!(clip.fps > 0)) throw DataError("clip '" + clip.name + "': fps must be positive");
  if (clip.num_frames() < 2) throw DataError("clip '" + clip.name + "': needs at least 2 frames");
  const int j = clip.num_dofs();
  for (int i = 0; i < clip.num_frames(); ++i) {
    const MotionFrame& f = clip.frames[i];
    if (f.num_dofs() != j) {
      throw DataError("clip '" + clip.name + "': frame " + std::to_string(i) + " has " +
                      std::to_string(f.num_dofs()) + " dofs, expected " + std::to_string(j));
    }
    if (std::abs(f.root_quat.norm() - 1.0) > 1e-6) {
      throw DataError("clip '" + clip.name + "': frame " + std::to_string(i) + " quaternion is not unit");
    }
  }
}

void ReconstructLinearVelocities(MotionClip& clip) {
  const int n = clip.num_frames();
  if (n < 2) return;
  const double dt = clip.dt();
  for (int i = 0; i < n; ++i) {
    const int a = std::max(i - 1, 0);
    const int b = std::min(i + 1, n - 1);
    clip.frames[i].root_lin_vel = (clip.frames[b].root_pos - clip.frames[a].root_pos) / ((b - a) * dt);
  }
}

void ReconstructAngularVelocities(MotionClip& clip) {
  const int n = clip.num_frames();
  if (n < 2) return;
  const double dt = clip.dt();
  for (int i = 0; i < n; ++i) {
    const int a = std::max(i - 1, 0);
    const int b = std::min(i + 1, n - 1);
    clip.frames[i].root_ang_vel =
        AngularVelocityBetween(clip.frames[a].root_quat, clip.frames[b].root_quat, (b - a) * dt);
  }
}

MotionFrame SampleFrame(const MotionClip& clip, double index) {
  const int n = clip.num_frames();
  if (index <= 0) return clip.frames.front();
  if (index >= n - 1) return clip.frames.back();
  const int i0 = static_cast<int>(std::floor(index));
  const double a = index - i0;
  if (a == 0.0) return clip.frames[i0];
  const MotionFrame& f0 = clip.frames[i0];
  const MotionFrame& f1 = clip.frames[i0 + 1];
  MotionFrame out;
  out.root_pos = (1 - a) * f0.root_pos + a * f1.root_pos;
  out.root_quat = f0.root_quat.slerp(a, f1.root_quat).normalized();
  out.root_lin_vel = (1 - a) * f0.root_lin_vel + a * f1.root_lin_vel;
  out.root_ang_vel = (1 - a) * f0.root_ang_vel + a * f1.root_ang_vel;
  out.dof_pos = (1 - a) * f0.dof_pos + a * f1.dof_pos;
  out.keypoints_local = (1 - a) * f0.keypoints_local + a * f1.keypoints_local;
  out.height = (1 - a) * f0.height + a * f1.height;
  return out;
}

MotionClip ResampleClip(const MotionClip& clip, double target_fps) {
  if (!(target_fps > 0)) throw ConfigError("target fps must be positive");
  MotionClip out;
  out.fps = target_fps;
  out.name = clip.name;
  out.tags = clip.tags;
  const int n_in = clip.num_frames();
  const double span = (n_in - 1) * target_fps / clip.fps;
  const int n_out = static_cast<int>(std::lround(span)) + 1;
  out.frames.reserve(n_out);
  for (int i = 0; i < n_out; ++i) {
    out.frames.push_back(SampleFrame(clip, i * clip.fps / target_fps));
  }
  return out;
}

MotionFrame ToLocalFrame(const MotionFrame& frame, const Vec3& robot_root_pos, double robot_yaw) {
  const Mat3 inv = RotZ(-robot_yaw);
  const double frame_yaw = frame.yaw();
  MotionFrame out = frame;
  out.root_pos = inv * (frame.root_pos - robot_root_pos);
  out.root_quat = (QuatFromYaw(-robot_yaw) * frame.root_quat).normalized();
  out.root_lin_vel = inv * frame.root_lin_vel;
  out.root_ang_vel = inv * frame.root_ang_vel;
  const Mat3 rel = RotZ(WrapAngle(frame_yaw - robot_yaw));
  out.keypoints_local = (rel * frame.keypoints_local.transpose()).transpose();
  return out;
}

}  // namespace wbt::motion

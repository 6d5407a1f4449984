#pragma once

#include <array>
#include <vector>

#include "wbt/core/math.hpp"
#include "wbt/sim/humanoid_model.hpp"

namespace wbt::sim {

struct LinkPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();
};

/// World-frame link poses plus joint axes/origins for one configuration.
struct KinematicsResult {
  std::vector<LinkPose> links;
  std::vector<Vec3> joint_axes;     // world frame
  std::vector<Vec3> joint_origins;  // world frame
};

void ForwardKinematics(const HumanoidModel& model, const Vec3& root_pos, const Quat& root_quat,
                       const VecX& dof_pos, KinematicsResult* out);

KinematicsResult ForwardKinematics(const HumanoidModel& model, const Vec3& root_pos,
                                   const Quat& root_quat, const VecX& dof_pos);

Keypoints WorldKeypoints(const HumanoidModel& model, const KinematicsResult& kin);

/// Keypoints relative to the base, rotated into the base heading (yaw-only) frame.
Keypoints HeadingLocalKeypoints(const HumanoidModel& model, const Vec3& root_pos,
                                const Quat& root_quat, const VecX& dof_pos);

/// World velocity of a point rigidly attached to `link`, given base twist and
/// joint velocities. Walks the chain from the link back to the base.
Vec3 PointVelocity(const HumanoidModel& model, const KinematicsResult& kin, int link,
                   const Vec3& point_world, const Vec3& root_pos, const Vec3& root_lin_vel,
                   const Vec3& root_ang_vel, const VecX& dof_vel);

/// The four sole corners of a foot in world coordinates.
std::array<Vec3, 4> SoleCorners(const FootSpec& foot, const KinematicsResult& kin);

/// World position of the sole center of a foot.
Vec3 SoleCenter(const FootSpec& foot, const KinematicsResult& kin);

}  // namespace wbt::sim

#include "wbt/sim/kinematics.hpp"

namespace wbt::sim {
namespace {

Vec3 AxisVector(Axis a) {
  switch (a) {
    case Axis::kX:
      return Vec3::UnitX();
    case Axis::kY:
      return Vec3::UnitY();
    case Axis::kZ:
      break;
  }
  return Vec3::UnitZ();
}

Mat3 AxisRotation(Axis a, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 r;
  switch (a) {
    case Axis::kX:
      r << 1, 0, 0, 0, c, -s, 0, s, c;
      break;
    case Axis::kY:
      r << c, 0, s, 0, 1, 0, -s, 0, c;
      break;
    case Axis::kZ:
      r << c, -s, 0, s, c, 0, 0, 0, 1;
      break;
  }
  return r;
}

}  // namespace

void ForwardKinematics(const HumanoidModel& model, const Vec3& root_pos, const Quat& root_quat,
                       const VecX& dof_pos, KinematicsResult* out) {
  const int n = model.num_joints();
  out->links.resize(n + 1);
  out->joint_axes.resize(n);
  out->joint_origins.resize(n);
  out->links[0].rotation = root_quat.toRotationMatrix();
  out->links[0].position = root_pos;
  for (int j = 0; j < n; ++j) {
    const JointSpec& spec = model.joint(j);
    const LinkPose& parent = out->links[spec.parent_link];
    const Vec3 origin = parent.position + parent.rotation * spec.offset;
    out->joint_origins[j] = origin;
    out->joint_axes[j] = parent.rotation * AxisVector(spec.axis);
    LinkPose& child = out->links[j + 1];
    child.rotation = parent.rotation * AxisRotation(spec.axis, dof_pos[j]);
    child.position = origin;
  }
}

KinematicsResult ForwardKinematics(const HumanoidModel& model, const Vec3& root_pos,
                                   const Quat& root_quat, const VecX& dof_pos) {
  KinematicsResult kin;
  ForwardKinematics(model, root_pos, root_quat, dof_pos, &kin);
  return kin;
}

Keypoints WorldKeypoints(const HumanoidModel& model, const KinematicsResult& kin) {
  Keypoints kp;
  const auto& specs = model.keypoints();
  for (int k = 0; k < kNumKeypoints; ++k) {
    const LinkPose& link = kin.links[specs[k].link];
    kp.row(k) = (link.position + link.rotation * specs[k].offset).transpose();
  }
  return kp;
}

Keypoints HeadingLocalKeypoints(const HumanoidModel& model, const Vec3& /*root_pos*/,
                                const Quat& root_quat, const VecX& dof_pos) {
  // Only the heading matters, so evaluate the chain in a yaw-free base frame.
  const double yaw = YawFromQuat(root_quat);
  const Quat tilt = QuatFromYaw(-yaw) * root_quat;
  const KinematicsResult kin = ForwardKinematics(model, Vec3::Zero(), tilt, dof_pos);
  return WorldKeypoints(model, kin);
}

Vec3 PointVelocity(const HumanoidModel& model, const KinematicsResult& kin, int link,
                   const Vec3& point_world, const Vec3& root_pos, const Vec3& root_lin_vel,
                   const Vec3& root_ang_vel, const VecX& dof_vel) {
  Vec3 v = root_lin_vel + root_ang_vel.cross(point_world - root_pos);
  int l = link;
  while (l > 0) {
    const int j = l - 1;
    v += dof_vel[j] * kin.joint_axes[j].cross(point_world - kin.joint_origins[j]);
    l = model.joint(j).parent_link;
  }
  return v;
}

std::array<Vec3, 4> SoleCorners(const FootSpec& foot, const KinematicsResult& kin) {
  const LinkPose& link = kin.links[foot.link];
  std::array<Vec3, 4> corners;
  int i = 0;
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      const Vec3 local = foot.sole_center + Vec3(sx * foot.half_length, sy * foot.half_width, 0.0);
      corners[i++] = link.position + link.rotation * local;
    }
  }
  return corners;
}

Vec3 SoleCenter(const FootSpec& foot, const KinematicsResult& kin) {
  const LinkPose& link = kin.links[foot.link];
  return link.position + link.rotation * foot.sole_center;
}

}  // namespace wbt::sim

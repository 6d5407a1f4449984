#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wbt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr int kNumKeypoints = 12;
inline constexpr int kNumUpperKeypoints = 6;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kGravity = 9.81;

/// K x 3 keypoints, one row per keypoint; flattened row-major (x0 y0 z0 x1 ...).
using Keypoints = Eigen::Matrix<double, kNumKeypoints, 3, Eigen::RowMajor>;

/// Wraps an angle to [-pi, pi].
inline double WrapAngle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a < -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

inline Mat3 RotZ(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

inline Quat QuatFromYaw(double yaw) {
  return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
}

/// Intrinsic z-y-x (yaw, pitch, roll) composition: R = Rz(yaw) Ry(pitch) Rx(roll).
inline Quat QuatFromRpy(double roll, double pitch, double yaw) {
  return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
              Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
              Eigen::AngleAxisd(roll, Vec3::UnitX()));
}

/// Roll, pitch, yaw of a rotation under the z-y-x convention of QuatFromRpy.
inline Vec3 RpyFromQuat(const Quat& q) {
  const Mat3 r = q.toRotationMatrix();
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

inline double YawFromQuat(const Quat& q) {
  const Mat3 r = q.toRotationMatrix();
  return std::atan2(r(1, 0), r(0, 0));
}

/// Flattens keypoints row-major into a 36-vector.
inline VecX FlattenKeypoints(const Keypoints& kp) {
  VecX out(3 * kNumKeypoints);
  for (int k = 0; k < kNumKeypoints; ++k) out.segment<3>(3 * k) = kp.row(k).transpose();
  return out;
}

inline Keypoints UnflattenKeypoints(const Eigen::Ref<const VecX>& v) {
  Keypoints kp;
  for (int k = 0; k < kNumKeypoints; ++k) kp.row(k) = v.segment<3>(3 * k).transpose();
  return kp;
}

/// World angular velocity that rotates q0 into q1 over dt (q1 = exp(w dt) q0).
inline Vec3 AngularVelocityBetween(const Quat& q0, const Quat& q1, double dt) {
  Quat dq = q1 * q0.conjugate();
  if (dq.w() < 0) dq.coeffs() *= -1.0;
  const Eigen::AngleAxisd aa(dq);
  return aa.axis() * (aa.angle() / dt);
}

/// Integrates an orientation by a world-frame angular velocity over dt.
inline Quat IntegrateQuat(const Quat& q, const Vec3& omega_world, double dt) {
  const double angle = omega_world.norm() * dt;
  if (angle == 0.0) return q;
  const Quat dq(Eigen::AngleAxisd(angle, omega_world.normalized()));
  return (dq * q).normalized();
}

}  // namespace wbt

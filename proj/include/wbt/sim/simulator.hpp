#pragma once

#include <array>
#include <cstdint>

#include "wbt/core/math.hpp"
#include "wbt/motion/motion_clip.hpp"
#include "wbt/sim/humanoid_model.hpp"

namespace wbt::sim {

inline constexpr double kSimDt = 1.0 / 500.0;
inline constexpr int kDecimation = 10;
inline constexpr double kPolicyDt = kSimDt * kDecimation;

struct PhysicalParams {
  double friction = 1.0;
  VecX motor_scale;                 // per joint, multiplies PD torques
  double ground_stiffness = 5.0e4;  // N/m per sole corner
  double ground_damping = 1000.0;    // N s/m per sole corner
  double tangential_damping = 300.0;
  double contact_threshold = 0.005;  // m; a foot whose lowest corner is at or below this is in contact
  double limit_stiffness = 500.0;    // N m/rad beyond joint limits
  double limit_damping = 5.0;
  double joint_damping = 0.0;
};

/// Default parameters: unit motor scale and friction 1.
PhysicalParams DefaultParams(const HumanoidModel& model);

struct RandomizationRanges {
  double friction_min = 0.3;
  double friction_max = 1.2;
  double motor_min = 0.8;
  double motor_max = 1.2;

  void Validate() const;
};

/// One uniform draw of friction and per-joint motor scales, deterministic in `seed`.
PhysicalParams RandomizeParams(const HumanoidModel& model, uint64_t seed, const RandomizationRanges& ranges);

struct PdGains {
  VecX kp;
  VecX kd;

  static PdGains Uniform(int num_joints, double kp = 40.0, double kd = 1.0);
};

struct FootState {
  bool contact = false;
  Vec3 force = Vec3::Zero();  // total ground reaction on the foot, world frame
  double air_time = 0.0;
  // Set on the step in which the foot touches down; carries the completed flight time.
  bool touchdown = false;
  double touchdown_air_time = 0.0;
};

struct SimState {
  Vec3 root_pos = Vec3::Zero();
  Quat root_quat = Quat::Identity();
  Vec3 root_lin_vel = Vec3::Zero();
  Vec3 root_ang_vel = Vec3::Zero();  // world frame
  VecX dof_pos;
  VecX dof_vel;
  VecX last_torques;
  std::array<FootState, 2> feet;
  double time = 0.0;

  double yaw() const { return YawFromQuat(root_quat); }
  Vec3 rpy() const { return RpyFromQuat(root_quat); }
};

/// State placed exactly at the frame pose and root velocity. Joint velocities
/// default to zero. Contact flags come from foot geometry; air time starts at 0.
SimState ResetToFrame(const HumanoidModel& model, const motion::MotionFrame& frame,
                      const PhysicalParams& params, const VecX* dof_vel = nullptr);

/// tau = clamp(motor_scale * (kp (target - q) - kd qdot), +-torque_limit).
VecX PdTorques(const HumanoidModel& model, const PhysicalParams& params, const SimState& state,
               const VecX& target, const PdGains& gains);

/// One semi-implicit Euler step of the lumped floating-base model with
/// penalty ground contact. Throws IntegrationFault on non-finite state.
SimState Step(const HumanoidModel& model, const PhysicalParams& params, const SimState& state,
              const VecX& torques, double dt);

/// Base translational + rotational + joint kinetic energy, gravity potential
/// and joint-limit spring energy.
double MechanicalEnergy(const HumanoidModel& model, const PhysicalParams& params, const SimState& state);

/// Heading-local, root-centred keypoints of the current pose.
Keypoints KeypointPositions(const HumanoidModel& model, const SimState& state);

/// Lowest sole-corner height of each foot.
std::array<double, 2> FootHeights(const HumanoidModel& model, const SimState& state);

}  // namespace wbt::sim

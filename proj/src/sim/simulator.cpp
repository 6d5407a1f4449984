#include "wbt/sim/simulator.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "wbt/core/errors.hpp"
#include "wbt/sim/kinematics.hpp"

namespace wbt::sim {
namespace {

double LimitViolation(double q, double lo, double hi) {
  if (q < lo) return q - lo;
  if (q > hi) return q - hi;
  return 0.0;
}

void CheckFinite(const SimState& s) {
  auto bad = [](const auto& v) { return !v.allFinite(); };
  if (bad(s.root_pos)) throw IntegrationFault("root_pos");
  if (bad(s.root_quat.coeffs())) throw IntegrationFault("root_quat");
  if (bad(s.root_lin_vel)) throw IntegrationFault("root_lin_vel");
  if (bad(s.root_ang_vel)) throw IntegrationFault("root_ang_vel");
  if (bad(s.dof_vel)) throw IntegrationFault("dof_vel");
  if (bad(s.dof_pos)) throw IntegrationFault("dof_pos");
}

std::array<double, 2> LowestCorners(const HumanoidModel& model, const KinematicsResult& kin) {
  std::array<double, 2> out;
  for (int f = 0; f < 2; ++f) {
    double lowest = std::numeric_limits<double>::infinity();
    for (const Vec3& c : SoleCorners(model.feet()[f], kin)) lowest = std::min(lowest, c.z());
    out[f] = lowest;
  }
  return out;
}

}  // namespace

PhysicalParams DefaultParams(const HumanoidModel& model) {
  PhysicalParams p;
  p.motor_scale = VecX::Ones(model.num_joints());
  return p;
}

void RandomizationRanges::Validate() const {
  if (!(friction_min >= 0 && friction_min <= friction_max)) throw ConfigError("invalid friction range");
  if (!(motor_min > 0 && motor_min <= motor_max)) throw ConfigError("invalid motor strength range");
}

PhysicalParams RandomizeParams(const HumanoidModel& model, uint64_t seed, const RandomizationRanges& r) {
  r.Validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    return lo + (hi - lo) * std::generate_canonical<double, 53>(rng);
  };
  PhysicalParams p = DefaultParams(model);
  p.friction = uniform(r.friction_min, r.friction_max);
  for (int j = 0; j < model.num_joints(); ++j) p.motor_scale[j] = uniform(r.motor_min, r.motor_max);
  return p;
}

PdGains PdGains::Uniform(int num_joints, double kp, double kd) {
  return {VecX::Constant(num_joints, kp), VecX::Constant(num_joints, kd)};
}

SimState ResetToFrame(const HumanoidModel& model, const motion::MotionFrame& frame,
                      const PhysicalParams& params, const VecX* dof_vel) {
  if (frame.num_dofs() != model.num_joints()) {
    throw DataError("frame has " + std::to_string(frame.num_dofs()) + " dofs, model '" + model.name() +
                    "' has " + std::to_string(model.num_joints()));
  }
  SimState s;
  s.root_pos = frame.root_pos;
  s.root_quat = frame.root_quat.normalized();
  s.root_lin_vel = frame.root_lin_vel;
  s.root_ang_vel = frame.root_ang_vel;
  s.dof_pos = frame.dof_pos;
  s.dof_vel = dof_vel ? *dof_vel : VecX::Zero(model.num_joints());
  s.last_torques = VecX::Zero(model.num_joints());
  const auto heights = FootHeights(model, s);
  for (int f = 0; f < 2; ++f) s.feet[f].contact = heights[f] <= params.contact_threshold;
  return s;
}

VecX PdTorques(const HumanoidModel& model, const PhysicalParams& params, const SimState& state,
               const VecX& target, const PdGains& gains) {
  const VecX raw = gains.kp.cwiseProduct(target - state.dof_pos) - gains.kd.cwiseProduct(state.dof_vel);
  const VecX scaled = params.motor_scale.cwiseProduct(raw);
  return scaled.cwiseMax(-model.torque_limit()).cwiseMin(model.torque_limit());
}

SimState Step(const HumanoidModel& model, const PhysicalParams& params, const SimState& state,
              const VecX& torques, double dt) {
  if (!(dt > 0)) throw ConfigError("step dt must be positive");
  const int nj = model.num_joints();
  const KinematicsResult kin = ForwardKinematics(model, state.root_pos, state.root_quat, state.dof_pos);

  // Ground reaction from penalty springs at the sole corners.
  Vec3 force = Vec3::Zero();
  Vec3 moment = Vec3::Zero();
  SimState next = state;
  for (int f = 0; f < 2; ++f) {
    const FootSpec& foot = model.feet()[f];
    Vec3 foot_force = Vec3::Zero();
    for (const Vec3& c : SoleCorners(foot, kin)) {
      if (c.z() >= 0.0) continue;
      const Vec3 v = PointVelocity(model, kin, foot.link, c, state.root_pos, state.root_lin_vel,
                                   state.root_ang_vel, state.dof_vel);
      const double fz = std::max(0.0, -params.ground_stiffness * c.z() - params.ground_damping * v.z());
      Vec3 ft(-params.tangential_damping * v.x(), -params.tangential_damping * v.y(), 0.0);
      const double cap = params.friction * fz;
      const double ft_norm = ft.norm();
      if (ft_norm > cap) ft *= ft_norm > 0 ? cap / ft_norm : 0.0;
      const Vec3 fc(ft.x(), ft.y(), fz);
      foot_force += fc;
      moment += (c - state.root_pos).cross(fc);
    }
    force += foot_force;
    next.feet[f].force = foot_force;
  }

  // Floating base.
  const double mass = model.total_mass();
  next.root_lin_vel = state.root_lin_vel + dt * (force / mass - Vec3(0.0, 0.0, kGravity));
  next.root_pos = state.root_pos + dt * next.root_lin_vel + Vec3(0.0, 0.0, 0.5 * kGravity * dt * dt);
  const Mat3 rot = state.root_quat.toRotationMatrix();
  const Mat3 inertia_world = rot * model.base_inertia().asDiagonal() * rot.transpose();
  const Vec3 w = state.root_ang_vel;
  next.root_ang_vel = w + dt * inertia_world.ldlt().solve(moment - w.cross(inertia_world * w));
  next.root_quat = IntegrateQuat(state.root_quat, next.root_ang_vel, dt);

  // Joints: independent 1-DoF axes with soft limits.
  VecX qdd(nj);
  for (int j = 0; j < nj; ++j) {
    const double viol = LimitViolation(state.dof_pos[j], model.q_min()[j], model.q_max()[j]);
    double limit_torque = -params.limit_stiffness * viol;
    if (viol != 0.0) limit_torque -= params.limit_damping * state.dof_vel[j];
    qdd[j] = (torques[j] + limit_torque - params.joint_damping * state.dof_vel[j]) / model.armature()[j];
  }
  next.dof_vel = state.dof_vel + dt * qdd;
  next.dof_pos = state.dof_pos + dt * next.dof_vel;
  next.last_torques = torques;
  next.time = state.time + dt;
  CheckFinite(next);

  // Contact bookkeeping on the new pose.
  const auto heights = FootHeights(model, next);
  for (int f = 0; f < 2; ++f) {
    FootState& fs = next.feet[f];
    const bool contact = heights[f] <= params.contact_threshold;
    fs.touchdown = contact && !state.feet[f].contact;
    fs.touchdown_air_time = fs.touchdown ? state.feet[f].air_time : 0.0;
    fs.air_time = contact ? 0.0 : state.feet[f].air_time + dt;
    fs.contact = contact;
  }
  return next;
}

double MechanicalEnergy(const HumanoidModel& model, const PhysicalParams& params, const SimState& s) {
  const Mat3 rot = s.root_quat.toRotationMatrix();
  const Mat3 inertia_world = rot * model.base_inertia().asDiagonal() * rot.transpose();
  double e = 0.5 * model.total_mass() * s.root_lin_vel.squaredNorm();
  e += model.total_mass() * kGravity * s.root_pos.z();
  e += 0.5 * s.root_ang_vel.dot(inertia_world * s.root_ang_vel);
  for (int j = 0; j < model.num_joints(); ++j) {
    e += 0.5 * model.armature()[j] * s.dof_vel[j] * s.dof_vel[j];
    const double viol = LimitViolation(s.dof_pos[j], model.q_min()[j], model.q_max()[j]);
    e += 0.5 * params.limit_stiffness * viol * viol;
  }
  return e;
}

Keypoints KeypointPositions(const HumanoidModel& model, const SimState& state) {
  return HeadingLocalKeypoints(model, state.root_pos, state.root_quat, state.dof_pos);
}

std::array<double, 2> FootHeights(const HumanoidModel& model, const SimState& state) {
  return LowestCorners(model, ForwardKinematics(model, state.root_pos, state.root_quat, state.dof_pos));
}

}  // namespace wbt::sim

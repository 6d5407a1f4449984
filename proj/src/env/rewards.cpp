#include "wbt/env/rewards.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "wbt/core/errors.hpp"

namespace wbt::env {
namespace {

enum Term {
  kDofPos, kKeypointPos, kLinVel, kVelDirection, kRollPitch, kYaw,
  kDofLimits, kDofAcc, kDofError, kEnergy, kLinVelZ, kAngVelXy, kActionRate,
  kFeetAirTime, kFeetVelocity, kContactForce, kStumble, kHipPos, kWaistRollPitch, kAnkleAction,
};

double SquaredDeviation(const sim::HumanoidModel& model, const VecX& q, std::string_view tag) {
  double sum = 0.0;
  for (int j : model.TaggedJoints(tag)) {
    const double d = q[j] - model.default_pose()[j];
    sum += d * d;
  }
  return sum;
}

}  // namespace

double RewardBreakdown::tracking() const {
  return std::accumulate(terms.begin(), terms.begin() + kNumTrackingTerms, 0.0);
}

double RewardBreakdown::regularization() const {
  return std::accumulate(terms.begin() + kNumTrackingTerms, terms.end(), 0.0);
}

double RewardBreakdown::total() const { return std::accumulate(terms.begin(), terms.end(), 0.0); }

double RewardBreakdown::term(std::string_view name) const {
  for (int i = 0; i < kNumRewardTerms; ++i) {
    if (kRewardTermNames[i] == name) return terms[i];
  }
  throw std::invalid_argument("unknown reward term '" + std::string(name) + "'");
}

double VectorNorm(const VecX& v, NormType norm) {
  switch (norm) {
    case NormType::kL2: return v.norm();
    case NormType::kL1: return v.lpNorm<1>();
    case NormType::kMean: return v.size() ? v.cwiseAbs().mean() : 0.0;
  }
  return v.norm();
}

void TrackingReward(const TrackingErrors& e, const RewardWeights& w, NormType norm, RewardBreakdown* out) {
  const bool finite = e.dof.allFinite() && e.keypoints.allFinite() && e.lin_vel.allFinite() &&
                      e.lin_vel_ref.allFinite() && e.roll_pitch.allFinite() && std::isfinite(e.yaw);
  if (!finite) throw std::invalid_argument("non-finite tracking error");
  auto& t = out->terms;
  t[kDofPos] = w.dof_pos * std::exp(-w.dof_pos_scale * VectorNorm(e.dof, norm));
  t[kKeypointPos] = w.keypoint_pos * std::exp(-w.keypoint_pos_scale * VectorNorm(e.keypoints, norm));
  t[kLinVel] = w.lin_vel * std::exp(-w.lin_vel_scale * VectorNorm(e.lin_vel_ref - e.lin_vel, norm));
  const double s_ref = e.lin_vel_ref.norm();
  const double s = e.lin_vel.norm();
  if (s_ref < w.direction_min_speed && s < w.direction_min_speed) {
    t[kVelDirection] = w.vel_direction;
  } else if (s_ref == 0.0 || s == 0.0) {
    // One side has no direction: treat as orthogonal.
    t[kVelDirection] = w.vel_direction * std::exp(-w.vel_direction_scale);
  } else {
    const double cosine = std::clamp(e.lin_vel_ref.dot(e.lin_vel) / (s_ref * s), -1.0, 1.0);
    t[kVelDirection] = w.vel_direction * std::exp(-w.vel_direction_scale * (1.0 - cosine));
  }
  t[kRollPitch] = w.roll_pitch * std::exp(-w.roll_pitch_scale * VectorNorm(e.roll_pitch, norm));
  t[kYaw] = w.yaw * std::exp(-w.yaw_scale * std::abs(WrapAngle(e.yaw)));
}

void RegularizationReward(const sim::HumanoidModel& model, const RegularizationInputs& in,
                          const RewardWeights& w, RewardBreakdown* out) {
  auto& t = out->terms;
  const bool out_of_limits = ((in.dof_pos.array() < model.q_min().array()) ||
                              (in.dof_pos.array() > model.q_max().array())).any();
  t[kDofLimits] = out_of_limits ? w.dof_limits : 0.0;
  t[kDofAcc] = w.dof_acc * ((in.dof_vel - in.prev_dof_vel) / in.dt).squaredNorm();
  t[kDofError] = w.dof_error * (in.dof_pos - model.default_pose()).squaredNorm();
  t[kEnergy] = w.energy * in.torques.cwiseProduct(in.dof_vel).squaredNorm();
  t[kLinVelZ] = w.lin_vel_z * in.root_lin_vel.z() * in.root_lin_vel.z();
  t[kAngVelXy] = w.ang_vel_xy * in.root_ang_vel_body.head<2>().squaredNorm();
  t[kActionRate] = w.action_rate * (in.action - in.prev_action).squaredNorm();

  double air = 0.0;
  for (double a : in.touchdown_air_times) air += a - w.air_time_target;
  t[kFeetAirTime] = w.feet_air_time * air;

  double feet_vel = 0.0;
  double force_sq = 0.0;
  bool stumble = false;
  for (int f = 0; f < 2; ++f) {
    if (in.foot_contact[f]) feet_vel += in.foot_velocity[f].lpNorm<1>();
    const double excess = std::max(0.0, in.foot_force[f].norm() - w.contact_force_allowance);
    force_sq += excess * excess;
    if (in.foot_force[f].head<2>().norm() > w.stumble_ratio * in.foot_force[f].z()) stumble = true;
  }
  t[kFeetVelocity] = w.feet_velocity * feet_vel;
  t[kContactForce] = w.contact_force * force_sq;
  t[kStumble] = stumble ? w.stumble : 0.0;
  t[kHipPos] = w.hip_pos * SquaredDeviation(model, in.dof_pos, "hip");
  t[kWaistRollPitch] = w.waist_roll_pitch * SquaredDeviation(model, in.dof_pos, "waist_rp");
  double ankle = 0.0;
  for (int j : model.TaggedJoints("ankle")) ankle += in.action[j] * in.action[j];
  t[kAnkleAction] = w.ankle_action * ankle;
}

}  // namespace wbt::env

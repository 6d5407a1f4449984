#include "wbt/motion/synth.hpp"

#include <array>
#include <cmath>
#include <random>
#include <tuple>

#include "wbt/core/errors.hpp"
#include "wbt/sim/kinematics.hpp"

namespace wbt::motion {
namespace {

constexpr std::array<std::pair<MotionKind, std::string_view>, 7> kKindNames = {{
    {MotionKind::kStand, "stand"},
    {MotionKind::kWalk, "walk"},
    {MotionKind::kSquat, "squat"},
    {MotionKind::kArmWave, "arm_wave"},
    {MotionKind::kTurn, "turn"},
    {MotionKind::kRun, "run"},
    {MotionKind::kHop, "hop"},
}};

void CheckRange(double v, double lo, double hi, bool lo_open, const char* what) {
  const bool ok = (lo_open ? v > lo : v >= lo) && v <= hi && std::isfinite(v);
  if (!ok) {
    throw ConfigError(std::string("synth parameter '") + what + "' out of range: " + std::to_string(v));
  }
}

double Smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }

struct Leg {
  int hip_yaw = -1;
  int hip_roll = -1;
  int hip_pitch = -1;
  int knee = -1;
  int ankle_pitch = -1;
  int ankle_roll = -1;
  Vec3 hip_offset = Vec3::Zero();  // base frame
  double thigh = 0.0;
  double shank = 0.0;
  Vec3 sole = Vec3::Zero();  // sole center in the foot frame
};

struct Arm {
  int shoulder_pitch = -1;
  int shoulder_roll = -1;
  int elbow = -1;
};

Leg FindLeg(const sim::HumanoidModel& model, const std::string& side, int foot_index) {
  Leg leg;
  leg.hip_yaw = model.FindJoint(side + "_hip_yaw");
  leg.hip_roll = model.FindJoint(side + "_hip_roll");
  leg.hip_pitch = model.FindJoint(side + "_hip_pitch");
  leg.knee = model.FindJoint(side + "_knee");
  leg.ankle_pitch = model.FindJoint(side + "_ankle_pitch");
  leg.ankle_roll = model.FindJoint(side + "_ankle_roll");
  if (leg.hip_pitch < 0 || leg.knee < 0 || leg.ankle_pitch < 0) {
    throw ConfigError("model '" + model.name() + "' lacks a " + side + " hip_pitch/knee/ankle_pitch chain");
  }
  const int first = leg.hip_yaw >= 0 ? leg.hip_yaw : (leg.hip_roll >= 0 ? leg.hip_roll : leg.hip_pitch);
  leg.hip_offset = model.joint(first).offset;
  leg.thigh = model.joint(leg.knee).offset.norm();
  leg.shank = model.joint(leg.ankle_pitch).offset.norm();
  leg.sole = model.feet()[foot_index].sole_center;
  return leg;
}

Arm FindArm(const sim::HumanoidModel& model, const std::string& side) {
  return {model.FindJoint(side + "_shoulder_pitch"), model.FindJoint(side + "_shoulder_roll"),
          model.FindJoint(side + "_elbow")};
}

// Solves the leg so the sole center lands at `sole_world` with a flat foot of
// heading `foot_yaw`. The base is assumed upright with heading `root_yaw`.
void SolveLeg(const Leg& leg, const Vec3& root_pos, double root_yaw, const Vec3& sole_world,
              double foot_yaw, VecX& q) {
  const Mat3 r_root = RotZ(root_yaw);
  const Vec3 hip = root_pos + r_root * leg.hip_offset;
  const Vec3 ankle = sole_world - RotZ(foot_yaw) * leg.sole;
  double hip_yaw = 0.0;
  if (leg.hip_yaw >= 0) {
    hip_yaw = WrapAngle(foot_yaw - root_yaw);
    q[leg.hip_yaw] = hip_yaw;
  }
  const Vec3 d = RotZ(root_yaw + hip_yaw).transpose() * (ankle - hip);
  double roll = 0.0;
  if (leg.hip_roll >= 0) {
    roll = std::atan2(d.y(), -d.z());
    q[leg.hip_roll] = roll;
  }
  const double sx = d.x();
  const double sz = leg.hip_roll >= 0 ? -std::hypot(d.y(), d.z()) : d.z();
  const double r2 = sx * sx + sz * sz;
  const double l1 = leg.thigh;
  const double l2 = leg.shank;
  const double c2 = std::clamp((r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double knee = std::acos(c2);
  const double beta = std::atan2(-sx, -sz);
  const double hip_pitch = beta - std::atan2(l2 * std::sin(knee), l1 + l2 * std::cos(knee));
  q[leg.hip_pitch] = hip_pitch;
  q[leg.knee] = knee;
  q[leg.ankle_pitch] = -(hip_pitch + knee);
  if (leg.ankle_roll >= 0) q[leg.ankle_roll] = -roll;
}

struct GaitSpec {
  double speed = 0.0;     // forward m/s
  double yaw_rate = 0.0;  // rad/s
  double frequency = 1.0;
  double duty = 0.6;
  double step_height = 0.06;
  double sway = 0.02;
  double height_drop = 0.02;
  double bob = 0.0;
  double arm_swing = 0.3;
};

struct RootPose {
  Vec3 pos;
  double yaw;
};

RootPose NominalRoot(const GaitSpec& g, double t, double base_height) {
  RootPose r;
  r.yaw = g.yaw_rate * t;
  if (std::abs(g.yaw_rate) < 1e-12) {
    r.pos = Vec3(g.speed * t, 0.0, base_height);
  } else {
    const double k = g.speed / g.yaw_rate;
    r.pos = Vec3(k * std::sin(g.yaw_rate * t), k * (1.0 - std::cos(g.yaw_rate * t)), base_height);
  }
  return r;
}

}  // namespace

std::string_view MotionKindName(MotionKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<MotionKind> ParseMotionKind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

SynthParams DefaultSynthParams(MotionKind kind) {
  SynthParams p;
  switch (kind) {
    case MotionKind::kStand:
      p.amplitude = 0.0;
      break;
    case MotionKind::kWalk:
      break;
    case MotionKind::kSquat:
      p.frequency = 0.5;
      p.amplitude = 0.8;
      break;
    case MotionKind::kArmWave:
      p.frequency = 0.8;
      p.amplitude = 0.8;
      break;
    case MotionKind::kTurn:
      p.stride = 0.1;
      p.yaw_rate = 0.5;
      break;
    case MotionKind::kRun:
      p.stride = 0.9;
      p.frequency = 2.0;
      break;
    case MotionKind::kHop:
      p.frequency = 1.5;
      p.amplitude = 0.6;
      break;
  }
  return p;
}

void RecomputeKeypoints(const sim::HumanoidModel& model, MotionClip& clip) {
  for (MotionFrame& f : clip.frames) {
    f.keypoints_local = sim::HeadingLocalKeypoints(model, f.root_pos, f.root_quat, f.dof_pos);
    f.height = f.root_pos.z();
  }
}

MotionClip SynthClip(const sim::HumanoidModel& model, MotionKind kind, const SynthParams& p,
                     uint64_t seed) {
  CheckRange(p.duration, 0.0, 60.0, true, "duration");
  CheckRange(p.fps, 0.0, 1000.0, true, "fps");
  CheckRange(p.stride, 0.0, 1.5, false, "stride");
  CheckRange(p.frequency, 0.0, 4.0, true, "frequency");
  CheckRange(p.amplitude, 0.0, 1.5, false, "amplitude");
  CheckRange(p.yaw_rate, -2.0, 2.0, false, "yaw_rate");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double phase0 = kind == MotionKind::kStand ? 0.0 : 0.2 * unit(rng);
  const double style = kind == MotionKind::kStand ? 1.0 : 0.9 + 0.2 * unit(rng);

  const std::array<Leg, 2> legs = {FindLeg(model, "l", 0), FindLeg(model, "r", 1)};
  const std::array<Arm, 2> arms = {FindArm(model, "l"), FindArm(model, "r")};
  const double h0 = model.nominal_height();

  MotionClip clip;
  clip.fps = p.fps;
  clip.name = std::string(MotionKindName(kind));
  clip.tags = {std::string(MotionKindName(kind))};
  const int n = static_cast<int>(std::lround(p.duration * p.fps));
  const int num_frames = std::max(n, 2);
  clip.frames.reserve(num_frames);

  GaitSpec gait;
  gait.frequency = p.frequency;
  gait.arm_swing = p.amplitude * style;
  if (kind == MotionKind::kWalk || kind == MotionKind::kTurn || kind == MotionKind::kRun) {
    gait.speed = p.stride * p.frequency;
    gait.yaw_rate = kind == MotionKind::kTurn ? p.yaw_rate : 0.0;
    if (kind == MotionKind::kRun) {
      gait.duty = 0.46;
      gait.step_height = 0.09;
      gait.sway = 0.01;
      gait.height_drop = 0.04;
      gait.bob = 0.015;
    }
  }

  for (int i = 0; i < num_frames; ++i) {
    const double t = i / p.fps;
    MotionFrame f;
    f.dof_pos = model.default_pose();
    Vec3 root_pos(0.0, 0.0, h0);
    double root_yaw = 0.0;
    const double phase = p.frequency * t + phase0;

    switch (kind) {
      case MotionKind::kStand:
        break;

      case MotionKind::kSquat:
      case MotionKind::kArmWave: {
        if (kind == MotionKind::kSquat) {
          const double depth = 0.15 * p.amplitude * style;
          root_pos.z() = h0 - depth * 0.5 * (1.0 - std::cos(2.0 * kPi * phase));
          for (int s = 0; s < 2; ++s) {
            const Vec3 hip = legs[s].hip_offset;
            SolveLeg(legs[s], root_pos, 0.0, Vec3(hip.x() + legs[s].sole.x(), hip.y(), 0.0), 0.0, f.dof_pos);
          }
          for (int s = 0; s < 2; ++s) {
            if (arms[s].shoulder_pitch >= 0) f.dof_pos[arms[s].shoulder_pitch] -= 0.6 * (root_pos.z() < h0 ? (h0 - root_pos.z()) / 0.15 : 0.0);
          }
        } else {
          for (int s = 0; s < 2; ++s) {
            const double sign = s == 0 ? 1.0 : -1.0;
            const double w = std::sin(2.0 * kPi * (phase + 0.25 * s));
            if (arms[s].shoulder_roll >= 0) {
              f.dof_pos[arms[s].shoulder_roll] += sign * p.amplitude * style * (0.6 + 0.4 * w);
              if (arms[s].shoulder_pitch >= 0) f.dof_pos[arms[s].shoulder_pitch] -= 0.3 * p.amplitude * w;
            } else if (arms[s].shoulder_pitch >= 0) {
              f.dof_pos[arms[s].shoulder_pitch] -= p.amplitude * style * (1.0 + 0.6 * w);
            }
            if (arms[s].elbow >= 0) f.dof_pos[arms[s].elbow] -= 0.5 * p.amplitude * (1.0 + w);
          }
        }
        break;
      }

      case MotionKind::kWalk:
      case MotionKind::kTurn:
      case MotionKind::kRun: {
        const double base_h = h0 - gait.height_drop;
        const RootPose nominal = NominalRoot(gait, t, base_h);
        root_yaw = nominal.yaw;
        const double sway = gait.sway * std::sin(2.0 * kPi * (phase - gait.duty / 2.0 + 0.25));
        root_pos = nominal.pos + RotZ(root_yaw) * Vec3(0.0, sway, 0.0);
        root_pos.z() += gait.bob * std::sin(4.0 * kPi * phase);
        for (int s = 0; s < 2; ++s) {
          const double offset = s == 0 ? 0.0 : 0.5;
          const double local = phase - offset;
          const double cycle = std::floor(local);
          const double u = local - cycle;
          auto stance_target = [&](double c) {
            const double t_mid = (c + offset + gait.duty / 2.0 - phase0) / p.frequency;
            const RootPose r = NominalRoot(gait, t_mid, base_h);
            const Vec3 hip = legs[s].hip_offset;
            Vec3 pos = r.pos + RotZ(r.yaw) * Vec3(hip.x() + legs[s].sole.x(), hip.y(), 0.0);
            pos.z() = 0.0;
            return std::make_pair(pos, r.yaw);
          };
          Vec3 sole;
          double foot_yaw;
          if (u < gait.duty) {
            std::tie(sole, foot_yaw) = stance_target(cycle);
          } else {
            const auto [a, yaw_a] = stance_target(cycle);
            const auto [b, yaw_b] = stance_target(cycle + 1.0);
            const double sw = (u - gait.duty) / (1.0 - gait.duty);
            const double k = Smoothstep(sw);
            sole = (1.0 - k) * a + k * b;
            sole.z() = gait.step_height * 0.5 * (1.0 - std::cos(2.0 * kPi * sw));
            foot_yaw = yaw_a + k * WrapAngle(yaw_b - yaw_a);
          }
          SolveLeg(legs[s], root_pos, root_yaw, sole, foot_yaw, f.dof_pos);
          if (arms[s].shoulder_pitch >= 0) {
            const double sign = s == 0 ? 1.0 : -1.0;
            f.dof_pos[arms[s].shoulder_pitch] += sign * gait.arm_swing * std::sin(2.0 * kPi * phase);
          }
        }
        break;
      }

      case MotionKind::kHop: {
        const double lift = 0.12 * p.amplitude / 0.6 * style;
        const double s = std::sin(2.0 * kPi * phase);
        root_pos.z() = h0 - 0.03 + lift * std::max(0.0, s);
        // Stance leg keeps its standing geometry, so the foot leaves the ground
        // together with the base during the flight half of each hop.
        const Vec3 hip = legs[1].hip_offset;
        const double ground = std::max(0.0, root_pos.z() - (h0 - 0.03));
        SolveLeg(legs[1], root_pos, 0.0, Vec3(hip.x() + legs[1].sole.x(), hip.y(), ground), 0.0, f.dof_pos);
        f.dof_pos[legs[0].hip_pitch] = -0.9;
        f.dof_pos[legs[0].knee] = 1.4;
        f.dof_pos[legs[0].ankle_pitch] = -0.4;
        break;
      }
    }

    f.root_pos = root_pos;
    f.root_quat = QuatFromYaw(root_yaw);
    clip.frames.push_back(std::move(f));
  }

  ReconstructLinearVelocities(clip);
  ReconstructAngularVelocities(clip);
  RecomputeKeypoints(model, clip);
  return clip;
}

}  // namespace wbt::motion

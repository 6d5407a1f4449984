#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "wbt/motion/motion_clip.hpp"
#include "wbt/sim/humanoid_model.hpp"

namespace wbt::motion {

enum class MotionKind { kStand, kWalk, kSquat, kArmWave, kTurn, kRun, kHop };

std::string_view MotionKindName(MotionKind kind);
std::optional<MotionKind> ParseMotionKind(std::string_view name);

/// Procedural clip parameters. Ranges are enforced by SynthClip:
///   duration (0, 60] s, fps (0, 1000] Hz, stride [0, 1.5] m per gait cycle,
///   frequency (0, 4] Hz, amplitude [0, 1.5] (rad for arm motion, squat depth
///   is 0.15 m per unit), yaw_rate [-2, 2] rad/s.
struct SynthParams {
  double duration = 4.0;
  double fps = 50.0;
  double stride = 0.4;
  double frequency = 1.0;
  double amplitude = 0.3;
  double yaw_rate = 0.5;
};

/// Default parameters that give a representative clip of each kind.
SynthParams DefaultSynthParams(MotionKind kind);

/// Builds a kinematically consistent clip for `model`: keypoints come from
/// forward kinematics of the generated joint angles and root velocities are
/// central differences of the generated root trajectory. Legs are solved by
/// inverse kinematics so stance feet stay planted. Deterministic in `seed`.
MotionClip SynthClip(const sim::HumanoidModel& model, MotionKind kind, const SynthParams& params,
                     uint64_t seed);

/// Fills keypoints_local and height of every frame from its pose.
void RecomputeKeypoints(const sim::HumanoidModel& model, MotionClip& clip);

}  // namespace wbt::motion

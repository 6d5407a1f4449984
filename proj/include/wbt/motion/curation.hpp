#pragma once

#include <string>
#include <vector>

#include "wbt/motion/motion_clip.hpp"
#include "wbt/sim/humanoid_model.hpp"

namespace wbt::motion {

struct CurationConfig {
  double max_limit_violation_fraction = 0.02;
  double max_joint_speed = 20.0;  // rad/s
  double max_root_speed = 3.5;    // m/s
  double max_airborne_fraction = 0.1;
  double max_foot_slip = 0.05;  // m per frame while in stance
  double contact_height = 0.02;  // a sole corner below this height counts as ground contact
  int diversity_bins = 16;

  /// Throws ConfigError unless every threshold is positive.
  void Validate() const;
};

struct CurationReport {
  std::string clip_name;
  double limit_violation_fraction = 0.0;  // frames with any joint outside [q_min, q_max]
  double max_joint_speed = 0.0;
  double max_root_speed = 0.0;
  double foot_slip = 0.0;
  double airborne_fraction = 0.0;
  double diversity = 0.0;  // bin coverage of this clip alone
  bool accepted = false;
  std::vector<std::string> reasons;  // failed gates, empty when accepted
};

struct CurationResult {
  std::vector<MotionClip> accepted;
  std::vector<CurationReport> reports;  // same order as the input
  double diversity = 0.0;               // bin coverage of the accepted set
};

CurationReport AssessClip(const sim::HumanoidModel& model, const MotionClip& clip,
                          const CurationConfig& config);

/// Mean over upper-body joints of the fraction of occupied histogram bins
/// spanning [q_min, q_max]. Zero for an empty set.
double UpperBodyDiversity(const sim::HumanoidModel& model, const std::vector<const MotionClip*>& clips,
                          int bins);

/// Throws DataError on an empty clip list.
CurationResult CurateDataset(const sim::HumanoidModel& model, const std::vector<MotionClip>& clips,
                             const CurationConfig& config);

}  // namespace wbt::motion

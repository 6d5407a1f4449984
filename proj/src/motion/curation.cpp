#include "wbt/motion/curation.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "wbt/core/errors.hpp"
#include "wbt/sim/kinematics.hpp"

namespace wbt::motion {
namespace {

std::string FormatGate(const char* what, double value, double limit) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s %.4g exceeds %.4g", what, value, limit);
  return buf;
}

}  // namespace

void CurationConfig::Validate() const {
  const double values[] = {max_limit_violation_fraction, max_joint_speed, max_root_speed,
                           max_airborne_fraction,        max_foot_slip,   contact_height};
  for (double v : values) {
    if (!(v > 0)) throw ConfigError("curation thresholds must be positive");
  }
  if (diversity_bins < 1) throw ConfigError("diversity_bins must be at least 1");
}

CurationReport AssessClip(const sim::HumanoidModel& model, const MotionClip& clip,
                          const CurationConfig& config) {
  ValidateClip(clip);
  if (clip.num_dofs() != model.num_joints()) {
    throw DataError("clip '" + clip.name + "' has " + std::to_string(clip.num_dofs()) +
                    " dofs, model '" + model.name() + "' has " + std::to_string(model.num_joints()));
  }
  CurationReport r;
  r.clip_name = clip.name;
  const int n = clip.num_frames();
  const VecX& lo = model.q_min();
  const VecX& hi = model.q_max();

  int violating = 0;
  int airborne = 0;
  std::array<bool, 2> prev_contact = {false, false};
  std::array<Vec3, 2> prev_center;
  for (int i = 0; i < n; ++i) {
    const MotionFrame& f = clip.frames[i];
    if (((f.dof_pos.array() < lo.array()) || (f.dof_pos.array() > hi.array())).any()) ++violating;
    if (i > 0) {
      const double speed = ((f.dof_pos - clip.frames[i - 1].dof_pos).cwiseAbs() * clip.fps).maxCoeff();
      r.max_joint_speed = std::max(r.max_joint_speed, speed);
    }
    r.max_root_speed = std::max(r.max_root_speed, f.root_lin_vel.norm());

    const sim::KinematicsResult kin = sim::ForwardKinematics(model, f.root_pos, f.root_quat, f.dof_pos);
    bool any_contact = false;
    for (int foot = 0; foot < 2; ++foot) {
      const auto corners = sim::SoleCorners(model.feet()[foot], kin);
      double lowest = std::numeric_limits<double>::infinity();
      for (const Vec3& c : corners) lowest = std::min(lowest, c.z());
      const bool contact = lowest <= config.contact_height;
      const Vec3 center = sim::SoleCenter(model.feet()[foot], kin);
      if (contact && prev_contact[foot]) {
        r.foot_slip = std::max(r.foot_slip, (center - prev_center[foot]).head<2>().norm());
      }
      prev_contact[foot] = contact;
      prev_center[foot] = center;
      any_contact = any_contact || contact;
    }
    if (!any_contact) ++airborne;
  }
  r.limit_violation_fraction = static_cast<double>(violating) / n;
  r.airborne_fraction = static_cast<double>(airborne) / n;
  r.diversity = UpperBodyDiversity(model, {&clip}, config.diversity_bins);

  if (r.limit_violation_fraction > config.max_limit_violation_fraction) {
    r.reasons.push_back(FormatGate("joint-limit violation fraction", r.limit_violation_fraction,
                                   config.max_limit_violation_fraction));
  }
  if (r.max_joint_speed > config.max_joint_speed) {
    r.reasons.push_back(FormatGate("max joint speed", r.max_joint_speed, config.max_joint_speed));
  }
  if (r.max_root_speed > config.max_root_speed) {
    r.reasons.push_back(FormatGate("max root speed", r.max_root_speed, config.max_root_speed));
  }
  if (r.airborne_fraction > config.max_airborne_fraction) {
    r.reasons.push_back(FormatGate("airborne fraction", r.airborne_fraction, config.max_airborne_fraction));
  }
  if (r.foot_slip > config.max_foot_slip) {
    r.reasons.push_back(FormatGate("foot slip", r.foot_slip, config.max_foot_slip));
  }
  r.accepted = r.reasons.empty();
  return r;
}

double UpperBodyDiversity(const sim::HumanoidModel& model, const std::vector<const MotionClip*>& clips,
                          int bins) {
  const auto& upper = model.upper_joints();
  if (clips.empty() || upper.empty()) return 0.0;
  double total = 0.0;
  for (int j : upper) {
    std::vector<bool> occupied(bins, false);
    const double lo = model.q_min()[j];
    const double width = (model.q_max()[j] - lo) / bins;
    for (const MotionClip* clip : clips) {
      for (const MotionFrame& f : clip->frames) {
        const int b = std::clamp(static_cast<int>(std::floor((f.dof_pos[j] - lo) / width)), 0, bins - 1);
        occupied[b] = true;
      }
    }
    int count = 0;
    for (bool o : occupied) count += o;
    total += static_cast<double>(count) / bins;
  }
  return total / upper.size();
}

CurationResult CurateDataset(const sim::HumanoidModel& model, const std::vector<MotionClip>& clips,
                             const CurationConfig& config) {
  config.Validate();
  if (clips.empty()) throw DataError("curation needs at least one clip");
  CurationResult result;
  std::vector<const MotionClip*> kept;
  for (const MotionClip& clip : clips) {
    result.reports.push_back(AssessClip(model, clip, config));
    if (result.reports.back().accepted) kept.push_back(&clip);
  }
  result.diversity = UpperBodyDiversity(model, kept, config.diversity_bins);
  for (const MotionClip* c : kept) result.accepted.push_back(*c);
  return result;
}

}  // namespace wbt::motion

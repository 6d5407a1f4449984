#include "wbt/sim/humanoid_model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "wbt/core/errors.hpp"
#include "wbt/sim/kinematics.hpp"

namespace wbt::sim {
namespace {

#include "builtin_models.inc"

struct BuiltinModel {
  const char* name;
  const char* text;
};

constexpr BuiltinModel kBuiltins[] = {
    {"g1_like_23dof", kModel_g1_like_23dof},
    {"h1_like_21dof", kModel_h1_like_21dof},
    {"test_12dof", kModel_test_12dof},
};

Axis ParseAxis(const std::string& s, int line) {
  if (s == "x") return Axis::kX;
  if (s == "y") return Axis::kY;
  if (s == "z") return Axis::kZ;
  throw ParseError(line, "unknown axis '" + s + "'");
}

template <typename T>
T Read(std::istringstream& in, int line, const char* field) {
  T v{};
  if (!(in >> v)) throw ParseError(line, std::string("missing or malformed field '") + field + "'");
  return v;
}

}  // namespace

bool JointSpec::HasTag(std::string_view tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

HumanoidModel HumanoidModel::Parse(std::string_view text, std::string_view source) {
  HumanoidModel model;
  std::istringstream stream{std::string(text)};
  std::string raw;
  int line = 0;
  std::vector<std::pair<int, LinkSpec>> link_rows;
  while (std::getline(stream, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    std::istringstream in(raw);
    std::string kind;
    if (!(in >> kind)) continue;
    if (kind == "model") {
      model.name_ = Read<std::string>(in, line, "name");
    } else if (kind == "joint") {
      JointSpec j;
      j.name = Read<std::string>(in, line, "name");
      j.parent_link = Read<int>(in, line, "parent");
      j.axis = ParseAxis(Read<std::string>(in, line, "axis"), line);
      j.offset.x() = Read<double>(in, line, "ox");
      j.offset.y() = Read<double>(in, line, "oy");
      j.offset.z() = Read<double>(in, line, "oz");
      j.q_min = Read<double>(in, line, "q_min");
      j.q_max = Read<double>(in, line, "q_max");
      j.torque_limit = Read<double>(in, line, "torque_limit");
      j.default_pos = Read<double>(in, line, "default");
      j.armature = Read<double>(in, line, "armature");
      const auto group = Read<std::string>(in, line, "group");
      if (group == "upper") {
        j.group = BodyGroup::kUpper;
      } else if (group == "lower") {
        j.group = BodyGroup::kLower;
      } else {
        throw ParseError(line, "group must be upper or lower");
      }
      std::string tag;
      while (in >> tag) j.tags.push_back(tag);
      const int child_link = static_cast<int>(model.joints_.size()) + 1;
      if (j.parent_link < 0 || j.parent_link >= child_link) {
        throw ParseError(line, "joint '" + j.name + "' must attach to an earlier link");
      }
      if (!(j.q_min < j.q_max)) throw ParseError(line, "joint '" + j.name + "' needs q_min < q_max");
      if (j.torque_limit <= 0 || j.armature <= 0) {
        throw ParseError(line, "joint '" + j.name + "' needs positive torque limit and armature");
      }
      model.joints_.push_back(std::move(j));
    } else if (kind == "link") {
      const int index = Read<int>(in, line, "index");
      LinkSpec l;
      l.mass = Read<double>(in, line, "mass");
      l.length = Read<double>(in, line, "length");
      if (l.mass < 0 || l.length < 0) throw ParseError(line, "negative link mass or length");
      link_rows.emplace_back(index, l);
    } else if (kind == "keypoint") {
      KeypointSpec k;
      k.name = Read<std::string>(in, line, "name");
      k.link = Read<int>(in, line, "link");
      k.offset.x() = Read<double>(in, line, "x");
      k.offset.y() = Read<double>(in, line, "y");
      k.offset.z() = Read<double>(in, line, "z");
      model.keypoints_.push_back(std::move(k));
    } else if (kind == "foot") {
      FootSpec f;
      f.link = Read<int>(in, line, "link");
      f.sole_center.x() = Read<double>(in, line, "sole_x");
      f.sole_center.y() = Read<double>(in, line, "sole_y");
      f.sole_center.z() = Read<double>(in, line, "sole_z");
      f.half_length = Read<double>(in, line, "half_length");
      f.half_width = Read<double>(in, line, "half_width");
      model.feet_.push_back(f);
    } else {
      throw ParseError(line, "unknown record '" + kind + "'");
    }
  }

  const int num_links = static_cast<int>(model.joints_.size()) + 1;
  model.links_.assign(num_links, LinkSpec{});
  std::vector<bool> seen(num_links, false);
  for (const auto& [index, spec] : link_rows) {
    if (index < 0 || index >= num_links) {
      throw DataError(std::string(source) + ": link index " + std::to_string(index) + " out of range");
    }
    model.links_[index] = spec;
    seen[index] = true;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw DataError(std::string(source) + ": every link needs a link row");
  }
  model.Finalize(source);
  return model;
}

void HumanoidModel::Finalize(std::string_view source) {
  const std::string where(source);
  if (name_.empty()) throw DataError(where + ": missing model name");
  if (joints_.empty()) throw DataError(where + ": model has no joints");
  if (static_cast<int>(keypoints_.size()) != kNumKeypoints) {
    throw DataError(where + ": expected exactly 12 keypoints");
  }
  if (feet_.size() != 2) throw DataError(where + ": expected exactly 2 feet");
  for (const auto& k : keypoints_) {
    if (k.link < 0 || k.link >= num_links()) throw DataError(where + ": keypoint link out of range");
  }
  for (const auto& f : feet_) {
    if (f.link <= 0 || f.link >= num_links()) throw DataError(where + ": foot link out of range");
  }

  const int n = num_joints();
  q_min_.resize(n);
  q_max_.resize(n);
  torque_limit_.resize(n);
  default_pose_.resize(n);
  armature_.resize(n);
  upper_joints_.clear();
  lower_joints_.clear();
  for (int j = 0; j < n; ++j) {
    const auto& s = joints_[j];
    q_min_[j] = s.q_min;
    q_max_[j] = s.q_max;
    torque_limit_[j] = s.torque_limit;
    default_pose_[j] = s.default_pos;
    armature_[j] = s.armature;
    (s.group == BodyGroup::kUpper ? upper_joints_ : lower_joints_).push_back(j);
  }

  total_mass_ = 0.0;
  for (const auto& l : links_) total_mass_ += l.mass;
  if (total_mass_ <= 0) throw DataError(where + ": total mass must be positive");

  // Lumped base inertia: base as a vertical rod plus every other link as a
  // point mass at its midpoint in the default pose.
  const KinematicsResult kin = ForwardKinematics(*this, Vec3::Zero(), Quat::Identity(), default_pose_);
  const double m0 = links_[0].mass;
  const double l0 = std::max(links_[0].length, 0.1);
  Mat3 inertia = Mat3::Zero();
  inertia.diagonal() << m0 * l0 * l0 / 12.0, m0 * l0 * l0 / 12.0, m0 * 0.01;
  for (int i = 1; i < num_links(); ++i) {
    const Vec3 c = kin.links[i].position + kin.links[i].rotation * Vec3(0, 0, -0.5 * links_[i].length);
    inertia += links_[i].mass * (c.squaredNorm() * Mat3::Identity() - c * c.transpose());
  }
  base_inertia_ = inertia.diagonal();

  double lowest = 0.0;
  for (const auto& f : feet_) {
    for (const Vec3& c : SoleCorners(f, kin)) lowest = std::min(lowest, c.z());
  }
  nominal_height_ = -lowest;
}

HumanoidModel HumanoidModel::Load(const std::string& name_or_path) {
  for (const auto& b : kBuiltins) {
    if (name_or_path == b.name) return Parse(b.text, b.name);
  }
  std::ifstream in(name_or_path);
  if (!in) throw DataError("unknown model '" + name_or_path + "' (not a builtin name or readable file)");
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), name_or_path);
}

std::vector<std::string> HumanoidModel::BuiltinNames() {
  std::vector<std::string> out;
  for (const auto& b : kBuiltins) out.emplace_back(b.name);
  return out;
}

int HumanoidModel::FindJoint(std::string_view name) const {
  for (int j = 0; j < num_joints(); ++j) {
    if (joints_[j].name == name) return j;
  }
  return -1;
}

std::vector<int> HumanoidModel::TaggedJoints(std::string_view tag) const {
  std::vector<int> out;
  for (int j = 0; j < num_joints(); ++j) {
    if (joints_[j].HasTag(tag)) out.push_back(j);
  }
  return out;
}

}  // namespace wbt::sim

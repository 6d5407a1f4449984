#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "wbt/core/math.hpp"

namespace wbt::sim {

enum class Axis { kX, kY, kZ };
enum class BodyGroup { kUpper, kLower };

struct JointSpec {
  std::string name;
  int parent_link = 0;
  Axis axis = Axis::kX;
  Vec3 offset = Vec3::Zero();  // joint origin in the parent link frame
  double q_min = 0.0;
  double q_max = 0.0;
  double torque_limit = 0.0;
  double default_pos = 0.0;
  double armature = 0.0;  // effective joint inertia, kg m^2
  BodyGroup group = BodyGroup::kLower;
  std::vector<std::string> tags;  // "hip", "waist_rp", "ankle"

  bool HasTag(std::string_view tag) const;
};

struct LinkSpec {
  double mass = 0.0;
  double length = 0.0;
};

struct KeypointSpec {
  std::string name;
  int link = 0;
  Vec3 offset = Vec3::Zero();
};

struct FootSpec {
  int link = 0;
  Vec3 sole_center = Vec3::Zero();
  double half_length = 0.0;
  double half_width = 0.0;
};

/// Kinematic tree of a floating-base humanoid. Link 0 is the base; joint j
/// rotates link j+1 relative to its parent link. Parent links always precede
/// their children, which keeps the tree acyclic.
class HumanoidModel {
 public:
  /// Parses the whitespace table format; `source` only labels errors.
  static HumanoidModel Parse(std::string_view text, std::string_view source = "<model>");

  /// Loads a shipped model by name (g1_like_23dof, h1_like_21dof, test_12dof)
  /// or a model file by path.
  static HumanoidModel Load(const std::string& name_or_path);

  static std::vector<std::string> BuiltinNames();

  const std::string& name() const { return name_; }
  int num_joints() const { return static_cast<int>(joints_.size()); }
  int num_links() const { return static_cast<int>(links_.size()); }

  const std::vector<JointSpec>& joints() const { return joints_; }
  const JointSpec& joint(int j) const { return joints_[j]; }
  const std::vector<LinkSpec>& links() const { return links_; }
  const std::vector<KeypointSpec>& keypoints() const { return keypoints_; }
  const std::vector<FootSpec>& feet() const { return feet_; }

  /// Index of the named joint, or -1.
  int FindJoint(std::string_view name) const;

  const VecX& q_min() const { return q_min_; }
  const VecX& q_max() const { return q_max_; }
  const VecX& torque_limit() const { return torque_limit_; }
  const VecX& default_pose() const { return default_pose_; }
  const VecX& armature() const { return armature_; }

  const std::vector<int>& upper_joints() const { return upper_joints_; }
  const std::vector<int>& lower_joints() const { return lower_joints_; }
  std::vector<int> TaggedJoints(std::string_view tag) const;

  double total_mass() const { return total_mass_; }
  /// Body-frame diagonal inertia of the lumped base at the default pose.
  const Vec3& base_inertia() const { return base_inertia_; }
  /// Base height at which the default pose rests its soles on flat ground.
  double nominal_height() const { return nominal_height_; }

 private:
  void Finalize(std::string_view source);

  std::string name_;
  std::vector<JointSpec> joints_;
  std::vector<LinkSpec> links_;
  std::vector<KeypointSpec> keypoints_;
  std::vector<FootSpec> feet_;

  VecX q_min_, q_max_, torque_limit_, default_pose_, armature_;
  std::vector<int> upper_joints_, lower_joints_;
  double total_mass_ = 0.0;
  Vec3 base_inertia_ = Vec3::Zero();
  double nominal_height_ = 0.0;
};

}  // namespace wbt::sim

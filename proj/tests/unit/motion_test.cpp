#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "wbt/core/errors.hpp"
#include "wbt/motion/clip_io.hpp"
#include "wbt/motion/curation.hpp"
#include "wbt/motion/motion_clip.hpp"
#include "wbt/motion/synth.hpp"
#include "wbt/sim/humanoid_model.hpp"

namespace wbt::motion {
namespace {

const sim::HumanoidModel& G1() {
  static const sim::HumanoidModel model = sim::HumanoidModel::Load("g1_like_23dof");
  return model;
}

MotionClip Synth(MotionKind kind, double duration = 4.0, uint64_t seed = 1) {
  SynthParams p = DefaultSynthParams(kind);
  p.duration = duration;
  return SynthClip(G1(), kind, p, seed);
}

std::string StandingFileText() {
  std::string text = "MCLIP v1 fps=50 J=23 K=12\n";
  for (int f = 0; f < 2; ++f) {
    text += "0 0 0.75 1 0 0 0 0 0 0 0 0 0";
    for (int j = 0; j < 23 + 36; ++j) text += " 0";
    text += " 0.75\n";
  }
  return text;
}

TEST(ClipIoTest, ParsesMinimalStandingClip) {
  const MotionClip clip = ParseClip(StandingFileText());
  EXPECT_EQ(clip.num_frames(), 2);
  EXPECT_EQ(clip.num_dofs(), 23);
  EXPECT_EQ(clip.fps, 50.0);
  EXPECT_EQ(clip.frames[0].keypoints_local.rows(), 12);
}

TEST(ClipIoTest, RejectsNonUnitQuaternionWithLineNumber) {
  std::string text = StandingFileText();
  text.replace(text.find("1 0 0 0", text.find('\n')), 7, "0.5 0 0 0");
  try {
    ParseClip(text);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(ClipIoTest, RejectsDimensionMismatch) {
  std::string text = StandingFileText();
  text.insert(text.size() - 1, " 3");
  EXPECT_THROW(ParseClip(text), ParseError);
}

TEST(ClipIoTest, RejectsMalformedHeader) {
  EXPECT_THROW(ParseClip("MCLIP v2 fps=50 J=3 K=12\n"), ParseError);
  EXPECT_THROW(ParseClip("MCLIP v1 fps=50 J=3 K=10\n"), ParseError);
}

TEST(ClipIoTest, DashVelocitiesAreReconstructed) {
  MotionClip walk = Synth(MotionKind::kWalk, 1.0);
  std::string text = FormatClip(walk);
  // Replace velocity columns (fields 8..13) of every frame with '-'.
  std::string rebuilt;
  size_t pos = 0;
  int line = 0;
  while (pos < text.size()) {
    const size_t end = text.find('\n', pos);
    std::string l = text.substr(pos, end - pos);
    pos = end + 1;
    if (line++ < 3) {
      rebuilt += l + "\n";
      continue;
    }
    std::vector<std::string> fields;
    size_t s = 0;
    while (s < l.size()) {
      const size_t e = l.find(' ', s);
      fields.push_back(l.substr(s, e == std::string::npos ? std::string::npos : e - s));
      if (e == std::string::npos) break;
      s = e + 1;
    }
    for (int i = 7; i < 13; ++i) fields[i] = "-";
    for (size_t i = 0; i < fields.size(); ++i) rebuilt += (i ? " " : "") + fields[i];
    rebuilt += "\n";
  }
  const MotionClip parsed = ParseClip(rebuilt);
  for (int i = 0; i < walk.num_frames(); ++i) {
    EXPECT_LT((parsed.frames[i].root_lin_vel - walk.frames[i].root_lin_vel).norm(), 1e-12);
    EXPECT_LT((parsed.frames[i].root_ang_vel - walk.frames[i].root_ang_vel).norm(), 1e-9);
  }
}

TEST(ClipIoTest, SaveLoadRoundTripIsExact) {
  const MotionClip walk = Synth(MotionKind::kWalk);
  const auto path = std::filesystem::temp_directory_path() / "wbt_roundtrip.mclip";
  SaveClip(walk, path);
  const MotionClip back = LoadClip(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.num_frames(), walk.num_frames());
  EXPECT_EQ(back.name, walk.name);
  EXPECT_EQ(back.tags, walk.tags);
  for (int i = 0; i < walk.num_frames(); ++i) {
    const MotionFrame& a = walk.frames[i];
    const MotionFrame& b = back.frames[i];
    EXPECT_LT((a.root_pos - b.root_pos).norm(), 1e-9);
    EXPECT_LT((a.root_quat.coeffs() - b.root_quat.coeffs()).norm(), 1e-9);
    EXPECT_LT((a.root_lin_vel - b.root_lin_vel).norm(), 1e-9);
    EXPECT_LT((a.dof_pos - b.dof_pos).norm(), 1e-9);
    EXPECT_LT((a.keypoints_local - b.keypoints_local).norm(), 1e-9);
  }
}

TEST(ResampleTest, HalvesFrameCount) {
  const MotionClip clip = Synth(MotionKind::kArmWave, 2.0);
  MotionClip fast = ResampleClip(clip, 100.0);
  const MotionClip slow = ResampleClip(fast, 50.0);
  EXPECT_NEAR(slow.num_frames(), fast.num_frames() / 2.0, 1.0);
  EXPECT_NEAR(slow.duration(), fast.duration(), 1.0 / 50.0);
}

TEST(ResampleTest, ConstantPoseIsFixedPoint) {
  const MotionClip stand = Synth(MotionKind::kStand, 1.0);
  for (double fps : {17.0, 50.0, 333.0}) {
    const MotionClip r = ResampleClip(stand, fps);
    for (const MotionFrame& f : r.frames) {
      EXPECT_LT((f.dof_pos - stand.frames[0].dof_pos).norm(), 1e-15);
      EXPECT_LT((f.root_pos - stand.frames[0].root_pos).norm(), 1e-15);
    }
  }
}

TEST(ResampleTest, SameRateIsIdentity) {
  const MotionClip walk = Synth(MotionKind::kWalk, 2.0);
  const MotionClip same = ResampleClip(walk, walk.fps);
  ASSERT_EQ(same.num_frames(), walk.num_frames());
  for (int i = 0; i < walk.num_frames(); ++i) {
    EXPECT_LT((same.frames[i].dof_pos - walk.frames[i].dof_pos).norm(), 1e-12);
    EXPECT_LT((same.frames[i].root_pos - walk.frames[i].root_pos).norm(), 1e-12);
  }
}

TEST(ResampleTest, RoundTripOnSmoothSignal) {
  MotionClip clip;
  clip.fps = 50.0;
  for (int i = 0; i < 200; ++i) {
    MotionFrame f;
    f.dof_pos = VecX::Zero(4);
    const double t = i / 50.0;
    for (int j = 0; j < 4; ++j) f.dof_pos[j] = 0.5 * std::sin(2.0 * kPi * (0.5 + 0.3 * j) * t + j);
    clip.frames.push_back(f);
  }
  const MotionClip back = ResampleClip(ResampleClip(clip, 200.0), 50.0);
  ASSERT_EQ(back.num_frames(), clip.num_frames());
  double worst = 0.0;
  for (int i = 0; i < clip.num_frames(); ++i) {
    worst = std::max(worst, (back.frames[i].dof_pos - clip.frames[i].dof_pos).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-3);
  EXPECT_THROW(ResampleClip(clip, 0.0), ConfigError);
}

TEST(LocalFrameTest, IdentityAtOwnRoot) {
  const MotionClip walk = Synth(MotionKind::kTurn);
  const MotionFrame& f = walk.frames[37];
  const MotionFrame local = ToLocalFrame(f, f.root_pos, f.yaw());
  EXPECT_LT((local.keypoints_local - f.keypoints_local).norm(), 1e-12);
  EXPECT_NEAR(local.root_lin_vel.norm(), f.root_lin_vel.norm(), 1e-12);
  EXPECT_LT(local.root_pos.norm(), 1e-12);
}

TEST(LocalFrameTest, QuarterTurnRotatesKeypoint) {
  MotionFrame f;
  f.dof_pos = VecX::Zero(3);
  f.keypoints_local.row(0) = Vec3(1, 0, 0).transpose();
  const MotionFrame local = ToLocalFrame(f, Vec3::Zero(), kPi / 2);
  EXPECT_NEAR(local.keypoints_local(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(local.keypoints_local(0, 1), -1.0, 1e-12);
  EXPECT_NEAR(local.keypoints_local(0, 2), 0.0, 1e-12);
  EXPECT_NEAR(local.yaw(), -kPi / 2, 1e-12);
}

TEST(LocalFrameTest, TranslationLeavesKeypointsAndIsIsometry) {
  const MotionClip walk = Synth(MotionKind::kWalk);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const MotionFrame& f = walk.frames[trial * 7];
    const MotionFrame shifted = ToLocalFrame(f, f.root_pos + Vec3(u(rng), u(rng), 0.0), f.yaw());
    EXPECT_LT((shifted.keypoints_local - f.keypoints_local).norm(), 1e-12);
    const MotionFrame rotated = ToLocalFrame(f, Vec3(u(rng), u(rng), u(rng)), u(rng));
    for (int a = 0; a < kNumKeypoints; ++a) {
      for (int b = a + 1; b < kNumKeypoints; ++b) {
        const double d0 = (f.keypoints_local.row(a) - f.keypoints_local.row(b)).norm();
        const double d1 = (rotated.keypoints_local.row(a) - rotated.keypoints_local.row(b)).norm();
        EXPECT_NEAR(d0, d1, 1e-9);
      }
    }
    EXPECT_LE(std::abs(rotated.yaw()), kPi);
  }
}

TEST(SynthTest, StandIsConstant) {
  const MotionClip stand = Synth(MotionKind::kStand, 2.0);
  EXPECT_EQ(stand.num_frames(), 100);
  for (const MotionFrame& f : stand.frames) {
    EXPECT_EQ(f.dof_pos, G1().default_pose());
    EXPECT_EQ(f.root_pos, stand.frames[0].root_pos);
    EXPECT_EQ(f.root_lin_vel.norm(), 0.0);
    EXPECT_EQ(f.root_ang_vel.norm(), 0.0);
  }
  EXPECT_NEAR(stand.frames[0].height, G1().nominal_height(), 1e-12);
}

TEST(SynthTest, WalkMeanSpeedMatchesStrideTimesFrequency) {
  SynthParams p = DefaultSynthParams(MotionKind::kWalk);
  p.stride = 0.4;
  p.frequency = 1.0;
  p.duration = 6.0;
  const MotionClip walk = SynthClip(G1(), MotionKind::kWalk, p, 11);
  const Vec3 travel = walk.frames.back().root_pos - walk.frames.front().root_pos;
  const double speed = travel.head<2>().norm() / walk.duration();
  EXPECT_NEAR(speed, 0.4, 0.4 * 0.05);
}

TEST(SynthTest, VelocitiesAreCentralDifferences) {
  for (MotionKind kind : {MotionKind::kWalk, MotionKind::kTurn, MotionKind::kRun, MotionKind::kSquat}) {
    const MotionClip clip = Synth(kind, 2.0);
    const double dt = clip.dt();
    for (int i = 1; i + 1 < clip.num_frames(); ++i) {
      const Vec3 fd = (clip.frames[i + 1].root_pos - clip.frames[i - 1].root_pos) / (2 * dt);
      EXPECT_LT((fd - clip.frames[i].root_lin_vel).norm(), 1e-6);
    }
  }
}

TEST(SynthTest, SameSeedIsBitIdentical) {
  const std::string a = FormatClip(Synth(MotionKind::kRun, 2.0, 42));
  const std::string b = FormatClip(Synth(MotionKind::kRun, 2.0, 42));
  const std::string c = FormatClip(Synth(MotionKind::kRun, 2.0, 43));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(SynthTest, RejectsOutOfRangeParams) {
  SynthParams p;
  p.stride = 2.0;
  EXPECT_THROW(SynthClip(G1(), MotionKind::kWalk, p, 1), ConfigError);
  p = SynthParams{};
  p.frequency = 0.0;
  EXPECT_THROW(SynthClip(G1(), MotionKind::kWalk, p, 1), ConfigError);
  p = SynthParams{};
  p.amplitude = -0.1;
  EXPECT_THROW(SynthClip(G1(), MotionKind::kArmWave, p, 1), ConfigError);
}

TEST(SynthTest, WorksOnEveryShippedModel) {
  for (const std::string& name : sim::HumanoidModel::BuiltinNames()) {
    const sim::HumanoidModel model = sim::HumanoidModel::Load(name);
    for (MotionKind kind : {MotionKind::kStand, MotionKind::kWalk, MotionKind::kSquat, MotionKind::kArmWave,
                            MotionKind::kTurn, MotionKind::kRun}) {
      const MotionClip clip = SynthClip(model, kind, DefaultSynthParams(kind), 5);
      EXPECT_EQ(clip.num_dofs(), model.num_joints());
      const CurationReport r = AssessClip(model, clip, CurationConfig{});
      EXPECT_TRUE(r.accepted) << name << " " << MotionKindName(kind) << ": "
                              << (r.reasons.empty() ? "" : r.reasons.front());
    }
  }
}

TEST(CurationTest, StandAcceptedWithZeroViolations) {
  const CurationResult res = CurateDataset(G1(), {Synth(MotionKind::kStand)}, CurationConfig{});
  ASSERT_EQ(res.reports.size(), 1u);
  EXPECT_TRUE(res.reports[0].accepted);
  EXPECT_EQ(res.reports[0].limit_violation_fraction, 0.0);
  EXPECT_EQ(res.reports[0].airborne_fraction, 0.0);
  EXPECT_EQ(res.reports[0].foot_slip, 0.0);
  EXPECT_EQ(res.accepted.size(), 1u);
}

TEST(CurationTest, LimitViolationFractionCountsFrames) {
  MotionClip clip = Synth(MotionKind::kStand, 2.0);
  const int j = G1().FindJoint("l_elbow");
  for (int i = 0; i < 30; ++i) clip.frames[i * 3].dof_pos[j] = G1().q_max()[j] + 0.1;
  const CurationReport r = AssessClip(G1(), clip, CurationConfig{});
  EXPECT_DOUBLE_EQ(r.limit_violation_fraction, 0.30);
  EXPECT_FALSE(r.accepted);
}

TEST(CurationTest, HopIsRejected) {
  const CurationReport r = AssessClip(G1(), Synth(MotionKind::kHop), CurationConfig{});
  EXPECT_FALSE(r.accepted);
  EXPECT_FALSE(r.reasons.empty());
}

TEST(CurationTest, DistinctKindsAreMoreDiverse) {
  const MotionClip wave = Synth(MotionKind::kArmWave);
  const std::vector<MotionClip> same = {wave, wave, wave};
  const std::vector<MotionClip> distinct = {Synth(MotionKind::kArmWave), Synth(MotionKind::kWalk),
                                            Synth(MotionKind::kSquat)};
  const double d_same = CurateDataset(G1(), same, CurationConfig{}).diversity;
  const double d_distinct = CurateDataset(G1(), distinct, CurationConfig{}).diversity;
  EXPECT_GT(d_distinct, d_same);
}

TEST(CurationTest, OrderInsensitive) {
  std::vector<MotionClip> clips = {Synth(MotionKind::kWalk), Synth(MotionKind::kHop), Synth(MotionKind::kStand)};
  const CurationResult a = CurateDataset(G1(), clips, CurationConfig{});
  std::swap(clips[0], clips[2]);
  const CurationResult b = CurateDataset(G1(), clips, CurationConfig{});
  EXPECT_EQ(a.reports[0].accepted, b.reports[2].accepted);
  EXPECT_EQ(a.reports[1].accepted, b.reports[1].accepted);
  EXPECT_EQ(a.reports[0].foot_slip, b.reports[2].foot_slip);
  EXPECT_DOUBLE_EQ(a.diversity, b.diversity);
}

TEST(CurationTest, EmptyInputAndBadThresholdsThrow) {
  EXPECT_THROW(CurateDataset(G1(), {}, CurationConfig{}), DataError);
  CurationConfig bad;
  bad.max_root_speed = 0.0;
  EXPECT_THROW(CurateDataset(G1(), {Synth(MotionKind::kStand)}, bad), ConfigError);
}

}  // namespace
}  // namespace wbt::motion

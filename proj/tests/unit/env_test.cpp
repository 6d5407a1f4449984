#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "wbt/core/errors.hpp"
#include "wbt/env/observations.hpp"
#include "wbt/env/rewards.hpp"
#include "wbt/env/tracking_env.hpp"
#include "wbt/motion/synth.hpp"
#include "wbt/sim/kinematics.hpp"

namespace wbt::env {
namespace {

std::shared_ptr<const sim::HumanoidModel> Model(const std::string& name) {
  return std::make_shared<const sim::HumanoidModel>(sim::HumanoidModel::Load(name));
}

std::shared_ptr<const std::vector<motion::MotionClip>> StandClips(const sim::HumanoidModel& model,
                                                                  double duration = 2.0) {
  motion::SynthParams p = motion::DefaultSynthParams(motion::MotionKind::kStand);
  p.duration = duration;
  p.fps = 50.0;
  return std::make_shared<const std::vector<motion::MotionClip>>(
      std::vector<motion::MotionClip>{motion::SynthClip(model, motion::MotionKind::kStand, p, 1)});
}

EnvConfig Deterministic() {
  EnvConfig c;
  c.randomize = false;
  return c;
}

TrackingErrors Perfect(int dofs) {
  TrackingErrors e;
  e.dof = VecX::Zero(dofs);
  e.keypoints = VecX::Zero(36);
  return e;
}

TEST(Dims, MatchObservationTables) {
  EXPECT_EQ(ProprioFrameDim(23), 75);
  EXPECT_EQ(ProprioFrameDim(21), 69);
  EXPECT_EQ(PrivilegedDim(23, false), 65);
  EXPECT_EQ(PrivilegedDim(21, false), 63);
  EXPECT_EQ(GoalDim(23), 69);
  EXPECT_EQ(GoalDim(21), 67);
}

TEST(Dims, EnvironmentBuildsTableSizedBlocks) {
  for (const auto& [name, frame, priv, goal] :
       {std::tuple{"g1_like_23dof", 75, 65, 69}, std::tuple{"h1_like_21dof", 69, 63, 67}}) {
    auto model = Model(name);
    EnvConfig c = Deterministic();
    c.privileged_physical_params = false;
    TrackingEnv env(model, StandClips(*model), c, 3);
    env.ResetTo(0, 0);
    EXPECT_EQ(env.observation().Proprio(25).size(), frame * 25) << name;
    EXPECT_EQ(env.observation().privileged.size(), priv) << name;
    EXPECT_EQ(env.observation().goal.size(), goal) << name;
  }
}

TEST(Dims, PhysicalParamsAppendFrictionAndMotorScales) {
  auto model = Model("g1_like_23dof");
  TrackingEnv env(model, StandClips(*model), Deterministic(), 3);
  env.ResetTo(0, 0);
  EXPECT_EQ(env.observation().privileged.size(), 65 + 1 + 23);
}

TEST(Observation, HistoryIsZeroPaddedOldestFirst) {
  auto model = Model("test_12dof");
  TrackingEnv env(model, StandClips(*model), Deterministic(), 3);
  env.ResetTo(0, 0);
  const int d = ProprioFrameDim(12);
  const VecX h = env.observation().Proprio(3);
  EXPECT_TRUE(h.head(2 * d).isZero());
  EXPECT_FALSE(h.tail(d).isZero());
  env.Step(VecX::Zero(12));
  const VecX h2 = env.observation().Proprio(3);
  EXPECT_TRUE(h2.head(d).isZero());
  EXPECT_EQ(h2.segment(d, d), h.tail(d));
}

TEST(Observation, OnReferencePrivilegedDifferencesAreZero) {
  auto model = Model("g1_like_23dof");
  auto clips = StandClips(*model);
  TrackingEnv env(model, clips, Deterministic(), 3);
  env.ResetTo(0, 10);
  // The goal looks one frame ahead, so compare against a world goal for the current frame.
  const auto& frame = (*clips)[0].frames[10];
  const WorldGoal g = MakeWorldGoal(*model, frame, env.origin(), TrackingMode::kLocalDecomposed);
  const VecX p = PrivilegedVector(*model, g, env.state(), env.params(), false);
  EXPECT_LT(p.head(23 + 36).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Observation, GlobalAndLocalGoalsDifferByRootDrift) {
  auto model = Model("g1_like_23dof");
  auto clips = StandClips(*model);
  const auto& ref = (*clips)[0].frames[0];
  sim::SimState robot = sim::ResetToFrame(*model, ref, sim::DefaultParams(*model));
  const GoalOrigin global = SnapOrigin(robot, ref);
  const Vec3 drift(0.31, -0.12, 0.0);
  robot.root_pos += drift;
  const GoalOrigin local = SnapOrigin(robot, ref);
  const Keypoints kg = GoalKeypointsLocal(MakeWorldGoal(*model, ref, global, TrackingMode::kGlobal), robot);
  const Keypoints kl =
      GoalKeypointsLocal(MakeWorldGoal(*model, ref, local, TrackingMode::kLocalDecomposed), robot);
  const Vec3 drift_local = RotZ(-robot.yaw()) * drift;
  for (int k = 0; k < kNumKeypoints; ++k) {
    EXPECT_LT((kl.row(k) - kg.row(k) - drift_local.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Observation, LocalGoalsInvariantUnderJointRigidMotion) {
  auto model = Model("g1_like_23dof");
  motion::MotionClip clip =
      motion::SynthClip(*model, motion::MotionKind::kWalk, motion::DefaultSynthParams(motion::MotionKind::kWalk), 2);
  const auto& ref = clip.frames[30];
  sim::SimState robot = sim::ResetToFrame(*model, clip.frames[28], sim::DefaultParams(*model));
  const VecX g0 = GoalVector(*model, MakeWorldGoal(*model, ref, SnapOrigin(robot, ref), TrackingMode::kLocalDecomposed),
                             robot);
  const double yaw = 0.9;
  const Vec3 shift(3.0, -2.0, 0.0);
  const Quat rot = QuatFromYaw(yaw);
  motion::MotionFrame ref2 = ref;
  ref2.root_pos = rot * ref.root_pos + shift;
  ref2.root_quat = rot * ref.root_quat;
  ref2.root_lin_vel = rot * ref.root_lin_vel;
  ref2.root_ang_vel = rot * ref.root_ang_vel;
  sim::SimState robot2 = robot;
  robot2.root_pos = rot * robot.root_pos + shift;
  robot2.root_quat = rot * robot.root_quat;
  robot2.root_lin_vel = rot * robot.root_lin_vel;
  robot2.root_ang_vel = rot * robot.root_ang_vel;
  const VecX g1 = GoalVector(
      *model, MakeWorldGoal(*model, ref2, SnapOrigin(robot2, ref2), TrackingMode::kLocalDecomposed), robot2);
  EXPECT_LT((g1 - g0).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(DelayedReset, PeriodOneSnapsEveryStep) {
  auto model = Model("test_12dof");
  auto clips = StandClips(*model);
  const auto& ref = (*clips)[0].frames[0];
  sim::SimState robot = sim::ResetToFrame(*model, ref, sim::DefaultParams(*model));
  GoalOrigin o = SnapOrigin(robot, ref);
  for (int i = 0; i < 5; ++i) {
    robot.root_pos.x() += 0.05;
    o = DelayedResetUpdate(o, robot, ref, 1);
    EXPECT_EQ(o.origin_pos, robot.root_pos);
    EXPECT_EQ(o.steps_since_reset, 0);
  }
}

TEST(DelayedReset, StationaryRobotKeepsOrigin) {
  auto model = Model("test_12dof");
  auto clips = StandClips(*model);
  const auto& ref = (*clips)[0].frames[0];
  const sim::SimState robot = sim::ResetToFrame(*model, ref, sim::DefaultParams(*model));
  GoalOrigin o = SnapOrigin(robot, ref);
  const Vec3 start = o.origin_pos;
  for (int i = 0; i < 250; ++i) {
    o = DelayedResetUpdate(o, robot, ref, 7);
    EXPECT_EQ(o.origin_pos, start);
  }
}

TEST(DelayedReset, DriftMakesSawtooth) {
  auto model = Model("test_12dof");
  auto clips = StandClips(*model);
  const auto& ref = (*clips)[0].frames[0];
  sim::SimState robot = sim::ResetToFrame(*model, ref, sim::DefaultParams(*model));
  GoalOrigin o = SnapOrigin(robot, ref);
  double max_offset = 0.0;
  for (int step = 1; step <= 300; ++step) {
    robot.root_pos.x() += 0.01;
    o = DelayedResetUpdate(o, robot, ref, 100);
    const WorldGoal g = MakeWorldGoal(*model, ref, o, TrackingMode::kLocalDecomposed);
    const double offset = (robot.root_pos - g.root_pos).norm();
    // Offset accumulated over the steps since the last snap.
    EXPECT_NEAR(offset, 0.01 * (step % 100), 1e-9) << step;
    max_offset = std::max(max_offset, offset);
    if (step % 100 == 99) EXPECT_NEAR(offset, 0.99, 1e-9);
  }
  // Before the snap at step 100 the origin lags by 100 x 0.01 m.
  GoalOrigin lagging = SnapOrigin(robot, ref);
  sim::SimState moved = robot;
  for (int i = 0; i < 99; ++i) lagging = DelayedResetUpdate(lagging, moved, ref, 100);
  moved.root_pos.x() += 1.0;
  EXPECT_NEAR((moved.root_pos - MakeWorldGoal(*model, ref, lagging, TrackingMode::kGlobal).root_pos).norm(), 1.0,
              1e-12);
  lagging = DelayedResetUpdate(lagging, moved, ref, 100);
  EXPECT_NEAR((moved.root_pos - MakeWorldGoal(*model, ref, lagging, TrackingMode::kGlobal).root_pos).norm(), 0.0,
              1e-12);
  EXPECT_LE(max_offset, 1.0);
}

TEST(TrackingReward, PerfectTrackingTotalsNineteen) {
  RewardBreakdown r;
  TrackingReward(Perfect(23), RewardWeights{}, NormType::kL2, &r);
  const double expected[] = {3.0, 2.0, 6.0, 6.0, 1.0, 1.0};
  for (int i = 0; i < kNumTrackingTerms; ++i) EXPECT_EQ(r.terms[i], expected[i]);
  EXPECT_EQ(r.tracking(), 19.0);
}

TEST(TrackingReward, DofTermFormula) {
  TrackingErrors e = Perfect(4);
  e.dof << 0.3, 0.4, 0.0, 0.0;  // norm 0.5
  RewardBreakdown r;
  TrackingReward(e, RewardWeights{}, NormType::kL2, &r);
  EXPECT_NEAR(r.term("dof_pos"), 2.1145, 1e-3);  // 3 exp(-0.35) = 2.11406
  EXPECT_DOUBLE_EQ(r.term("dof_pos"), 3.0 * std::exp(-0.35));
}

TEST(TrackingReward, AntiparallelDirection) {
  TrackingErrors e = Perfect(4);
  e.lin_vel_ref = Vec3(1, 0, 0);
  e.lin_vel = Vec3(-1, 0, 0);
  RewardBreakdown r;
  TrackingReward(e, RewardWeights{}, NormType::kL2, &r);
  EXPECT_DOUBLE_EQ(r.term("vel_direction"), 6.0 * std::exp(-8.0));
}

TEST(TrackingReward, SlowSpeedsGetFullDirectionWeight) {
  TrackingErrors e = Perfect(4);
  e.lin_vel_ref = Vec3(0.01, 0, 0);
  e.lin_vel = Vec3(-0.02, 0, 0);
  RewardBreakdown r;
  TrackingReward(e, RewardWeights{}, NormType::kL2, &r);
  EXPECT_EQ(r.term("vel_direction"), 6.0);
}

TEST(TrackingReward, YawWrapInvariant) {
  TrackingErrors e = Perfect(4);
  e.yaw = 0.4;
  RewardBreakdown a, b;
  TrackingReward(e, RewardWeights{}, NormType::kL2, &a);
  e.yaw += 2.0 * kPi;
  TrackingReward(e, RewardWeights{}, NormType::kL2, &b);
  EXPECT_NEAR(a.term("yaw"), b.term("yaw"), 1e-12);
}

TEST(TrackingReward, TermsStrictlyDecreaseInError) {
  double prev[kNumTrackingTerms];
  std::fill(prev, prev + kNumTrackingTerms, std::numeric_limits<double>::infinity());
  for (double s : {0.0, 0.1, 0.2, 0.5, 1.0}) {
    TrackingErrors e = Perfect(2);
    e.dof << s, 0.0;
    e.keypoints[0] = s;
    e.lin_vel_ref = Vec3(1, 0, 0);
    e.lin_vel = Vec3(std::cos(s), std::sin(s), 0) * (1.0 + s);
    e.roll_pitch << s, 0.0;
    e.yaw = s;
    RewardBreakdown r;
    TrackingReward(e, RewardWeights{}, NormType::kL2, &r);
    for (int i = 0; i < kNumTrackingTerms; ++i) {
      EXPECT_LT(r.terms[i], prev[i]) << kRewardTermNames[i] << " at " << s;
      EXPECT_GT(r.terms[i], 0.0);
      prev[i] = r.terms[i];
    }
  }
}

TEST(TrackingReward, NonFiniteThrows) {
  TrackingErrors e = Perfect(3);
  e.dof[1] = std::numeric_limits<double>::quiet_NaN();
  RewardBreakdown r;
  EXPECT_THROW(TrackingReward(e, RewardWeights{}, NormType::kL2, &r), std::invalid_argument);
}

RegularizationInputs StandingInputs(const sim::HumanoidModel& model) {
  const int nj = model.num_joints();
  RegularizationInputs in;
  in.dof_pos = model.default_pose();
  in.dof_vel = in.prev_dof_vel = in.torques = in.action = in.prev_action = VecX::Zero(nj);
  const double half = model.total_mass() * kGravity / 2.0;
  in.foot_force = {Vec3(0, 0, half), Vec3(0, 0, half)};
  in.foot_contact = {true, true};
  return in;
}

TEST(RegularizationReward, StandingOnlyContactForceMayBeNonzero) {
  auto model = Model("g1_like_23dof");
  RewardBreakdown r;
  RegularizationReward(*model, StandingInputs(*model), RewardWeights{}, &r);
  for (int i = kNumTrackingTerms; i < kNumRewardTerms; ++i) {
    if (kRewardTermNames[i] == "contact_force" || kRewardTermNames[i] == "dof_error") continue;
    EXPECT_EQ(r.terms[i], 0.0) << kRewardTermNames[i];
  }
  EXPECT_LT(r.term("contact_force"), 0.0);
}

TEST(RegularizationReward, OneJointPastLimit) {
  auto model = Model("g1_like_23dof");
  RegularizationInputs in = StandingInputs(*model);
  in.dof_pos[5] = model->q_max()[5] + 0.1;
  RewardBreakdown r;
  RegularizationReward(*model, in, RewardWeights{}, &r);
  EXPECT_EQ(r.term("dof_limits"), -10.0);
}

TEST(RegularizationReward, TouchdownAfterFlightCreditsAirTime) {
  auto model = Model("g1_like_23dof");
  RegularizationInputs in = StandingInputs(*model);
  in.touchdown_air_times = {0.8};
  RewardBreakdown r;
  RegularizationReward(*model, in, RewardWeights{}, &r);
  EXPECT_NEAR(r.term("feet_air_time"), 3.0, 1e-12);
}

TEST(RegularizationReward, StumbleUsesTangentialRatio) {
  auto model = Model("g1_like_23dof");
  RegularizationInputs in = StandingInputs(*model);
  in.foot_force[1] = Vec3(30.0, 40.0, 10.0);  // |F_xy| = 50 = 5 F_z: not yet
  RewardBreakdown r;
  RegularizationReward(*model, in, RewardWeights{}, &r);
  EXPECT_EQ(r.term("stumble"), 0.0);
  in.foot_force[1] = Vec3(30.0, 40.1, 10.0);
  RegularizationReward(*model, in, RewardWeights{}, &r);
  EXPECT_EQ(r.term("stumble"), -2.0);
}

TEST(RegularizationReward, TotalIsSumOfTerms) {
  auto model = Model("g1_like_23dof");
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  RegularizationInputs in = StandingInputs(*model);
  for (int i = 0; i < 23; ++i) {
    in.dof_pos[i] += 0.3 * n(rng);
    in.dof_vel[i] = n(rng);
    in.action[i] = n(rng);
  }
  RewardBreakdown r;
  TrackingErrors e = Perfect(23);
  e.dof.setConstant(0.1);
  TrackingReward(e, RewardWeights{}, NormType::kL2, &r);
  RegularizationReward(*model, in, RewardWeights{}, &r);
  double sum = 0.0;
  for (double t : r.terms) sum += t;
  EXPECT_NEAR(r.total(), sum, 1e-12);
  EXPECT_NEAR(r.total(), r.tracking() + r.regularization(), 1e-12);
}

TEST(Terminate, Boundaries) {
  auto model = Model("g1_like_23dof");
  auto clips = StandClips(*model);
  sim::SimState s = sim::ResetToFrame(*model, (*clips)[0].frames[0], sim::DefaultParams(*model));
  TrackingErrors e = Perfect(23);
  const TerminationConfig cfg;
  EXPECT_FALSE(TerminateCheck(*model, s, e, cfg));
  s.root_pos.z() = 0.3 * model->nominal_height();
  EXPECT_FALSE(TerminateCheck(*model, s, e, cfg));
  s.root_pos.z() = 0.1;
  EXPECT_TRUE(TerminateCheck(*model, s, e, cfg));
  s.root_pos.z() = model->nominal_height();
  e.keypoints[3] = 1.0;
  EXPECT_FALSE(TerminateCheck(*model, s, e, cfg));
  e.keypoints[3] = 1.0 + 1e-9;
  EXPECT_TRUE(TerminateCheck(*model, s, e, cfg));
  e.keypoints[3] = 0.0;
  s.root_quat = QuatFromRpy(1.2, 0.0, 0.0);
  EXPECT_TRUE(TerminateCheck(*model, s, e, cfg));
}

TEST(Env, NanActionRejectedStateUnchanged) {
  auto model = Model("test_12dof");
  TrackingEnv env(model, StandClips(*model), Deterministic(), 3);
  env.ResetTo(0, 0);
  env.Step(VecX::Zero(12));
  const sim::SimState before = env.state();
  const VecX obs_before = env.observation().Proprio(5);
  VecX bad = VecX::Zero(12);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(env.Step(bad), std::invalid_argument);
  EXPECT_THROW(env.Step(VecX::Zero(11)), std::invalid_argument);
  EXPECT_EQ(env.state().root_pos, before.root_pos);
  EXPECT_EQ(env.state().dof_pos, before.dof_pos);
  EXPECT_EQ(env.step_count(), 1);
  EXPECT_EQ(env.observation().Proprio(5), obs_before);
}

TEST(Env, TwoSecondClipEndsAtStepHundred) {
  auto model = Model("test_12dof");
  TrackingEnv env(model, StandClips(*model, 2.0), Deterministic(), 3);
  env.ResetTo(0, 0);
  ASSERT_EQ(env.horizon(), 100);
  // Holding the default pose keeps the robot standing.
  for (int step = 1; step <= 100; ++step) {
    const StepResult r = env.Step(VecX::Zero(12));
    ASSERT_FALSE(r.terminated) << step;
    EXPECT_EQ(r.truncated, step == 100) << step;
  }
}

TEST(Env, StandingReplayEarnsNearMaxTracking) {
  auto model = Model("test_12dof");
  TrackingEnv env(model, StandClips(*model), Deterministic(), 3);
  env.ResetTo(0, 0);
  double tracking = 0.0;
  for (int step = 0; step < 50; ++step) tracking += env.Step(VecX::Zero(12)).reward.tracking();
  EXPECT_GT(tracking / 50.0, 0.9 * 19.0);
}

TEST(Env, UpperBodyModeMatchesFullModeOnUpperTerms) {
  auto model = Model("g1_like_23dof");
  auto clips = StandClips(*model);
  sim::SimState s = sim::ResetToFrame(*model, (*clips)[0].frames[0], sim::DefaultParams(*model));
  for (int j = 0; j < 23; ++j) s.dof_pos[j] += 0.05 * ((j % 3) - 1);
  const GoalOrigin o = SnapOrigin(s, (*clips)[0].frames[0]);
  const auto& ref = (*clips)[0].frames[0];
  const TrackingErrors full =
      ComputeTrackingErrors(*model, s, MakeWorldGoal(*model, ref, o, TrackingMode::kLocalDecomposed),
                            TrackingMode::kLocalDecomposed);
  const TrackingErrors upper = ComputeTrackingErrors(
      *model, s, MakeWorldGoal(*model, ref, o, TrackingMode::kUpperBodyOnly), TrackingMode::kUpperBodyOnly);
  const auto& idx = model->upper_joints();
  ASSERT_EQ(upper.dof.size(), static_cast<long>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(upper.dof[i], full.dof[idx[i]]);
  EXPECT_EQ(upper.keypoints, full.keypoints.head(3 * kNumUpperKeypoints));
}

TEST(Env, ConfigValidation) {
  EnvConfig c;
  c.reset_period = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = EnvConfig{};
  c.history_length = -1;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(VecEnv, SeededRolloutsRepeat) {
  auto model = Model("test_12dof");
  auto clips = StandClips(*model);
  auto run = [&] {
    TrackingVecEnv venv(model, clips, EnvConfig{}, 3, 42, ObsLayout{false, 5, true}, ObsLayout{});
    MatX a, c;
    venv.Reset(&a, &c);
    rl::VecStep step;
    MatX actions = MatX::Constant(3, 12, 0.1);
    for (int i = 0; i < 20; ++i) venv.Step(actions, &step);
    return step.actor_obs;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace wbt::env

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Arguments select criteria by number (default: all).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wbt/app/commands.hpp"
#include "wbt/app/manifest.hpp"
#include "wbt/cvae/cvae.hpp"
#include "wbt/distill/student.hpp"
#include "wbt/env/observations.hpp"
#include "wbt/env/rewards.hpp"
#include "wbt/env/tracking_env.hpp"
#include "wbt/eval/evaluate.hpp"
#include "wbt/eval/metrics.hpp"
#include "wbt/motion/clip_io.hpp"
#include "wbt/motion/synth.hpp"
#include "wbt/nn/layers.hpp"
#include "wbt/nn/param_store.hpp"
#include "wbt/rl/ppo.hpp"
#include "wbt/rl/teacher.hpp"
#include "wbt/sim/kinematics.hpp"
#include "wbt/sim/simulator.hpp"

namespace {

using namespace wbt;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

MatX RandomMat(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  MatX m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

std::shared_ptr<const sim::HumanoidModel> LoadModel(const std::string& name) {
  return std::make_shared<const sim::HumanoidModel>(sim::HumanoidModel::Load(name));
}

std::shared_ptr<const std::vector<motion::MotionClip>> PolicyRateClips(const sim::HumanoidModel& model,
                                                                       std::vector<motion::MotionKind> kinds,
                                                                       int per_kind = 1) {
  std::vector<motion::MotionClip> raw;
  uint64_t seed = 1;
  for (auto kind : kinds) {
    for (int s = 0; s < per_kind; ++s) raw.push_back(motion::SynthClip(model, kind, motion::DefaultSynthParams(kind), seed++));
  }
  return std::make_shared<const std::vector<motion::MotionClip>>(env::ToPolicyRate(raw));
}

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "wbt_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int Cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "wbt");
  std::ostringstream out, err;
  const int code = app::RunCli(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

// ---------------------------------------------------------------- rewards

motion::MotionFrame RandomReference(const sim::HumanoidModel& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  motion::MotionFrame f;
  f.root_pos = Vec3(3.0 * u(rng), 3.0 * u(rng), 0.6 + 0.3 * u(rng));
  f.root_quat = QuatFromRpy(0.3 * u(rng), 0.3 * u(rng), kPi * u(rng));
  f.root_lin_vel = Vec3(n(rng), n(rng), 0.3 * n(rng));
  f.root_ang_vel = Vec3(0.5 * n(rng), 0.5 * n(rng), n(rng));
  f.dof_pos = VecX(model.num_joints());
  for (int j = 0; j < model.num_joints(); ++j) {
    const double lo = model.q_min()[j], hi = model.q_max()[j];
    f.dof_pos[j] = lo + (hi - lo) * 0.5 * (u(rng) + 1.0);
  }
  motion::MotionClip clip;
  clip.frames = {f, f};
  motion::RecomputeKeypoints(model, clip);
  return clip.frames[0];
}

double Sq(double x) { return x * x; }

// Regularization rows written out term by term.
std::array<double, env::kNumRegularizationTerms> ReferenceRegularization(const sim::HumanoidModel& model,
                                                                         const env::RegularizationInputs& in,
                                                                         const env::RewardWeights& w) {
  std::array<double, env::kNumRegularizationTerms> r{};
  const int nj = model.num_joints();
  bool outside = false;
  for (int j = 0; j < nj; ++j) {
    if (in.dof_pos[j] < model.q_min()[j] || in.dof_pos[j] > model.q_max()[j]) outside = true;
  }
  r[0] = outside ? w.dof_limits : 0.0;
  double acc = 0.0, err = 0.0, energy = 0.0, rate = 0.0;
  for (int j = 0; j < nj; ++j) {
    acc += Sq((in.dof_vel[j] - in.prev_dof_vel[j]) / in.dt);
    err += Sq(in.dof_pos[j] - model.default_pose()[j]);
    energy += Sq(in.torques[j] * in.dof_vel[j]);
    rate += Sq(in.action[j] - in.prev_action[j]);
  }
  r[1] = w.dof_acc * acc;
  r[2] = w.dof_error * err;
  r[3] = w.energy * energy;
  r[4] = w.lin_vel_z * Sq(in.root_lin_vel[2]);
  r[5] = w.ang_vel_xy * (Sq(in.root_ang_vel_body[0]) + Sq(in.root_ang_vel_body[1]));
  r[6] = w.action_rate * rate;
  double air = 0.0;
  for (double t : in.touchdown_air_times) air += t - w.air_time_target;
  r[7] = w.feet_air_time * air;
  double feet_vel = 0.0, force = 0.0;
  bool stumble = false;
  for (int f = 0; f < 2; ++f) {
    const Vec3& v = in.foot_velocity[f];
    const Vec3& F = in.foot_force[f];
    if (in.foot_contact[f]) feet_vel += std::fabs(v[0]) + std::fabs(v[1]) + std::fabs(v[2]);
    const double mag = std::sqrt(F[0] * F[0] + F[1] * F[1] + F[2] * F[2]);
    if (mag > w.contact_force_allowance) force += Sq(mag - w.contact_force_allowance);
    if (std::sqrt(F[0] * F[0] + F[1] * F[1]) > w.stumble_ratio * F[2]) stumble = true;
  }
  r[8] = w.feet_velocity * feet_vel;
  r[9] = w.contact_force * force;
  r[10] = stumble ? w.stumble : 0.0;
  double hip = 0.0, waist = 0.0, ankle = 0.0;
  for (int j = 0; j < nj; ++j) {
    const auto& tags = model.joints()[j].tags;
    const double d = in.dof_pos[j] - model.default_pose()[j];
    if (std::find(tags.begin(), tags.end(), "hip") != tags.end()) hip += d * d;
    if (std::find(tags.begin(), tags.end(), "waist_rp") != tags.end()) waist += d * d;
    if (std::find(tags.begin(), tags.end(), "ankle") != tags.end()) ankle += Sq(in.action[j]);
  }
  r[11] = w.hip_pos * hip;
  r[12] = w.waist_roll_pitch * waist;
  r[13] = w.ankle_action * ankle;
  return r;
}

Outcome RewardCorrectness() {
  const Timer timer;
  const auto model = LoadModel("g1_like_23dof");
  const sim::PhysicalParams params = sim::DefaultParams(*model);
  const env::RewardWeights w;
  const double weights[env::kNumTrackingTerms] = {w.dof_pos, w.keypoint_pos, w.lin_vel,
                                                  w.vel_direction, w.roll_pitch, w.yaw};
  const env::TrackingMode modes[] = {env::TrackingMode::kLocalDecomposed, env::TrackingMode::kGlobal,
                                     env::TrackingMode::kUpperBodyOnly};
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int nj = model->num_joints();
  int range_fail = 0;
  double worst_perfect = 0.0, worst_row = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const env::TrackingMode mode = modes[trial % 3];
    const motion::MotionFrame ref = RandomReference(*model, rng);
    const motion::MotionFrame robot_frame = RandomReference(*model, rng);
    const motion::MotionFrame anchor_frame = RandomReference(*model, rng);
    VecX qd(nj);
    for (int j = 0; j < nj; ++j) qd[j] = n(rng);
    const sim::SimState robot = sim::ResetToFrame(*model, robot_frame, params, &qd);
    const sim::SimState anchor = sim::ResetToFrame(*model, anchor_frame, params);
    const env::WorldGoal goal = env::MakeWorldGoal(*model, ref, env::SnapOrigin(anchor, ref), mode);
    env::RewardBreakdown r;
    env::TrackingReward(env::ComputeTrackingErrors(*model, robot, goal, mode), w, env::NormType::kL2, &r);
    for (int i = 0; i < env::kNumTrackingTerms; ++i) {
      if (!(r.terms[i] > 0.0 && r.terms[i] <= weights[i])) ++range_fail;
    }

    const sim::SimState on_ref = sim::ResetToFrame(*model, ref, params);
    const env::WorldGoal g_ref = env::MakeWorldGoal(*model, ref, env::SnapOrigin(on_ref, ref), mode);
    env::RewardBreakdown p;
    env::TrackingReward(env::ComputeTrackingErrors(*model, on_ref, g_ref, mode), w, env::NormType::kL2, &p);
    worst_perfect = std::max(worst_perfect, std::fabs(p.tracking() - 19.0));

    env::RegularizationInputs in;
    in.dof_pos = robot.dof_pos;
    for (int j = 0; j < nj; ++j) {
      if (u(rng) < 0.02) in.dof_pos[j] = model->q_max()[j] + 0.1 * u(rng);
    }
    in.dof_vel = qd;
    in.prev_dof_vel = qd + 0.1 * RandomMat(nj, 1, rng).col(0);
    in.torques = 20.0 * RandomMat(nj, 1, rng).col(0);
    in.action = RandomMat(nj, 1, rng).col(0);
    in.prev_action = RandomMat(nj, 1, rng).col(0);
    in.root_lin_vel = Vec3(n(rng), n(rng), n(rng));
    in.root_ang_vel_body = Vec3(n(rng), n(rng), n(rng));
    for (int f = 0; f < 2; ++f) {
      in.foot_force[f] = Vec3(50.0 * n(rng), 50.0 * n(rng), 400.0 * u(rng));
      in.foot_velocity[f] = Vec3(n(rng), n(rng), n(rng));
      in.foot_contact[f] = u(rng) < 0.5;
    }
    if (u(rng) < 0.3) in.touchdown_air_times = {u(rng)};
    env::RewardWeights wr = w;
    if (trial % 2) wr.contact_force_allowance = 300.0 * u(rng);
    env::RewardBreakdown reg;
    env::RegularizationReward(*model, in, wr, &reg);
    const auto want = ReferenceRegularization(*model, in, wr);
    for (int i = 0; i < env::kNumRegularizationTerms; ++i) {
      const double got = reg.terms[env::kNumTrackingTerms + i];
      worst_row = std::max(worst_row, std::fabs(got - want[i]) / std::max(1.0, std::fabs(want[i])));
    }
  }
  const double secs = timer.Seconds();
  Outcome o;
  o.pass = range_fail == 0 && worst_perfect <= 1e-9 && worst_row <= 1e-12 && secs < 10.0;
  o.detail = "out-of-range tracking terms " + std::to_string(range_fail) + ", |perfect - 19| " +
             Fmt("%.2e", worst_perfect) + ", worst regularization row diff " + Fmt("%.2e", worst_row) + ", " +
             Fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------- metrics

env::TraceFrame RandomTraceFrame(std::mt19937_64& rng, int nj) {
  std::normal_distribution<double> n(0.0, 0.4);
  env::TraceFrame f;
  f.lin_vel = Vec3(n(rng), n(rng), n(rng));
  f.dof_pos = VecX(nj);
  for (int j = 0; j < nj; ++j) f.dof_pos[j] = n(rng);
  for (int k = 0; k < kNumKeypoints; ++k) f.keypoints.row(k) = Eigen::RowVector3d(n(rng), n(rng), n(rng));
  return f;
}

std::vector<double> BruteForceMetrics(const sim::HumanoidModel& model, const std::vector<env::TraceFrame>& a,
                                      const std::vector<env::TraceFrame>& b) {
  double vel = 0, kp_all = 0, kp_up = 0, kp_lo = 0, q_all = 0, q_up = 0, q_lo = 0;
  long n_kp_up = 0, n_kp_lo = 0, n_q_up = 0, n_q_lo = 0;
  std::set<int> upper(model.upper_joints().begin(), model.upper_joints().end());
  for (size_t t = 0; t < a.size(); ++t) {
    double s = 0;
    for (int c = 0; c < 3; ++c) s += Sq(a[t].lin_vel[c] - b[t].lin_vel[c]);
    vel += std::sqrt(s);
    for (int k = 0; k < kNumKeypoints; ++k) {
      double d = 0;
      for (int c = 0; c < 3; ++c) d += Sq(a[t].keypoints(k, c) - b[t].keypoints(k, c));
      kp_all += std::sqrt(d);
      if (k < 6) {
        kp_up += std::sqrt(d);
        ++n_kp_up;
      } else {
        kp_lo += std::sqrt(d);
        ++n_kp_lo;
      }
    }
    for (int j = 0; j < model.num_joints(); ++j) {
      const double d = std::fabs(a[t].dof_pos[j] - b[t].dof_pos[j]);
      q_all += d;
      if (upper.count(j)) {
        q_up += d;
        ++n_q_up;
      } else {
        q_lo += d;
        ++n_q_lo;
      }
    }
  }
  const double frames = static_cast<double>(a.size());
  return {vel / frames,
          kp_all / (n_kp_up + n_kp_lo),
          kp_up / n_kp_up,
          kp_lo / n_kp_lo,
          q_all / (n_q_up + n_q_lo),
          q_up / n_q_up,
          q_lo / n_q_lo};
}

Outcome MetricOracle() {
  const auto model = LoadModel("g1_like_23dof");
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> len(1, 60);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<env::TraceFrame> robot, ref;
    const int n = len(rng);
    for (int t = 0; t < n; ++t) {
      robot.push_back(RandomTraceFrame(rng, model->num_joints()));
      ref.push_back(RandomTraceFrame(rng, model->num_joints()));
    }
    const auto got = eval::MetricValues(eval::ComputeMetrics(*model, robot, ref));
    const auto want = BruteForceMetrics(*model, robot, ref);
    for (size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::fabs(got[i] - want[i]));
  }
  std::vector<env::TraceFrame> robot, ref;
  for (int t = 0; t < 13; ++t) {
    env::TraceFrame r, q;
    q.dof_pos = VecX::Zero(model->num_joints());
    r.dof_pos = VecX::Constant(model->num_joints(), 0.1);
    robot.push_back(r);
    ref.push_back(q);
  }
  const eval::Metrics m = eval::ComputeMetrics(*model, robot, ref);
  Outcome o;
  o.pass = worst <= 1e-12 && m.e_mpjpe == 0.1;
  o.detail = "worst |metric - brute force| " + Fmt("%.2e", worst) + ", uniform 0.1 rad offset MPJPE " +
             Fmt("%.17g", m.e_mpjpe);
  return o;
}

// ---------------------------------------------------------------- gradients

Outcome GradientChecks() {
  const Timer timer;
  std::vector<std::pair<std::string, double>> errors;
  long largest = 0;

  {
    nn::ParamStore store;
    std::mt19937_64 rng(1);
    nn::Mlp mlp(&store, "mlp", {5, 16, 12, 3}, nn::Activation::kElu, rng);
    nn::Tensor x = nn::Tensor::Variable(RandomMat(4, 5, rng));
    const nn::Tensor w = nn::Tensor::Constant(RandomMat(4, 3, rng));
    auto loss = [&] { return nn::Sum(nn::Mul(nn::Tanh(mlp.Forward(x)), w)); };
    std::vector<nn::Tensor> vars = store.params();
    vars.push_back(x);
    largest = std::max(largest, store.NumScalars());
    errors.emplace_back("mlp", nn::GradCheck(loss, vars).max_rel_error);
  }
  {
    nn::ParamStore store;
    std::mt19937_64 rng(2);
    nn::TransformerBlock block(&store, "attn", 8, 2, 16, rng);
    nn::Tensor x = nn::Tensor::Variable(RandomMat(5, 8, rng));
    const nn::Tensor w = nn::Tensor::Constant(RandomMat(5, 8, rng));
    double worst = 0.0;
    for (auto mask : {nn::AttentionMask::kCausal, nn::AttentionMask::kBidirectional}) {
      auto loss = [&] { return nn::Sum(nn::Mul(block.Forward(x, mask), w)); };
      std::vector<nn::Tensor> vars = store.params();
      vars.push_back(x);
      worst = std::max(worst, nn::GradCheck(loss, vars).max_rel_error);
    }
    largest = std::max(largest, store.NumScalars());
    errors.emplace_back("attention", worst);
  }
  {
    rl::PolicySpec spec;
    spec.actor_obs_dim = 4;
    spec.critic_obs_dim = 6;
    spec.action_dim = 3;
    spec.actor_hidden = {12};
    spec.critic_hidden = {10};
    spec.init_std = 0.6;
    rl::GaussianPolicy policy(spec, 3);
    std::mt19937_64 rng(4);
    rl::MiniBatch b;
    b.actor_obs = RandomMat(8, 4, rng);
    b.critic_obs = RandomMat(8, 6, rng);
    VecX lp;
    policy.Sample(b.actor_obs, rng, &b.actions, &lp);
    // Ratios away from one, none within reach of a clip boundary.
    for (int i = 0; i < 8; ++i) lp[i] += (i % 2 ? 0.05 : -0.6);
    b.old_log_probs = lp;
    b.advantages = RandomMat(8, 1, rng).col(0);
    b.returns = RandomMat(8, 1, rng).col(0);
    auto loss = [&] { return rl::PpoLoss(policy, b, rl::PpoConfig{}).total; };
    largest = std::max(largest, policy.store().NumScalars());
    errors.emplace_back("ppo", nn::GradCheck(loss, policy.store().params()).max_rel_error);
  }
  {
    cvae::CvaeConfig c;
    c.context = 2;
    c.horizon = 2;
    c.latent = 2;
    c.dim = 4;
    c.heads = 1;
    c.ffn_mult = 1;
    c.enc_layers = 1;
    c.dec_layers = 1;
    cvae::MotionCvae net(c, 1, 5);
    std::mt19937_64 rng(6);
    for (auto p : net.store().params()) p.mutable_value() += RandomMat(p.rows(), p.cols(), rng, 0.3);
    const MatX cond = RandomMat(2, net.features(), rng), x = RandomMat(2, net.features(), rng);
    const MatX eps = RandomMat(1, 2, rng);
    auto loss = [&] { return net.WindowLoss(cond, x, eps).motion; };
    largest = std::max(largest, net.store().NumScalars());
    errors.emplace_back("cvae", nn::GradCheck(loss, net.store().params()).max_rel_error);
  }
  const double secs = timer.Seconds();
  Outcome o;
  o.pass = largest <= 1000 && secs < 60.0;
  for (const auto& [name, e] : errors) {
    o.pass = o.pass && e < 1e-4;
    o.detail += name + " " + Fmt("%.1e", e) + ", ";
  }
  o.detail += "largest model " + std::to_string(largest) + " params, " + Fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------- KL

Outcome KlClosedForm() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  constexpr int kDim = 4;
  constexpr int kSamples = 1000000;
  double worst = 0.0, worst_tensor = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    VecX mu(kDim), sigma(kDim);
    for (int i = 0; i < kDim; ++i) {
      mu[i] = n(rng);
      sigma[i] = std::exp(u(rng));
    }
    const double closed = cvae::KlDivergence(mu, sigma);
    const double tensor = cvae::KlLoss(nn::Tensor::Constant(mu.transpose()),
                                       nn::Tensor::Constant(sigma.array().log().matrix().transpose()))
                              .item();
    // E_q[log q(z) - log p(z)] with z = mu + sigma * eps.
    double sum = 0.0;
    for (int s = 0; s < kSamples; ++s) {
      double log_ratio = 0.0;
      for (int i = 0; i < kDim; ++i) {
        const double e = n(rng);
        const double z = mu[i] + sigma[i] * e;
        log_ratio += -std::log(sigma[i]) - 0.5 * e * e + 0.5 * z * z;
      }
      sum += log_ratio;
    }
    const double mc = sum / kSamples;
    worst = std::max(worst, std::fabs(mc - closed) / closed);
    worst_tensor = std::max(worst_tensor, std::fabs(tensor - closed) / closed);
  }
  Outcome o;
  o.pass = worst <= 0.02 && worst_tensor <= 1e-12;
  o.detail = "20 draws x 1e6 samples, worst relative gap " + Fmt("%.4f", worst) + ", training loss vs closed form " +
             Fmt("%.1e", worst_tensor);
  return o;
}

// ---------------------------------------------------------------- PPO

rl::TeacherConfig DeskTeacher() { return app::ResolveConfig(nullptr, {"desk", {}, {}}).teacher; }
distill::StudentConfig DeskStudent() { return app::ResolveConfig(nullptr, {"desk", {}, {}}).student; }

std::vector<double> BlockMeans(const std::vector<rl::UpdateStats>& curve, int block) {
  std::vector<double> out;
  for (size_t start = 0; start + block <= curve.size(); start += block) {
    double s = 0.0;
    for (int i = 0; i < block; ++i) s += curve[start + i].mean_reward;
    out.push_back(s / block);
  }
  return out;
}

eval::MetricReport Evaluate(std::shared_ptr<const sim::HumanoidModel> model,
                            std::shared_ptr<const std::vector<motion::MotionClip>> clips, const env::EnvConfig& env,
                            const env::ObsLayout& layout, std::function<MatX(const MatX&)> act,
                            std::vector<uint64_t> seeds) {
  eval::EvalConfig cfg;
  cfg.env = env;
  cfg.seeds = std::move(seeds);
  return eval::EvaluatePolicy(model, clips, {layout, std::move(act)}, cfg).report;
}

Outcome PpoSanity() {
  const Timer timer;
  const auto model = LoadModel("test_12dof");
  const auto clips = PolicyRateClips(*model, {motion::MotionKind::kStand}, 2);
  rl::TeacherConfig cfg = DeskTeacher();
  // Desk preset settings, trained for as long as fits well inside five minutes.
  cfg.updates = 450;
  const auto res = rl::TrainTeacher(model, clips, cfg, 0, "", "");
  const rl::GaussianPolicy& policy = *res.policy;
  const eval::MetricReport rep = Evaluate(model, clips, cfg.env, cfg.actor,
                                          [&](const MatX& o) { return policy.ActMean(o); }, {0, 1, 2, 3, 4});
  const double secs = timer.Seconds();
  const std::vector<double> blocks = BlockMeans(res.curve, 20);
  // Early blocks sit on a plateau where drops of a few hundredths are noise.
  const double allowance = 0.1;
  double worst_drop = 0.0;
  for (size_t i = 1; i < blocks.size(); ++i) worst_drop = std::max(worst_drop, blocks[i - 1] - blocks[i]);
  Outcome o;
  o.pass = rep.tracking_reward >= 0.8 * 19.0 && worst_drop <= allowance && secs <= 300.0;
  o.detail = "deterministic tracking reward " + Fmt("%.2f", rep.tracking_reward) + " (need 15.20), " +
             std::to_string(cfg.updates) + " updates, 20-update block means";
  for (double b : blocks) o.detail += " " + Fmt("%.2f", b);
  o.detail += ", worst drop " + Fmt("%.3f", worst_drop) + ", " + Fmt("%.0f s", secs);
  return o;
}

// ---------------------------------------------------------------- distillation

Outcome Distillation() {
  const Timer timer;
  const auto model = LoadModel("test_12dof");
  const auto clips = PolicyRateClips(*model, {motion::MotionKind::kStand, motion::MotionKind::kWalk});
  rl::TeacherConfig tc = DeskTeacher();
  tc.updates = 200;
  const distill::StudentConfig base = DeskStudent();
  const std::vector<uint64_t> eval_seeds = {0, 1, 2};

  int mse_ok = 0, ratio_ok = 0, history_ok = 0, reset_ok = 0, dagger_ok = 0;
  std::string detail;
  const std::vector<uint64_t> seeds = {0, 1, 2};
  for (uint64_t seed : seeds) {
    auto student_run = [&](const rl::GaussianPolicy& teacher, const rl::TeacherConfig& t, int history,
                           double* mse_ratio) {
      distill::StudentConfig sc = base;
      sc.history = history;
      const auto r = distill::TrainStudent(model, clips, t.env, teacher, t.actor, sc, seed, "", "");
      if (mse_ratio) *mse_ratio = r.curve.back().mse / r.initial_mse;
      const distill::StudentPolicy& s = *r.student;
      return Evaluate(model, clips, t.env, {false, history, true}, [&](const MatX& o) { return s.Act(o); },
                      eval_seeds)
          .mean.e_vel;
    };
    const auto teacher = rl::TrainTeacher(model, clips, tc, seed, "", "").policy;
    const double teacher_vel =
        Evaluate(model, clips, tc.env, tc.actor, [&](const MatX& o) { return teacher->ActMean(o); }, eval_seeds)
            .mean.e_vel;
    double mse_ratio = 0.0;
    const double h25 = student_run(*teacher, tc, 25, &mse_ratio);
    const double h0 = student_run(*teacher, tc, 0, nullptr);

    rl::TeacherConfig no_reset = tc;
    no_reset.env.reset_period = 1;
    const auto teacher_nr = rl::TrainTeacher(model, clips, no_reset, seed, "", "").policy;
    const double nr = student_run(*teacher_nr, no_reset, 25, nullptr);

    rl::TeacherConfig single = tc;
    single.actor = {false, 25, true};
    const auto ppo = rl::TrainTeacher(model, clips, single, seed, "", "").policy;
    const double single_vel =
        Evaluate(model, clips, single.env, single.actor, [&](const MatX& o) { return ppo->ActMean(o); }, eval_seeds)
            .mean.e_vel;

    mse_ok += mse_ratio <= 0.10;
    ratio_ok += h25 <= 1.25 * teacher_vel;
    history_ok += h25 < h0;
    reset_ok += h25 < nr;
    dagger_ok += h25 < single_vel;
    detail += "[seed " + std::to_string(seed) + ": mse " + Fmt("%.3f", mse_ratio) + " of initial, E_vel teacher " +
              Fmt("%.4f", teacher_vel) + " student " + Fmt("%.4f", h25) + " H0 " + Fmt("%.4f", h0) + " no-reset " +
              Fmt("%.4f", nr) + " single-stage " + Fmt("%.4f", single_vel) + "] ";
    std::cerr << "  distillation " << detail.substr(detail.rfind("[seed")) << Fmt("%.0f s", timer.Seconds()) << "\n";
  }
  const int n = static_cast<int>(seeds.size());
  const int majority = n / 2 + 1;
  Outcome o;
  o.pass = mse_ok == n && ratio_ok == n && history_ok >= majority && reset_ok >= majority && dagger_ok >= majority;
  o.detail = detail + "orderings held: history " + std::to_string(history_ok) + "/" + std::to_string(n) +
             ", reset " + std::to_string(reset_ok) + "/" + std::to_string(n) + ", dagger " +
             std::to_string(dagger_ok) + "/" + std::to_string(n) + ", " + Fmt("%.0f s", timer.Seconds());
  return o;
}

// ---------------------------------------------------------------- CVAE

Outcome CvaeChecks() {
  const Timer timer;
  const auto model = LoadModel("test_12dof");
  const cvae::CvaeConfig cfg = cvae::CvaeConfig::Desk();

  const auto walks = PolicyRateClips(*model, {motion::MotionKind::kWalk}, 3);
  const auto walk = cvae::TrainCvae(*model, *walks, cfg, 7, "", "");
  // Step-100 value and final value as 20-step means of the per-step batch loss.
  double at100 = 0.0, last = 0.0;
  for (int i = 90; i < 110; ++i) at100 += walk.curve[i][0] / 20.0;
  for (size_t i = walk.curve.size() - 20; i < walk.curve.size(); ++i) last += walk.curve[i][0] / 20.0;
  const double ratio = last / at100;

  const auto stands = PolicyRateClips(*model, {motion::MotionKind::kStand}, 3);
  const auto stand = cvae::TrainCvae(*model, *stands, cfg, 7, "", "");
  motion::MotionClip seed = (*stands)[0];
  seed.frames.resize(50);
  const cvae::SynthesisResult syn = cvae::SynthesizeStream(*stand.model, *model, seed, 450);
  double max_dev = 0.0;
  for (int i = 50; i < syn.clip.num_frames(); ++i) {
    max_dev = std::max(max_dev, (syn.clip.frames[i].dof_pos - seed.frames.back().dof_pos).cwiseAbs().maxCoeff());
  }

  VecX a(1), b(1);
  a << 0.0;
  b << 1.0;
  const double ens = cvae::TemporalEnsemble({a, b}, {0.0, 1.0}, std::log(2.0))(0);

  Outcome o;
  o.pass = ratio <= 0.5 && !syn.aborted && syn.clip.num_frames() == 500 && max_dev < 0.05 && ens == 1.0 / 3.0;
  o.detail = "walk l_motion " + Fmt("%.3f", at100) + " at step 100 -> " + Fmt("%.3f", last) + " (ratio " +
             Fmt("%.3f", ratio) + "), standing synthesis max joint deviation " + Fmt("%.4f", max_dev) +
             " rad over 450 frames, ensemble " + Fmt("%.17g", ens) + ", " + Fmt("%.0f s", timer.Seconds());
  return o;
}

// ---------------------------------------------------------------- dims

Outcome Dimensions() {
  bool ok = true;
  std::string detail;
  for (int h : {1, 5, 25}) {
    ok = ok && env::ObsLayout{false, h, false}.Dim(23, false) == 75 * h;
    ok = ok && env::ObsLayout{false, h, false}.Dim(21, false) == 69 * h;
  }
  ok = ok && env::PrivilegedDim(23, false) == 65 && env::PrivilegedDim(21, false) == 63;
  ok = ok && env::GoalDim(23) == 69 && env::GoalDim(21) == 67;
  for (const auto& [name, frame, priv, goal] :
       {std::tuple{"g1_like_23dof", 75, 65, 69}, std::tuple{"h1_like_21dof", 69, 63, 67}}) {
    const auto model = LoadModel(name);
    env::EnvConfig c;
    c.randomize = false;
    c.privileged_physical_params = false;
    env::TrackingEnv e(model, PolicyRateClips(*model, {motion::MotionKind::kStand}), c, 1);
    e.ResetTo(0, 0);
    const env::Observation& obs = e.observation();
    const bool row = obs.Proprio(25).size() == 25 * frame && obs.privileged.size() == priv && obs.goal.size() == goal;
    ok = ok && row;
    detail += std::string(name) + ": proprio " + std::to_string(obs.Proprio(25).size()) + " (25 frames), privileged " +
              std::to_string(obs.privileged.size()) + ", goal " + std::to_string(obs.goal.size()) + "; ";
  }
  return {ok, detail + "layout arithmetic for H in {1,5,25} checked"};
}

// ---------------------------------------------------------------- determinism

std::map<std::string, std::string> ArtifactHashes(const fs::path& run) {
  std::map<std::string, std::string> out;
  std::ifstream in(run / app::kManifestName);
  std::string hash, path;
  while (in >> hash >> path) {
    if (path.rfind("config/", 0) != 0) out[path] = hash;
  }
  return out;
}

const char* kTinyConfig = R"({"preset": "desk",
  "teacher": {"updates": 4, "num_envs": 8},
  "student": {"max_iterations": 3, "num_envs": 4, "batch": 64, "history": 5},
  "cvae": {"total_steps": 6, "warmup": 2},
  "eval": {"seeds": [0, 1], "plots": true},
  "ablation": {"axis": "reset", "seeds": [0]}})";

Outcome Determinism() {
  const fs::path root = Scratch("determinism");
  const fs::path raw = root / "raw";
  if (Cli({"synth-clips", "--out", raw.string(), "--kind", "stand", "--kind", "walk", "--kind", "hop", "--duration",
           "2"}) != 0) {
    return {false, "synth-clips failed"};
  }
  const std::string cfg = (root / "tiny.json").string();
  std::ofstream(cfg) << kTinyConfig;
  auto pipeline = [&](const fs::path& run) -> std::string {
    const std::string r = run.string();
    const std::vector<std::vector<std::string>> steps = {
        {"curate", "--in", raw.string()},
        {"train-teacher"},
        {"distill"},
        {"train-cvae"},
        {"eval", "--ckpt", r + "/teacher.ckpt", "--ckpt", r + "/student.ckpt"},
        {"synthesize", "--seed-clip", r + "/curated/stand.mclip", "--duration", "3", "--track", r + "/student.ckpt"},
        {"ablate"}};
    for (auto args : steps) {
      args.insert(args.begin() + 1, {"--run", r, "--config", cfg, "--seed", "11", "-q"});
      std::string err;
      if (const int code = Cli(args, &err); code != 0) return args[0] + " exited " + std::to_string(code) + ": " + err;
    }
    return "";
  };
  const fs::path a = root / "a", b = root / "b", c = root / "c";
  for (const auto& run : {a, b}) {
    if (const std::string e = pipeline(run); !e.empty()) return {false, e};
  }
  // Re-run training from the snapshot written by the first run.
  if (Cli({"train-teacher", "--run", c.string(), "--config", (a / "config" / "train-teacher.json").string(), "-q"}) !=
      0) {
    return {false, "re-run from snapshot failed"};
  }
  const auto ha = ArtifactHashes(a), hb = ArtifactHashes(b);
  int mismatched = 0;
  for (const auto& [path, hash] : ha) {
    if (!hb.count(path) || hb.at(path) != hash) ++mismatched;
  }
  const bool snapshot_ok = app::Sha256File(c / "teacher.ckpt") == ha.at("teacher.ckpt") &&
                           app::Sha256File(c / "teacher_curve.csv") == ha.at("teacher_curve.csv");
  Outcome o;
  o.pass = mismatched == 0 && ha.size() == hb.size() && ha.size() >= 15 && snapshot_ok;
  o.detail = std::to_string(ha.size()) + " artifacts from curate, train-teacher, distill, train-cvae, eval, synthesize, "
             "ablate; " + std::to_string(mismatched) + " hash mismatches between two runs; snapshot re-run " +
             (snapshot_ok ? "identical" : "differs");
  return o;
}

// ---------------------------------------------------------------- end to end

Outcome EndToEnd() {
  const Timer timer;
  const fs::path root = Scratch("e2e");
  const std::string raw = (root / "raw").string(), run = (root / "run").string();
  std::vector<std::vector<std::string>> steps = {
      {"synth-clips", "--out", raw, "--kind", "stand", "--kind", "walk", "--kind", "squat", "--kind", "arm_wave",
       "--kind", "hop"},
      {"curate", "--run", run, "--preset", "desk", "--in", raw},
      {"train-teacher", "--run", run, "--preset", "desk"},
      {"distill", "--run", run, "--preset", "desk"},
      {"train-cvae", "--run", run, "--preset", "desk"},
      {"synthesize", "--run", run, "--preset", "desk", "--seed-clip", run + "/curated/stand.mclip", "--duration", "10",
       "--track", run + "/student.ckpt"}};
  std::string timing;
  for (const auto& args : steps) {
    const double t0 = timer.Seconds();
    std::string err;
    if (const int code = Cli(args, &err); code != 0) {
      return {false, args[0] + " exited " + std::to_string(code) + ": " + err};
    }
    timing += args[0] + " " + Fmt("%.0f s", timer.Seconds() - t0) + ", ";
    std::cerr << "  end-to-end: " << args[0] << " done at " << Fmt("%.0f s", timer.Seconds()) << "\n";
  }
  std::ifstream in(root / "run" / "synth_report.json");
  const nlohmann::json report = nlohmann::json::parse(in);
  const double completion = report.at("completion_rate").get<double>();
  std::ifstream csv(root / "run" / "synth_metrics.csv");
  std::string header;
  std::getline(csv, header);
  const bool table_shape = header == "method,E_vel,E_mpkpe,E_mpkpe_upper,E_mpkpe_lower,E_mpjpe,E_mpjpe_upper,"
                                     "E_mpjpe_lower";
  const double secs = timer.Seconds();
  Outcome o;
  o.pass = completion >= 0.9 && table_shape && secs < 1800.0;
  o.detail = timing + "completion " + Fmt("%.2f", completion) + " on the synthesized standing stream, E_vel " +
             Fmt("%.4f", report.at("mean").at("E_vel").get<double>()) + ", total " + Fmt("%.0f s", secs);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "reward correctness", RewardCorrectness},
      {2, "metric oracle", MetricOracle},
      {3, "gradient verification", GradientChecks},
      {4, "KL closed form", KlClosedForm},
      {5, "PPO sanity", PpoSanity},
      {6, "distillation", Distillation},
      {7, "CVAE", CvaeChecks},
      {8, "dimensional conformance", Dimensions},
      {9, "determinism", Determinism},
      {10, "end-to-end smoke", EndToEnd},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

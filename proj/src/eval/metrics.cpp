#include "wbt/eval/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace wbt::eval {

namespace {

// Running mean: exact for constant inputs, unlike sum / n.
void Push(double x, double* mean, long* n) {
  ++*n;
  *mean += (x - *mean) / static_cast<double>(*n);
}

// Count-weighted mean of two group means; exact when they are equal.
double Blend(double a, double na, double b, double nb) {
  if (na + nb == 0.0) return 0.0;
  return a + (b - a) * (nb / (na + nb));
}

}  // namespace

FrameErrors ComputeFrameErrors(const sim::HumanoidModel& model, const env::TraceFrame& robot,
                               const env::TraceFrame& reference) {
  FrameErrors f;
  f.vel = (robot.lin_vel - reference.lin_vel).norm();
  long nu = 0, nl = 0;
  for (int k = 0; k < kNumKeypoints; ++k) {
    const double d = (robot.keypoints.row(k) - reference.keypoints.row(k)).norm();
    if (k < kNumUpperKeypoints) Push(d, &f.kp_upper, &nu);
    else Push(d, &f.kp_lower, &nl);
  }
  nu = nl = 0;
  for (int j : model.upper_joints()) Push(std::abs(robot.dof_pos[j] - reference.dof_pos[j]), &f.dof_upper, &nu);
  for (int j : model.lower_joints()) Push(std::abs(robot.dof_pos[j] - reference.dof_pos[j]), &f.dof_lower, &nl);
  return f;
}

namespace {

struct Sums {
  double vel = 0, kp_upper = 0, kp_lower = 0, dof_upper = 0, dof_lower = 0;
  long frames = 0;

  void Add(const FrameErrors& f) {
    ++frames;
    const double w = 1.0 / static_cast<double>(frames);
    vel += (f.vel - vel) * w;
    kp_upper += (f.kp_upper - kp_upper) * w;
    kp_lower += (f.kp_lower - kp_lower) * w;
    dof_upper += (f.dof_upper - dof_upper) * w;
    dof_lower += (f.dof_lower - dof_lower) * w;
  }

  Metrics Finish(const sim::HumanoidModel& model) const {
    Metrics m;
    if (frames == 0) return m;
    m.e_vel = vel;
    m.e_mpkpe_upper = kp_upper;
    m.e_mpkpe_lower = kp_lower;
    m.e_mpkpe = Blend(kp_upper, kNumUpperKeypoints, kp_lower, kNumKeypoints - kNumUpperKeypoints);
    m.e_mpjpe_upper = dof_upper;
    m.e_mpjpe_lower = dof_lower;
    m.e_mpjpe = Blend(dof_upper, static_cast<double>(model.upper_joints().size()), dof_lower,
                      static_cast<double>(model.lower_joints().size()));
    return m;
  }
};

}  // namespace

Metrics ComputeMetrics(const sim::HumanoidModel& model, const std::vector<env::TraceFrame>& robot,
                       const std::vector<env::TraceFrame>& reference) {
  if (robot.size() != reference.size()) {
    throw std::invalid_argument("trace has " + std::to_string(robot.size()) + " frames, reference " +
                                std::to_string(reference.size()));
  }
  if (robot.empty()) throw std::invalid_argument("empty trace");
  Sums s;
  for (size_t i = 0; i < robot.size(); ++i) s.Add(ComputeFrameErrors(model, robot[i], reference[i]));
  return s.Finish(model);
}

MetricReport Aggregate(const sim::HumanoidModel& model, const std::vector<EpisodeTrace>& episodes) {
  MetricReport r;
  r.seeds = 1;
  Sums all;
  int completed = 0;
  double tracking = 0.0;
  long steps = 0;
  for (const EpisodeTrace& ep : episodes) {
    for (double t : ep.tracking_reward) tracking += t;
    steps += static_cast<long>(ep.tracking_reward.size());
    Sums clip;
    for (size_t i = 0; i < ep.robot.size(); ++i) {
      const FrameErrors f = ComputeFrameErrors(model, ep.robot[i], ep.reference[i]);
      clip.Add(f);
      all.Add(f);
    }
    r.clips.push_back({ep.clip_name, clip.Finish(model), static_cast<int>(clip.frames), ep.completed});
    completed += ep.completed ? 1 : 0;
  }
  r.mean = all.Finish(model);
  r.completion_rate = episodes.empty() ? 0.0 : static_cast<double>(completed) / episodes.size();
  r.tracking_reward = steps ? tracking / steps : 0.0;
  return r;
}

std::vector<std::string> MetricColumns() {
  return {"E_vel", "E_mpkpe", "E_mpkpe_upper", "E_mpkpe_lower", "E_mpjpe", "E_mpjpe_upper", "E_mpjpe_lower"};
}

std::vector<double> MetricValues(const Metrics& m) {
  return {m.e_vel, m.e_mpkpe, m.e_mpkpe_upper, m.e_mpkpe_lower, m.e_mpjpe, m.e_mpjpe_upper, m.e_mpjpe_lower};
}

namespace {

Metrics FromValues(const std::vector<double>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

}  // namespace

MetricReport CombineSeeds(const std::vector<MetricReport>& per_seed) {
  if (per_seed.empty()) throw std::invalid_argument("no seed reports to combine");
  const size_t k = MetricColumns().size();
  std::vector<double> mean(k, 0.0), sd(k, 0.0);
  double completion = 0.0;
  double tracking = 0.0;
  for (const MetricReport& r : per_seed) {
    const auto v = MetricValues(r.mean);
    for (size_t i = 0; i < k; ++i) mean[i] += v[i];
    completion += r.completion_rate;
    tracking += r.tracking_reward;
  }
  const double n = static_cast<double>(per_seed.size());
  for (double& m : mean) m /= n;
  if (per_seed.size() > 1) {
    for (const MetricReport& r : per_seed) {
      const auto v = MetricValues(r.mean);
      for (size_t i = 0; i < k; ++i) sd[i] += (v[i] - mean[i]) * (v[i] - mean[i]);
    }
    for (double& s : sd) s = std::sqrt(s / (n - 1.0));
  }
  MetricReport out;
  out.mean = FromValues(mean);
  out.stddev = FromValues(sd);
  out.completion_rate = completion / n;
  out.tracking_reward = tracking / n;
  out.seeds = static_cast<int>(per_seed.size());
  out.clips = per_seed.front().clips;
  return out;
}

}  // namespace wbt::eval

#pragma once

#include <string>
#include <vector>

#include "wbt/env/tracking_env.hpp"
#include "wbt/sim/humanoid_model.hpp"

namespace wbt::eval {

struct Metrics {
  double e_vel = 0.0;          // m/s
  double e_mpkpe = 0.0;        // m
  double e_mpkpe_upper = 0.0;
  double e_mpkpe_lower = 0.0;
  double e_mpjpe = 0.0;        // rad
  double e_mpjpe_upper = 0.0;
  double e_mpjpe_lower = 0.0;
};

/// Time-aligned robot and reference frames of one episode at the policy rate.
struct EpisodeTrace {
  std::string clip_name;
  std::vector<env::TraceFrame> robot;
  std::vector<env::TraceFrame> reference;
  std::vector<double> tracking_reward;  // per step
  bool completed = false;
};

/// Per-frame errors: velocity, upper/lower keypoint and joint means.
struct FrameErrors {
  double vel = 0.0;
  double kp_upper = 0.0, kp_lower = 0.0;
  double dof_upper = 0.0, dof_lower = 0.0;
};

/// E_vel is the mean of ||v - v_ref||; MPKPE the mean Euclidean keypoint
/// error (heading-local); MPJPE the mean |q - q_ref|. Upper/lower splits use
/// the first six keypoints and the model's upper joint group. Throws
/// std::invalid_argument on a length mismatch or an empty trace.
Metrics ComputeMetrics(const sim::HumanoidModel& model, const std::vector<env::TraceFrame>& robot,
                       const std::vector<env::TraceFrame>& reference);

FrameErrors ComputeFrameErrors(const sim::HumanoidModel& model, const env::TraceFrame& robot,
                               const env::TraceFrame& reference);

struct ClipReport {
  std::string clip_name;
  Metrics metrics;
  int frames = 0;
  bool completed = false;
};

struct MetricReport {
  Metrics mean;  // across seeds
  Metrics stddev;
  double completion_rate = 0.0;
  double tracking_reward = 0.0;  // mean per step
  int seeds = 0;
  std::vector<ClipReport> clips;  // first seed
};

/// Pools all frames of `episodes` (frame-weighted across clips).
MetricReport Aggregate(const sim::HumanoidModel& model, const std::vector<EpisodeTrace>& episodes);

/// Mean and sample standard deviation of per-seed reports.
MetricReport CombineSeeds(const std::vector<MetricReport>& per_seed);

/// Metric columns in table order.
std::vector<std::string> MetricColumns();
std::vector<double> MetricValues(const Metrics& m);

}  // namespace wbt::eval

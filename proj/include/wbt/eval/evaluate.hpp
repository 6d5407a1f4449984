#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "wbt/env/tracking_env.hpp"
#include "wbt/eval/metrics.hpp"

namespace wbt::eval {

/// Deterministic controller: builds its input from the env observation with
/// `layout` and maps a batch of inputs (rows) to actions.
struct Controller {
  env::ObsLayout layout;
  std::function<MatX(const MatX&)> act;
};

struct EvalConfig {
  env::EnvConfig env;  // reset_period is forced to 1 (strict local tracking)
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4};
  bool keep_traces = false;
};

struct EvalResult {
  MetricReport report;
  std::vector<EpisodeTrace> traces;  // first seed, when keep_traces
};

/// Runs each clip from its first frame once per seed and aggregates.
EvalResult EvaluatePolicy(std::shared_ptr<const sim::HumanoidModel> model,
                          std::shared_ptr<const std::vector<motion::MotionClip>> clips, const Controller& controller,
                          const EvalConfig& cfg);

/// One episode of `clip_index` from frame 0.
EpisodeTrace RunEpisode(env::TrackingEnv& env, int clip_index, const Controller& controller);

}  // namespace wbt::eval

#include "wbt/eval/evaluate.hpp"

#include "wbt/core/errors.hpp"

namespace wbt::eval {

EpisodeTrace RunEpisode(env::TrackingEnv& env, int clip_index, const Controller& controller) {
  env.ResetTo(clip_index, 0);
  EpisodeTrace trace;
  trace.clip_name = env.clip().name;
  while (true) {
    const VecX obs = controller.layout.Build(env.observation());
    const MatX action = controller.act(obs.transpose());
    if (action.rows() != 1 || action.cols() != env.model().num_joints()) {
      throw DataError("controller produced " + std::to_string(action.cols()) + " actions for a " +
                      std::to_string(env.model().num_joints()) + "-joint model");
    }
    const env::StepResult r = env.Step(action.row(0).transpose());
    trace.robot.push_back(r.robot);
    trace.reference.push_back(r.reference);
    trace.tracking_reward.push_back(r.reward.tracking());
    if (r.terminated) return trace;
    if (r.truncated) {
      trace.completed = true;
      return trace;
    }
  }
}

EvalResult EvaluatePolicy(std::shared_ptr<const sim::HumanoidModel> model,
                          std::shared_ptr<const std::vector<motion::MotionClip>> clips, const Controller& controller,
                          const EvalConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("evaluation needs at least one seed");
  env::EnvConfig ecfg = cfg.env;
  ecfg.reset_period = 1;
  ecfg.max_episode_s = 0.0;
  ecfg.history_length = std::max(ecfg.history_length, controller.layout.history);
  EvalResult result;
  std::vector<MetricReport> per_seed;
  for (size_t s = 0; s < cfg.seeds.size(); ++s) {
    env::TrackingEnv env(model, clips, ecfg, env::DeriveSeed(cfg.seeds[s], 17));
    std::vector<EpisodeTrace> episodes;
    for (int c = 0; c < static_cast<int>(clips->size()); ++c) episodes.push_back(RunEpisode(env, c, controller));
    per_seed.push_back(Aggregate(*model, episodes));
    if (s == 0 && cfg.keep_traces) result.traces = std::move(episodes);
  }
  result.report = CombineSeeds(per_seed);
  return result;
}

}  // namespace wbt::eval

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "wbt/app/commands.hpp"
#include "wbt/core/errors.hpp"

namespace wbt::app {

namespace {

struct CommonFlags {
  std::string run_dir;
  std::string config_path;
  std::string preset;
  std::optional<uint64_t> seed;
  std::string model;
  bool quiet = false;
};

void AddCommon(CLI::App* cmd, CommonFlags* f) {
  cmd->add_option("--run", f->run_dir, "Run directory for artifacts")->required();
  cmd->add_option("--config", f->config_path, "JSON config (a snapshot from config/ works too)");
  cmd->add_option("--preset", f->preset, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));
  cmd->add_option("--seed", f->seed, "Seed (falls back to the config, then EXB2_SEED)");
  cmd->add_option("--model", f->model, "Model name or file");
  cmd->add_flag("-q,--quiet", f->quiet, "No progress output");
}

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

RunConfig Resolve(const CommonFlags& f) {
  ConfigOverrides o;
  if (!f.preset.empty()) o.preset = f.preset;
  if (!f.model.empty()) o.model = f.model;
  o.seed = f.seed;
  if (f.config_path.empty()) return ResolveConfig(nullptr, o);
  const nlohmann::json j = ReadJsonFile(f.config_path);
  return ResolveConfig(&j, o);
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Whole-body humanoid tracking: curation, teacher/student training, motion CVAE, evaluation"};
  app.require_subcommand(1);
  CommonFlags common;

  // Flag values kept outside the config until it is resolved.
  std::string input, data, teacher, student, cvae_ckpt, seed_clip, spec_path, axis, mode;
  std::vector<std::string> ckpts, kinds;
  std::optional<int> updates, iterations, steps;
  std::optional<double> duration;
  std::vector<uint64_t> eval_seeds;
  bool plots = false, latency = false;
  std::string clip_out;
  std::string clip_model = "test_12dof";
  uint64_t clip_seed = 0;
  double clip_duration = 0.0;

  auto* curate = app.add_subcommand("curate", "Filter raw clips into a curated set");
  AddCommon(curate, &common);
  curate->add_option("--in", input, "Directory of .mclip files")->required();

  auto* train_teacher = app.add_subcommand("train-teacher", "PPO teacher with privileged observations");
  AddCommon(train_teacher, &common);
  train_teacher->add_option("--data", data, "Curated clip directory (default <run>/curated)");
  train_teacher->add_option("--updates", updates, "PPO updates");

  auto* distill = app.add_subcommand("distill", "DAgger student from a teacher checkpoint");
  AddCommon(distill, &common);
  distill->add_option("--data", data, "Curated clip directory (default <run>/curated)");
  distill->add_option("--teacher", teacher, "Teacher checkpoint (default <run>/teacher.ckpt)");
  distill->add_option("--iterations", iterations, "Maximum DAgger iterations");

  auto* train_cvae = app.add_subcommand("train-cvae", "Motion CVAE on the curated set");
  AddCommon(train_cvae, &common);
  train_cvae->add_option("--data", data, "Curated clip directory (default <run>/curated)");
  train_cvae->add_option("--steps", steps, "Optimizer steps");

  auto* evaluate = app.add_subcommand("eval", "Tracking metrics of teacher or student checkpoints");
  AddCommon(evaluate, &common);
  evaluate->add_option("--ckpt", ckpts, "Policy checkpoint (repeatable)")->required();
  evaluate->add_option("--data", data, "Clip directory (default <run>/curated)");
  evaluate->add_flag("--plots", plots, "Per-frame CSV and SVG plot");
  evaluate->add_option("--mode", mode, "Tracking mode override: local_decomposed, global, upper_body_only");
  evaluate->add_flag("--latency", latency, "Random command delay");
  evaluate->add_option("--eval-seeds", eval_seeds, "Evaluation seeds");

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate one ablation axis");
  AddCommon(ablate, &common);
  ablate->add_option("--data", data, "Curated clip directory (default <run>/curated)");
  ablate->add_option("--spec", spec_path, "Ablation spec JSON (the config's ablation section)");
  ablate->add_option("--axis", axis, "history, reset, dagger, dataset or mode");

  auto* synthesize = app.add_subcommand("synthesize", "Autoregressive motion from a seed clip");
  AddCommon(synthesize, &common);
  synthesize->add_option("--cvae", cvae_ckpt, "CVAE checkpoint (default <run>/cvae.ckpt)");
  synthesize->add_option("--seed-clip", seed_clip, "Seed .mclip")->required();
  synthesize->add_option("--duration", duration, "Output length in seconds, seed included");
  synthesize->add_option("--track", student, "Policy checkpoint that tracks the generated clip");

  auto* synth_clips = app.add_subcommand("synth-clips", "Write procedural raw clips for curate");
  synth_clips->add_option("--out", clip_out, "Output directory")->required();
  synth_clips->add_option("--kind", kinds, "stand, walk, squat, arm_wave, turn, run, hop (repeatable)")->required();
  synth_clips->add_option("--model", clip_model, "Model name or file");
  synth_clips->add_option("--duration", clip_duration, "Seconds (default per kind)");
  synth_clips->add_option("--seed", clip_seed, "Seed");

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth_clips->parsed()) {
      CmdSynthClips(clip_model, kinds, clip_duration, clip_seed, clip_out);
      return kExitOk;
    }
    RunConfig cfg = Resolve(common);
    if (!input.empty()) cfg.paths.input = input;
    if (!data.empty()) cfg.paths.data = data;
    if (!teacher.empty()) cfg.paths.teacher = teacher;
    if (!student.empty()) cfg.paths.student = student;
    if (!cvae_ckpt.empty()) cfg.paths.cvae = cvae_ckpt;
    if (!seed_clip.empty()) cfg.paths.seed_clip = seed_clip;
    if (!ckpts.empty()) cfg.paths.checkpoints = ckpts;
    if (updates) cfg.teacher.updates = *updates;
    if (iterations) cfg.student.max_iterations = *iterations;
    if (steps) cfg.cvae.total_steps = *steps;
    if (duration) cfg.synth_duration = *duration;
    if (!eval_seeds.empty()) cfg.eval.seeds = eval_seeds;
    if (plots) cfg.eval.plots = true;
    if (latency) cfg.eval.latency = true;
    if (!mode.empty()) {
      const auto m = env::ParseTrackingMode(mode);
      if (!m) throw ConfigError("unknown tracking mode '" + mode + "'");
      cfg.eval.mode = *m;
    }
    if (!spec_path.empty()) cfg.ablation = eval::AblationSpec::FromJson(ReadJsonFile(spec_path), cfg.ablation);
    if (!axis.empty()) {
      const auto a = eval::ParseAblationAxis(axis);
      if (!a) throw ConfigError("unknown ablation axis '" + axis + "'");
      cfg.ablation.axis = *a;
    }
    cfg.Validate();

    const RunContext ctx{common.run_dir, common.quiet ? nullptr : &err};
    if (curate->parsed()) CmdCurate(cfg, ctx);
    else if (train_teacher->parsed()) CmdTrainTeacher(cfg, ctx);
    else if (distill->parsed()) CmdDistill(cfg, ctx);
    else if (train_cvae->parsed()) CmdTrainCvae(cfg, ctx);
    else if (evaluate->parsed()) CmdEval(cfg, ctx);
    else if (ablate->parsed()) CmdAblate(cfg, ctx);
    else if (synthesize->parsed()) CmdSynthesize(cfg, ctx);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const IntegrationFault& e) {
    err << "simulation fault: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

}  // namespace wbt::app

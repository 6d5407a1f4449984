#include "wbt/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wbt/app/manifest.hpp"
#include "wbt/core/errors.hpp"
#include "wbt/env/config_json.hpp"
#include "wbt/motion/clip_io.hpp"
#include "wbt/motion/synth.hpp"
#include "wbt/rl/curve.hpp"

namespace wbt::app {

namespace fs = std::filesystem;

namespace {

void Log(const RunContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << "\n" << std::flush;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

void WriteJson(const fs::path& path, const nlohmann::json& j) { WriteText(path, j.dump(2) + "\n"); }

void BeginRun(const RunConfig& cfg, const RunContext& ctx, const std::string& command) {
  fs::create_directories(ctx.run_dir / "config");
  WriteJson(ctx.run_dir / "config" / (command + ".json"), cfg.ToJson());
}

void EndRun(const RunContext& ctx) { WriteManifest(ctx.run_dir); }

// Fills run-directory defaults for the inputs a command reads so that the
// snapshot names them explicitly.
RunConfig WithInputs(const RunConfig& in, const RunContext& ctx, bool data, bool teacher, bool cvae) {
  RunConfig cfg = in;
  if (data && cfg.paths.data.empty()) cfg.paths.data = (ctx.run_dir / "curated").string();
  if (teacher && cfg.paths.teacher.empty()) cfg.paths.teacher = (ctx.run_dir / "teacher.ckpt").string();
  if (cvae && cfg.paths.cvae.empty()) cfg.paths.cvae = (ctx.run_dir / "cvae.ckpt").string();
  return cfg;
}

std::shared_ptr<const sim::HumanoidModel> LoadModel(const RunConfig& cfg) {
  return std::make_shared<const sim::HumanoidModel>(sim::HumanoidModel::Load(cfg.model));
}

std::vector<fs::path> ClipFiles(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("clip directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".mclip") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Curated clips resampled to the policy rate.
std::shared_ptr<const std::vector<motion::MotionClip>> LoadDataset(const RunConfig& cfg, const sim::HumanoidModel& model) {
  const fs::path dir = cfg.paths.data;
  std::vector<motion::MotionClip> clips;
  for (const auto& f : ClipFiles(dir)) clips.push_back(motion::LoadClip(f));
  if (clips.empty()) throw DataError("no .mclip files in " + dir.string() + " (run curate first or pass --data)");
  for (const auto& c : clips) {
    if (c.num_dofs() != model.num_joints()) {
      throw DataError("clip '" + c.name + "' has " + std::to_string(c.num_dofs()) + " DoF, model " + model.name() +
                      " has " + std::to_string(model.num_joints()));
    }
  }
  return std::make_shared<const std::vector<motion::MotionClip>>(env::ToPolicyRate(clips));
}

nlohmann::json CheckpointMeta(const std::string& path, const std::string& role) {
  if (!fs::exists(path)) throw DataError(role + " checkpoint " + path + " not found");
  return nn::ReadCheckpointMetadata(path);
}

void CheckModel(const nlohmann::json& meta, const sim::HumanoidModel& model, const std::string& path) {
  const std::string m = meta.value("model", "");
  if (m != model.name()) {
    throw ConfigError("checkpoint " + path + " was trained on model '" + m + "', config selects '" + model.name() + "'");
  }
}

std::string Join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

// A checkpoint turned into a deterministic controller. Owns the network.
struct LoadedPolicy {
  std::string kind;
  env::EnvConfig env;
  std::shared_ptr<const rl::GaussianPolicy> teacher;
  std::shared_ptr<const distill::StudentPolicy> student;
  eval::Controller controller;
};

LoadedPolicy LoadPolicy(const std::string& path, const sim::HumanoidModel& model) {
  const nlohmann::json meta = CheckpointMeta(path, "policy");
  CheckModel(meta, model, path);
  LoadedPolicy p;
  p.kind = meta.value("kind", "");
  if (p.kind != "teacher" && p.kind != "student") {
    throw ConfigError("checkpoint " + path + " holds a '" + p.kind + "', not a teacher or student policy");
  }
  try {
    p.env = env::EnvConfigFromJson(meta.at("env"), env::EnvConfig{});
    p.controller.layout = env::ObsLayoutFromJson(meta.at("actor_layout"), env::ObsLayout{});
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path + " has incomplete metadata: " + e.what());
  }
  if (p.kind == "teacher") {
    auto t = std::make_shared<const rl::GaussianPolicy>(rl::GaussianPolicy::Load(path));
    p.teacher = t;
    p.controller.act = [t](const MatX& obs) { return t->ActMean(obs); };
  } else {
    auto s = std::make_shared<const distill::StudentPolicy>(distill::StudentPolicy::Load(path));
    p.student = s;
    p.controller.act = [s](const MatX& obs) { return s->Act(obs); };
  }
  return p;
}

eval::EvalConfig MakeEvalConfig(const RunConfig& cfg, const env::EnvConfig& base, bool traces) {
  eval::EvalConfig e;
  e.env = base;
  if (cfg.eval.mode) e.env.mode = *cfg.eval.mode;
  if (cfg.eval.latency) e.env.command_latency = true;
  e.seeds = cfg.eval.seeds;
  e.keep_traces = traces;
  return e;
}

std::string PerFrameHeader() { return "method,clip,frame,vel,kp_upper,kp_lower,dof_upper,dof_lower\n"; }

nlohmann::json MetricsJson(const eval::Metrics& m) {
  nlohmann::json j = nlohmann::json::object();
  const auto cols = eval::MetricColumns();
  const auto vals = eval::MetricValues(m);
  for (size_t i = 0; i < cols.size(); ++i) j[cols[i]] = vals[i];
  return j;
}

}  // namespace

nlohmann::json ReportToJson(const eval::MetricReport& r) {
  nlohmann::json clips = nlohmann::json::array();
  for (const auto& c : r.clips) {
    clips.push_back({{"clip", c.clip_name}, {"frames", c.frames}, {"completed", c.completed},
                     {"metrics", MetricsJson(c.metrics)}});
  }
  return {{"mean", MetricsJson(r.mean)},
          {"stddev", MetricsJson(r.stddev)},
          {"completion_rate", r.completion_rate},
          {"tracking_reward", r.tracking_reward},
          {"seeds", r.seeds},
          {"clips", clips}};
}

void CmdCurate(const RunConfig& cfg, const RunContext& ctx) {
  if (cfg.paths.input.empty()) throw ConfigError("curate needs an input clip directory (--in)");
  const auto model = LoadModel(cfg);
  std::vector<motion::MotionClip> clips;
  std::vector<std::string> files;
  for (const auto& f : ClipFiles(cfg.paths.input)) {
    clips.push_back(motion::LoadClip(f));
    files.push_back(f.filename().string());
  }
  if (clips.empty()) throw DataError("no .mclip files in " + cfg.paths.input);
  BeginRun(cfg, ctx, "curate");
  const motion::CurationResult res = motion::CurateDataset(*model, clips, cfg.curation);

  const fs::path out_dir = ctx.run_dir / "curated";
  fs::remove_all(out_dir);
  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv << "clip,file,accepted,limit_violation_fraction,max_joint_speed,max_root_speed,foot_slip,airborne_fraction,"
         "diversity,reasons\n";
  nlohmann::json accepted = nlohmann::json::array(), rejected = nlohmann::json::array();
  for (size_t i = 0; i < res.reports.size(); ++i) {
    const auto& r = res.reports[i];
    csv << r.clip_name << "," << files[i] << "," << (r.accepted ? 1 : 0) << ","
        << rl::FormatCell(r.limit_violation_fraction) << "," << rl::FormatCell(r.max_joint_speed) << ","
        << rl::FormatCell(r.max_root_speed) << "," << rl::FormatCell(r.foot_slip) << ","
        << rl::FormatCell(r.airborne_fraction) << "," << rl::FormatCell(r.diversity) << "," << Join(r.reasons, ";")
        << "\n";
    if (r.accepted) {
      motion::SaveClip(clips[i], out_dir / files[i]);
      accepted.push_back(files[i]);
      Log(ctx, "accept " + files[i]);
    } else {
      rejected.push_back({{"file", files[i]}, {"reasons", r.reasons}});
      Log(ctx, "reject " + files[i] + ": " + Join(r.reasons, "; "));
    }
  }
  WriteText(ctx.run_dir / "curation_report.csv", csv.str());
  WriteJson(ctx.run_dir / "curation.json",
            {{"accepted", accepted}, {"rejected", rejected}, {"upper_body_diversity", res.diversity}});
  EndRun(ctx);
  if (res.accepted.empty()) {
    throw DataError("no clip passed curation (" + std::to_string(clips.size()) +
                    " rejected, see curation_report.csv)");
  }
}

void CmdTrainTeacher(const RunConfig& in, const RunContext& ctx) {
  const RunConfig cfg = WithInputs(in, ctx, true, false, false);
  const auto model = LoadModel(cfg);
  const auto clips = LoadDataset(cfg, *model);
  BeginRun(cfg, ctx, "train-teacher");
  const int every = std::max(1, cfg.teacher.updates / 20);
  const auto progress = [&](const rl::UpdateStats& s) {
    if (s.update % every == 0 || s.update == cfg.teacher.updates) {
      std::ostringstream line;
      line << "teacher update " << s.update << "/" << cfg.teacher.updates
           << " reward " << rl::FormatCell(s.mean_reward) << " std " << rl::FormatCell(s.action_std);
      Log(ctx, line.str());
    }
  };
  try {
    rl::TrainTeacher(model, clips, cfg.teacher, cfg.seed, (ctx.run_dir / "teacher.ckpt").string(),
                     (ctx.run_dir / "teacher_curve.csv").string(), progress);
  } catch (const DivergenceError&) {
    EndRun(ctx);
    throw;
  }
  EndRun(ctx);
}

void CmdDistill(const RunConfig& in, const RunContext& ctx) {
  const RunConfig cfg = WithInputs(in, ctx, true, true, false);
  const auto model = LoadModel(cfg);
  const std::string& teacher_path = cfg.paths.teacher;
  if (!fs::exists(teacher_path)) {
    throw DataError("distill needs a teacher checkpoint: " + teacher_path +
                    " not found (run train-teacher first or pass --teacher)");
  }
  const nlohmann::json meta = nn::ReadCheckpointMetadata(teacher_path);
  if (meta.value("kind", "") != "teacher") throw ConfigError(teacher_path + " is not a teacher checkpoint");
  CheckModel(meta, *model, teacher_path);
  const auto clips = LoadDataset(cfg, *model);
  const rl::GaussianPolicy teacher = rl::GaussianPolicy::Load(teacher_path);
  env::EnvConfig env_cfg;
  env::ObsLayout layout;
  try {
    env_cfg = env::EnvConfigFromJson(meta.at("env"), env::EnvConfig{});
    layout = env::ObsLayoutFromJson(meta.at("actor_layout"), env::ObsLayout{});
  } catch (const nlohmann::json::exception& e) {
    throw DataError("teacher checkpoint metadata is incomplete: " + std::string(e.what()));
  }
  BeginRun(cfg, ctx, "distill");
  const auto progress = [&](const distill::StudentIteration& it) {
    Log(ctx, "student iteration " + std::to_string(it.iteration) + " mse " + rl::FormatCell(it.mse) + " buffer " +
                 std::to_string(it.buffer_size));
  };
  const auto res = distill::TrainStudent(model, clips, env_cfg, teacher, layout, cfg.student, cfg.seed,
                                         (ctx.run_dir / "student.ckpt").string(),
                                         (ctx.run_dir / "student_curve.csv").string(), {}, progress);
  Log(ctx, "student mse " + rl::FormatCell(res.initial_mse) + " -> " +
               rl::FormatCell(res.curve.empty() ? res.initial_mse : res.curve.back().mse));
  EndRun(ctx);
}

void CmdTrainCvae(const RunConfig& in, const RunContext& ctx) {
  const RunConfig cfg = WithInputs(in, ctx, true, false, false);
  const auto model = LoadModel(cfg);
  const auto clips = LoadDataset(cfg, *model);
  BeginRun(cfg, ctx, "train-cvae");
  const int every = std::max(1, cfg.cvae.total_steps / 20);
  const auto progress = [&](int step, const std::array<double, 4>& l) {
    if ((step + 1) % every == 0) {
      Log(ctx, "cvae step " + std::to_string(step + 1) + "/" + std::to_string(cfg.cvae.total_steps) + " loss " +
                   rl::FormatCell(l[0]));
    }
  };
  try {
    cvae::TrainCvae(*model, *clips, cfg.cvae, cfg.seed, (ctx.run_dir / "cvae.ckpt").string(),
                    (ctx.run_dir / "cvae_curve.csv").string(), progress);
  } catch (const DivergenceError&) {
    EndRun(ctx);
    throw;
  }
  EndRun(ctx);
}

void CmdEval(const RunConfig& in, const RunContext& ctx) {
  const RunConfig cfg = WithInputs(in, ctx, true, false, false);
  if (cfg.paths.checkpoints.empty()) throw ConfigError("eval needs at least one checkpoint (--ckpt)");
  const auto model = LoadModel(cfg);
  const auto clips = LoadDataset(cfg, *model);
  std::vector<std::pair<std::string, LoadedPolicy>> policies;
  for (const auto& path : cfg.paths.checkpoints) {
    std::string name = fs::path(path).stem().string();
    for (const auto& [other, _] : policies) {
      if (other == name) name += "_" + std::to_string(policies.size());
    }
    policies.emplace_back(name, LoadPolicy(path, *model));
  }
  BeginRun(cfg, ctx, "eval");
  std::vector<eval::AblationRow> rows;
  nlohmann::json report = nlohmann::json::object();
  std::string per_frame = PerFrameHeader();
  std::vector<std::pair<std::string, eval::EpisodeTrace>> series;
  for (const auto& [name, p] : policies) {
    const eval::EvalResult r =
        eval::EvaluatePolicy(model, clips, p.controller, MakeEvalConfig(cfg, p.env, cfg.eval.plots));
    rows.push_back({name, r.report, {}, ""});
    report[name] = ReportToJson(r.report);
    Log(ctx, name + ": E_vel " + rl::FormatCell(r.report.mean.e_vel) + " completion " +
                 rl::FormatCell(r.report.completion_rate));
    if (cfg.eval.plots) {
      per_frame += eval::PerFrameCsv(*model, name, r.traces);
      if (!r.traces.empty()) series.emplace_back(name, r.traces.front());
    }
  }
  eval::WriteComparisonCsv((ctx.run_dir / "eval_metrics.csv").string(), rows);
  WriteJson(ctx.run_dir / "eval_report.json", report);
  if (cfg.eval.plots) {
    WriteText(ctx.run_dir / "eval_per_frame.csv", per_frame);
    WriteText(ctx.run_dir / "eval_per_frame.svg", eval::PerFrameSvg(*model, series));
  }
  EndRun(ctx);
}

void CmdAblate(const RunConfig& in, const RunContext& ctx) {
  const RunConfig cfg = WithInputs(in, ctx, true, false, false);
  const auto model = LoadModel(cfg);
  const auto clips = LoadDataset(cfg, *model);
  BeginRun(cfg, ctx, "ablate");
  const eval::AblationTable table =
      eval::RunAblation(model, clips, clips, cfg.ablation, [&](const std::string& s) { Log(ctx, s); });
  const std::string axis(eval::AblationAxisName(table.axis));
  eval::WriteComparisonCsv((ctx.run_dir / ("ablation_" + axis + ".csv")).string(), table.rows);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"method", r.method}, {"report", ReportToJson(r.report)}, {"seed_e_vel", r.seed_e_vel},
                    {"error", r.error}});
  }
  WriteJson(ctx.run_dir / ("ablation_" + axis + ".json"),
            {{"axis", axis}, {"rows", rows}, {"findings", table.findings}});
  for (const auto& f : table.findings) Log(ctx, f);
  EndRun(ctx);
}

void CmdSynthesize(const RunConfig& in, const RunContext& ctx) {
  const RunConfig cfg = WithInputs(in, ctx, false, false, true);
  const auto model = LoadModel(cfg);
  const std::string& cvae_path = cfg.paths.cvae;
  CheckModel(CheckpointMeta(cvae_path, "cvae"), *model, cvae_path);
  if (cfg.paths.seed_clip.empty()) throw ConfigError("synthesize needs a seed clip (--seed-clip)");
  const auto net = cvae::MotionCvae::Load(cvae_path);
  const motion::MotionClip seed = env::ToPolicyRate({motion::LoadClip(cfg.paths.seed_clip)}).front();
  if (seed.num_dofs() != model->num_joints()) throw DataError("seed clip DoF count does not match the model");
  const int context = net->config().context;
  if (seed.num_frames() < context) {
    throw DataError("seed clip has " + std::to_string(seed.num_frames()) + " frames at 50 Hz, the model needs at least " +
                    std::to_string(context));
  }
  std::optional<LoadedPolicy> tracker;
  if (!cfg.paths.student.empty()) tracker = LoadPolicy(cfg.paths.student, *model);

  BeginRun(cfg, ctx, "synthesize");
  const int total = static_cast<int>(std::lround(cfg.synth_duration / sim::kPolicyDt));
  const int steps = std::max(0, total - seed.num_frames());
  const cvae::SynthesisResult res = cvae::SynthesizeStream(*net, *model, seed, steps);
  motion::MotionClip clip = res.clip;
  clip.name = seed.name + "_synth";
  motion::SaveClip(clip, ctx.run_dir / "synth.mclip");
  Log(ctx, "synthesized " + std::to_string(res.generated) + " frames, clip has " + std::to_string(clip.num_frames()));
  if (res.aborted) {
    EndRun(ctx);
    throw DivergenceError("synthesis produced a non-finite frame after " + std::to_string(res.generated) +
                          " frames; the partial clip was written");
  }
  if (tracker) {
    const auto clips = std::make_shared<const std::vector<motion::MotionClip>>(std::vector{clip});
    const eval::EvalResult r = eval::EvaluatePolicy(model, clips, tracker->controller,
                                                    MakeEvalConfig(cfg, tracker->env, false));
    eval::WriteComparisonCsv((ctx.run_dir / "synth_metrics.csv").string(), {{tracker->kind, r.report, {}, ""}});
    WriteJson(ctx.run_dir / "synth_report.json", ReportToJson(r.report));
    Log(ctx, "tracking: E_vel " + rl::FormatCell(r.report.mean.e_vel) + " completion " +
                 rl::FormatCell(r.report.completion_rate));
  }
  EndRun(ctx);
}

void CmdSynthClips(const std::string& model_name, const std::vector<std::string>& kinds, double duration,
                   uint64_t seed, const fs::path& out_dir) {
  if (kinds.empty()) throw ConfigError("no clip kinds given");
  const sim::HumanoidModel model = sim::HumanoidModel::Load(model_name);
  fs::create_directories(out_dir);
  for (size_t i = 0; i < kinds.size(); ++i) {
    const auto kind = motion::ParseMotionKind(kinds[i]);
    if (!kind) throw ConfigError("unknown motion kind '" + kinds[i] + "'");
    motion::SynthParams p = motion::DefaultSynthParams(*kind);
    if (duration > 0.0) p.duration = duration;
    motion::SaveClip(motion::SynthClip(model, *kind, p, seed + i), out_dir / (kinds[i] + ".mclip"));
  }
}

}  // namespace wbt::app

#include "wbt/app/run_config.hpp"

#include <cstdlib>
#include <string>

#include "wbt/core/errors.hpp"
#include "wbt/env/config_json.hpp"

namespace wbt::app {
namespace {

uint64_t ParseSeed(const std::string& text, const std::string& source) {
  size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || text.front() == '-') {
    throw ConfigError(source + " must be a non-negative integer, got '" + text + "'");
  }
  return v;
}

EvalSettings EvalFromJson(const nlohmann::json& j, const EvalSettings& base) {
  if (!j.is_object()) throw ConfigError("eval config must be a JSON object");
  EvalSettings e = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "seeds") {
      e.seeds = value.get<std::vector<uint64_t>>();
    } else if (key == "mode") {
      if (value.is_null()) {
        e.mode.reset();
      } else {
        const auto m = env::ParseTrackingMode(value.get<std::string>());
        if (!m) throw ConfigError("unknown tracking mode '" + value.get<std::string>() + "'");
        e.mode = *m;
      }
    } else if (key == "latency") {
      e.latency = value.get<bool>();
    } else if (key == "plots") {
      e.plots = value.get<bool>();
    } else {
      throw ConfigError("unknown eval key '" + key + "'");
    }
  }
  return e;
}

nlohmann::json EvalToJson(const EvalSettings& e) {
  nlohmann::json j = {{"seeds", e.seeds}, {"latency", e.latency}, {"plots", e.plots}};
  j["mode"] = e.mode ? nlohmann::json(std::string(env::TrackingModeName(*e.mode))) : nlohmann::json(nullptr);
  return j;
}

InputPaths PathsFromJson(const nlohmann::json& j, const InputPaths& base) {
  if (!j.is_object()) throw ConfigError("paths must be a JSON object");
  InputPaths p = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "input") p.input = value.get<std::string>();
    else if (key == "data") p.data = value.get<std::string>();
    else if (key == "teacher") p.teacher = value.get<std::string>();
    else if (key == "student") p.student = value.get<std::string>();
    else if (key == "cvae") p.cvae = value.get<std::string>();
    else if (key == "seed_clip") p.seed_clip = value.get<std::string>();
    else if (key == "checkpoints") p.checkpoints = value.get<std::vector<std::string>>();
    else throw ConfigError("unknown paths key '" + key + "'");
  }
  return p;
}

nlohmann::json PathsToJson(const InputPaths& p) {
  return {{"input", p.input},   {"data", p.data},           {"teacher", p.teacher},        {"student", p.student},
          {"cvae", p.cvae},     {"seed_clip", p.seed_clip}, {"checkpoints", p.checkpoints}};
}

}  // namespace

nlohmann::json ToJson(const motion::CurationConfig& c) {
  return {{"max_limit_violation_fraction", c.max_limit_violation_fraction},
          {"max_joint_speed", c.max_joint_speed},
          {"max_root_speed", c.max_root_speed},
          {"max_airborne_fraction", c.max_airborne_fraction},
          {"max_foot_slip", c.max_foot_slip},
          {"contact_height", c.contact_height},
          {"diversity_bins", c.diversity_bins}};
}

motion::CurationConfig CurationFromJson(const nlohmann::json& j, const motion::CurationConfig& base) {
  if (!j.is_object()) throw ConfigError("curation config must be a JSON object");
  motion::CurationConfig c = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "max_limit_violation_fraction") c.max_limit_violation_fraction = value.get<double>();
      else if (key == "max_joint_speed") c.max_joint_speed = value.get<double>();
      else if (key == "max_root_speed") c.max_root_speed = value.get<double>();
      else if (key == "max_airborne_fraction") c.max_airborne_fraction = value.get<double>();
      else if (key == "max_foot_slip") c.max_foot_slip = value.get<double>();
      else if (key == "contact_height") c.contact_height = value.get<double>();
      else if (key == "diversity_bins") c.diversity_bins = value.get<int>();
      else throw ConfigError("unknown curation key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("curation config: ") + e.what());
  }
  c.Validate();
  return c;
}

void RunConfig::Validate() const {
  if (preset != "paper" && preset != "desk") throw ConfigError("preset must be 'paper' or 'desk', got '" + preset + "'");
  if (model.empty()) throw ConfigError("model name is empty");
  if (eval.seeds.empty()) throw ConfigError("eval needs at least one seed");
  if (!(synth_duration > 0.0)) throw ConfigError("synthesis duration must be positive");
  curation.Validate();
  teacher.Validate();
  student.Validate();
  cvae.Validate();
  ablation.Validate();
}

nlohmann::json RunConfig::ToJson() const {
  return {{"preset", preset},
          {"seed", seed},
          {"model", model},
          {"curation", app::ToJson(curation)},
          {"teacher", teacher.ToJson()},
          {"student", student.ToJson()},
          {"cvae", cvae.ToJson()},
          {"eval", EvalToJson(eval)},
          {"ablation", ablation.ToJson()},
          {"synth_duration", synth_duration},
          {"paths", PathsToJson(paths)}};
}

void ApplyDeskPreset(RunConfig* cfg) {
  cfg->preset = "desk";
  cfg->model = "test_12dof";

  rl::TeacherConfig& t = cfg->teacher;
  t.num_envs = 64;
  t.ppo.steps_per_env = 24;
  t.updates = 600;
  t.actor_hidden = t.critic_hidden = {128, 64};
  t.ppo.lr = 5e-4;
  t.init_std = 0.3;

  distill::StudentConfig& s = cfg->student;
  s.hidden = {128, 64};
  s.lr = 1e-3;
  s.batch = 512;
  s.buffer_capacity = 40000;
  s.num_envs = 32;
  s.updates_per_iteration = 10;
  s.max_iterations = 40;

  cfg->cvae = cvae::CvaeConfig::Desk();
  cfg->eval.seeds = {0, 1, 2};

  cfg->ablation.histories = {0, 10, 25};
  cfg->ablation.seeds = {0, 1, 2};
}

RunConfig ResolveConfig(const nlohmann::json* file, const ConfigOverrides& overrides) {
  if (file && !file->is_object()) throw ConfigError("config file must hold a JSON object");
  RunConfig cfg;

  std::string preset = "paper";
  if (file && file->contains("preset")) {
    if (!(*file)["preset"].is_string()) throw ConfigError("preset must be a string");
    preset = (*file)["preset"].get<std::string>();
  }
  if (overrides.preset) preset = *overrides.preset;
  if (preset == "desk") ApplyDeskPreset(&cfg);
  else if (preset != "paper") throw ConfigError("preset must be 'paper' or 'desk', got '" + preset + "'");
  cfg.preset = preset;

  bool seed_set = false;
  // Ablation cells default to the run's teacher and student; its own section
  // is applied after those.
  const nlohmann::json* ablation_json = nullptr;
  if (file) {
    try {
      for (const auto& [key, value] : file->items()) {
        if (key == "preset") {
          continue;
        } else if (key == "seed") {
          cfg.seed = value.get<uint64_t>();
          seed_set = true;
        } else if (key == "model") {
          cfg.model = value.get<std::string>();
        } else if (key == "curation") {
          cfg.curation = CurationFromJson(value, cfg.curation);
        } else if (key == "teacher") {
          cfg.teacher = rl::TeacherConfig::FromJson(value, cfg.teacher);
        } else if (key == "student") {
          cfg.student = distill::StudentConfig::FromJson(value, cfg.student);
        } else if (key == "cvae") {
          cfg.cvae = cvae::CvaeConfig::FromJson(value, cfg.cvae);
        } else if (key == "eval") {
          cfg.eval = EvalFromJson(value, cfg.eval);
        } else if (key == "ablation") {
          ablation_json = &value;
        } else if (key == "synth_duration") {
          cfg.synth_duration = value.get<double>();
        } else if (key == "paths") {
          cfg.paths = PathsFromJson(value, cfg.paths);
        } else {
          throw ConfigError("unknown config key '" + key + "'");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  cfg.ablation.teacher = cfg.teacher;
  cfg.ablation.student = cfg.student;
  cfg.ablation.eval.seeds = cfg.eval.seeds;
  if (ablation_json) cfg.ablation = eval::AblationSpec::FromJson(*ablation_json, cfg.ablation);

  if (overrides.seed) {
    cfg.seed = *overrides.seed;
  } else if (!seed_set) {
    if (const char* env_seed = std::getenv("EXB2_SEED"); env_seed && *env_seed) {
      cfg.seed = ParseSeed(env_seed, "EXB2_SEED");
    }
  }
  if (overrides.model) cfg.model = *overrides.model;
  cfg.Validate();
  return cfg;
}

}  // namespace wbt::app

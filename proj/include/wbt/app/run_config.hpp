#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wbt/cvae/cvae.hpp"
#include "wbt/distill/student.hpp"
#include "wbt/eval/ablation.hpp"
#include "wbt/motion/curation.hpp"
#include "wbt/rl/teacher.hpp"

namespace wbt::app {

/// Input artifacts of a command. Empty entries fall back to the run
/// directory defaults (curated/, teacher.ckpt, student.ckpt, cvae.ckpt).
struct InputPaths {
  std::string input;  // raw clip directory for curate
  std::string data;   // curated clip directory
  std::string teacher;
  std::string student;
  std::string cvae;
  std::string seed_clip;
  std::vector<std::string> checkpoints;  // eval
};

struct EvalSettings {
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4};
  std::optional<env::TrackingMode> mode;  // overrides the checkpoint's mode
  bool latency = false;
  bool plots = false;
};

struct RunConfig {
  std::string preset = "paper";
  uint64_t seed = 0;
  std::string model = "g1_like_23dof";
  motion::CurationConfig curation;
  rl::TeacherConfig teacher;
  distill::StudentConfig student;
  cvae::CvaeConfig cvae;
  EvalSettings eval;
  eval::AblationSpec ablation;
  double synth_duration = 10.0;  // s, seed included
  InputPaths paths;

  void Validate() const;
  nlohmann::json ToJson() const;
};

/// Laptop-sized overlay of the defaults.
void ApplyDeskPreset(RunConfig* cfg);

struct ConfigOverrides {
  std::optional<std::string> preset;
  std::optional<uint64_t> seed;
  std::optional<std::string> model;
};

/// Defaults, then the preset, then `file` (if any), then the overrides.
/// Seed precedence: override, file, EXB2_SEED, 0. Unknown keys throw ConfigError.
RunConfig ResolveConfig(const nlohmann::json* file, const ConfigOverrides& overrides);

nlohmann::json ToJson(const motion::CurationConfig& c);
motion::CurationConfig CurationFromJson(const nlohmann::json& j, const motion::CurationConfig& base);

}  // namespace wbt::app

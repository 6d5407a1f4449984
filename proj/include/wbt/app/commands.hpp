#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wbt/app/run_config.hpp"
#include "wbt/eval/metrics.hpp"

namespace wbt::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDivergence = 4;

/// Where a command writes and where it reports progress (null: silent).
struct RunContext {
  std::filesystem::path run_dir;
  std::ostream* log = nullptr;
};

// Every command writes its artifacts under run_dir, the resolved config as
// config/<command>.json and refreshes manifest.sha256.

/// Reads <input>/*.mclip, writes accepted clips to curated/ and the report to
/// curation_report.csv and curation.json. Throws DataError if nothing passes.
void CmdCurate(const RunConfig& cfg, const RunContext& ctx);
/// teacher.ckpt, teacher_curve.csv
void CmdTrainTeacher(const RunConfig& cfg, const RunContext& ctx);
/// student.ckpt, student_curve.csv. Needs a teacher checkpoint.
void CmdDistill(const RunConfig& cfg, const RunContext& ctx);
/// cvae.ckpt, cvae_curve.csv
void CmdTrainCvae(const RunConfig& cfg, const RunContext& ctx);
/// eval_metrics.csv, eval_report.json and with plots eval_per_frame.{csv,svg}.
void CmdEval(const RunConfig& cfg, const RunContext& ctx);
/// ablation_<axis>.csv and ablation_<axis>.json
void CmdAblate(const RunConfig& cfg, const RunContext& ctx);
/// synth.mclip; with a student checkpoint also synth_metrics.csv and synth_report.json.
void CmdSynthesize(const RunConfig& cfg, const RunContext& ctx);

/// Writes procedural clips <kind>.mclip into `out_dir` (raw data for curate).
void CmdSynthClips(const std::string& model_name, const std::vector<std::string>& kinds, double duration,
                   uint64_t seed, const std::filesystem::path& out_dir);

nlohmann::json ReportToJson(const eval::MetricReport& report);

/// Parses `args` (args[0] is the program name), runs the command and maps
/// errors to exit codes: config 2, data 3, divergence 4, anything else 1.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wbt::app

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wbt/distill/student.hpp"
#include "wbt/eval/evaluate.hpp"
#include "wbt/rl/teacher.hpp"

namespace wbt::eval {

enum class AblationAxis { kHistory, kReset, kDagger, kDataset, kMode };

std::string_view AblationAxisName(AblationAxis axis);
std::optional<AblationAxis> ParseAblationAxis(std::string_view name);

enum class DatasetVariant { kSmall, kMedium, kNoisy };

std::string_view DatasetVariantName(DatasetVariant v);

/// Synthetic training sets of growing breadth:
///   small:  static stands and squats
///   medium: small plus arm waves, walks and turns
///   noisy:  medium plus hops and over-fast runs that fail curation
std::vector<motion::MotionClip> BuildDatasetVariant(const sim::HumanoidModel& model, DatasetVariant v, uint64_t seed);

struct AblationSpec {
  AblationAxis axis = AblationAxis::kHistory;
  std::vector<int> histories = {0, 10, 25, 50, 100};
  std::vector<uint64_t> seeds = {0};
  rl::TeacherConfig teacher;
  distill::StudentConfig student;
  EvalConfig eval;

  void Validate() const;
  nlohmann::json ToJson() const;
  static AblationSpec FromJson(const nlohmann::json& j, const AblationSpec& base);
};

/// One trained-and-evaluated configuration.
struct CellSpec {
  std::string method;
  rl::TeacherConfig teacher;
  distill::StudentConfig student;
  bool dagger = true;  // false: a single PPO stage on the student layout
  DatasetVariant dataset = DatasetVariant::kMedium;
  bool custom_dataset = false;
};

struct AblationRow {
  std::string method;
  MetricReport report;           // combined over training seeds
  std::vector<double> seed_e_vel;  // one per training seed
  std::string error;             // non-empty when a cell failed
};

struct AblationTable {
  AblationAxis axis = AblationAxis::kHistory;
  std::vector<AblationRow> rows;
  std::vector<std::string> findings;  // directional checks, informational
};

/// Cells of an axis in table order.
std::vector<CellSpec> AblationCells(const AblationSpec& spec);

/// Trains every cell for every seed and evaluates on `eval_clips`. Teachers
/// are shared between cells with identical teacher config, data and seed.
/// A failing cell is recorded in its row and the table is still produced.
AblationTable RunAblation(std::shared_ptr<const sim::HumanoidModel> model,
                          std::shared_ptr<const std::vector<motion::MotionClip>> train_clips,
                          std::shared_ptr<const std::vector<motion::MotionClip>> eval_clips, const AblationSpec& spec,
                          const std::function<void(const std::string&)>& log = {});

/// Header "method,E_vel,E_mpkpe,...,E_mpjpe_lower", then one row per method.
std::string ComparisonCsv(const std::vector<AblationRow>& rows);
void WriteComparisonCsv(const std::string& path, const std::vector<AblationRow>& rows);

/// Long-format per-frame errors: method,clip,frame,vel,kp_upper,kp_lower,dof_upper,dof_lower.
std::string PerFrameCsv(const sim::HumanoidModel& model, const std::string& method,
                        const std::vector<EpisodeTrace>& traces);

/// Standalone SVG line plot of per-frame velocity, upper and lower DoF error
/// of one episode per named series.
std::string PerFrameSvg(const sim::HumanoidModel& model,
                        const std::vector<std::pair<std::string, EpisodeTrace>>& series);

}  // namespace wbt::eval

#include "wbt/eval/ablation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "wbt/core/errors.hpp"
#include "wbt/env/config_json.hpp"
#include "wbt/motion/synth.hpp"
#include "wbt/rl/curve.hpp"

namespace wbt::eval {

namespace {

constexpr std::pair<AblationAxis, std::string_view> kAxisNames[] = {
    {AblationAxis::kHistory, "history"}, {AblationAxis::kReset, "reset"},  {AblationAxis::kDagger, "dagger"},
    {AblationAxis::kDataset, "dataset"}, {AblationAxis::kMode, "mode"},
};

motion::MotionClip Clip(const sim::HumanoidModel& model, motion::MotionKind kind, motion::SynthParams p,
                        uint64_t seed) {
  p.duration = 3.0;
  return motion::SynthClip(model, kind, p, seed);
}

}  // namespace

std::string_view AblationAxisName(AblationAxis axis) {
  for (const auto& [a, name] : kAxisNames) {
    if (a == axis) return name;
  }
  return "history";
}

std::optional<AblationAxis> ParseAblationAxis(std::string_view name) {
  for (const auto& [a, n] : kAxisNames) {
    if (n == name) return a;
  }
  return std::nullopt;
}

std::string_view DatasetVariantName(DatasetVariant v) {
  switch (v) {
    case DatasetVariant::kSmall: return "small";
    case DatasetVariant::kMedium: return "medium";
    case DatasetVariant::kNoisy: return "noisy";
  }
  return "medium";
}

std::vector<motion::MotionClip> BuildDatasetVariant(const sim::HumanoidModel& model, DatasetVariant v,
                                                    uint64_t seed) {
  using motion::MotionKind;
  using motion::DefaultSynthParams;
  std::vector<motion::MotionClip> out;
  out.push_back(Clip(model, MotionKind::kStand, DefaultSynthParams(MotionKind::kStand), seed + 1));
  out.push_back(Clip(model, MotionKind::kSquat, DefaultSynthParams(MotionKind::kSquat), seed + 2));
  if (v == DatasetVariant::kSmall) return out;
  out.push_back(Clip(model, MotionKind::kArmWave, DefaultSynthParams(MotionKind::kArmWave), seed + 3));
  out.push_back(Clip(model, MotionKind::kWalk, DefaultSynthParams(MotionKind::kWalk), seed + 4));
  out.push_back(Clip(model, MotionKind::kTurn, DefaultSynthParams(MotionKind::kTurn), seed + 5));
  if (v == DatasetVariant::kMedium) return out;
  out.push_back(Clip(model, MotionKind::kHop, DefaultSynthParams(MotionKind::kHop), seed + 6));
  motion::SynthParams fast = DefaultSynthParams(MotionKind::kRun);
  fast.stride = 1.5;
  fast.frequency = 3.0;
  out.push_back(Clip(model, MotionKind::kRun, fast, seed + 7));
  out.back().name += "_overfast";
  return out;
}

void AblationSpec::Validate() const {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  if (axis == AblationAxis::kHistory && histories.empty()) throw ConfigError("history ablation needs values");
  for (int h : histories) {
    if (h < 0) throw ConfigError("history values must be >= 0");
  }
  teacher.Validate();
  student.Validate();
}

nlohmann::json AblationSpec::ToJson() const {
  return {{"axis", std::string(AblationAxisName(axis))},
          {"histories", histories},
          {"seeds", seeds},
          {"teacher", teacher.ToJson()},
          {"student", student.ToJson()},
          {"eval_seeds", eval.seeds}};
}

AblationSpec AblationSpec::FromJson(const nlohmann::json& j, const AblationSpec& base) {
  if (!j.is_object()) throw ConfigError("ablation spec must be a JSON object");
  AblationSpec s = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "axis") {
        const auto a = ParseAblationAxis(value.get<std::string>());
        if (!a) throw ConfigError("unknown ablation axis '" + value.get<std::string>() + "'");
        s.axis = *a;
      } else if (key == "histories") {
        s.histories = value.get<std::vector<int>>();
      } else if (key == "seeds") {
        s.seeds = value.get<std::vector<uint64_t>>();
      } else if (key == "teacher") {
        s.teacher = rl::TeacherConfig::FromJson(value, s.teacher);
      } else if (key == "student") {
        s.student = distill::StudentConfig::FromJson(value, s.student);
      } else if (key == "eval_seeds") {
        s.eval.seeds = value.get<std::vector<uint64_t>>();
      } else {
        throw ConfigError("unknown ablation key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("ablation spec: ") + e.what());
  }
  s.Validate();
  return s;
}

std::vector<CellSpec> AblationCells(const AblationSpec& spec) {
  std::vector<CellSpec> cells;
  const CellSpec base{"", spec.teacher, spec.student};
  switch (spec.axis) {
    case AblationAxis::kHistory:
      for (int h : spec.histories) {
        CellSpec c = base;
        c.method = "history_" + std::to_string(h);
        c.student.history = h;
        cells.push_back(c);
      }
      break;
    case AblationAxis::kReset: {
      CellSpec on = base, off = base;
      on.method = "with_reset";
      off.method = "without_reset";
      off.teacher.env.reset_period = 1;
      cells = {on, off};
      break;
    }
    case AblationAxis::kDagger: {
      CellSpec on = base, off = base;
      on.method = "dagger";
      off.method = "no_dagger";
      off.dagger = false;
      cells = {on, off};
      break;
    }
    case AblationAxis::kDataset:
      for (DatasetVariant v : {DatasetVariant::kSmall, DatasetVariant::kMedium, DatasetVariant::kNoisy}) {
        CellSpec c = base;
        c.method = std::string(DatasetVariantName(v));
        c.dataset = v;
        c.custom_dataset = true;
        cells.push_back(c);
      }
      break;
    case AblationAxis::kMode:
      for (env::TrackingMode m :
           {env::TrackingMode::kLocalDecomposed, env::TrackingMode::kGlobal, env::TrackingMode::kUpperBodyOnly}) {
        CellSpec c = base;
        c.method = std::string(env::TrackingModeName(m));
        c.teacher.env.mode = m;
        cells.push_back(c);
      }
      break;
  }
  return cells;
}

AblationTable RunAblation(std::shared_ptr<const sim::HumanoidModel> model,
                          std::shared_ptr<const std::vector<motion::MotionClip>> train_clips,
                          std::shared_ptr<const std::vector<motion::MotionClip>> eval_clips, const AblationSpec& spec,
                          const std::function<void(const std::string&)>& log) {
  spec.Validate();
  AblationTable table;
  table.axis = spec.axis;
  std::map<std::string, std::shared_ptr<rl::GaussianPolicy>> teachers;
  std::map<std::string, std::shared_ptr<const std::vector<motion::MotionClip>>> datasets;

  for (const CellSpec& cell : AblationCells(spec)) {
    AblationRow row;
    row.method = cell.method;
    std::vector<MetricReport> per_seed;
    try {
      for (uint64_t seed : spec.seeds) {
        auto clips = train_clips;
        std::string data_key = "given";
        if (cell.custom_dataset) {
          data_key = std::string(DatasetVariantName(cell.dataset));
          auto& d = datasets[data_key];
          if (!d) d = std::make_shared<const std::vector<motion::MotionClip>>(
                  env::ToPolicyRate(BuildDatasetVariant(*model, cell.dataset, 100)));
          clips = d;
        }
        rl::TeacherConfig tcfg = cell.teacher;
        if (!cell.dagger) tcfg.actor = env::ObsLayout{false, cell.student.history, true};
        const std::string key = tcfg.ToJson().dump() + "|" + data_key + "|" + std::to_string(seed);
        auto& teacher = teachers[key];
        if (!teacher) {
          if (log) log(cell.method + ": training " + (cell.dagger ? "teacher" : "single-stage policy") +
                       " (seed " + std::to_string(seed) + ")");
          teacher = rl::TrainTeacher(model, clips, tcfg, seed, "", "").policy;
        }
        EvalConfig ecfg = spec.eval;
        ecfg.env = tcfg.env;
        MetricReport report;
        if (cell.dagger) {
          if (log) log(cell.method + ": distilling student (seed " + std::to_string(seed) + ")");
          auto s = distill::TrainStudent(model, clips, tcfg.env, *teacher, tcfg.actor, cell.student, seed, "", "");
          const distill::StudentPolicy& st = *s.student;
          const Controller ctl{env::ObsLayout{false, cell.student.history, true},
                               [&](const MatX& o) { return st.Act(o); }};
          report = EvaluatePolicy(model, eval_clips, ctl, ecfg).report;
        } else {
          const rl::GaussianPolicy& pol = *teacher;
          const Controller ctl{tcfg.actor, [&](const MatX& o) { return pol.ActMean(o); }};
          report = EvaluatePolicy(model, eval_clips, ctl, ecfg).report;
        }
        row.seed_e_vel.push_back(report.mean.e_vel);
        per_seed.push_back(report);
      }
      row.report = CombineSeeds(per_seed);
    } catch (const std::exception& e) {
      row.error = e.what();
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.report.mean = Metrics{nan, nan, nan, nan, nan, nan, nan};
      if (log) log(cell.method + ": failed: " + row.error);
    }
    table.rows.push_back(row);
  }

  auto find = [&](const std::string& m) -> const AblationRow* {
    for (const auto& r : table.rows) {
      if (r.method == m && r.error.empty()) return &r;
    }
    return nullptr;
  };
  auto compare = [&](const std::string& a, const std::string& b) {
    const AblationRow* ra = find(a);
    const AblationRow* rb = find(b);
    if (!ra || !rb) return;
    const bool ok = ra->report.mean.e_vel <= rb->report.mean.e_vel;
    table.findings.push_back(std::string(ok ? "holds" : "violated") + ": E_vel(" + a + ") <= E_vel(" + b + ")");
  };
  if (spec.axis == AblationAxis::kReset) compare("with_reset", "without_reset");
  if (spec.axis == AblationAxis::kDagger) compare("dagger", "no_dagger");
  if (spec.axis == AblationAxis::kHistory && find("history_25")) {
    std::vector<double> ev;
    for (const auto& r : table.rows) {
      if (r.error.empty()) ev.push_back(r.report.mean.e_vel);
    }
    std::sort(ev.begin(), ev.end());
    const double h25 = find("history_25")->report.mean.e_vel;
    const bool ok = ev.size() < 3 || h25 <= ev[1];
    table.findings.push_back(std::string(ok ? "holds" : "violated") + ": history_25 among the two best E_vel");
  }
  return table;
}

std::string ComparisonCsv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "method";
  for (const auto& c : MetricColumns()) out << "," << c;
  out << "\n";
  for (const auto& r : rows) {
    out << r.method;
    for (double v : MetricValues(r.report.mean)) out << "," << rl::FormatCell(v);
    out << "\n";
  }
  return out.str();
}

void WriteComparisonCsv(const std::string& path, const std::vector<AblationRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << ComparisonCsv(rows);
}

std::string PerFrameCsv(const sim::HumanoidModel& model, const std::string& method,
                        const std::vector<EpisodeTrace>& traces) {
  std::ostringstream out;
  for (const auto& t : traces) {
    for (size_t i = 0; i < t.robot.size(); ++i) {
      const FrameErrors e = ComputeFrameErrors(model, t.robot[i], t.reference[i]);
      out << method << "," << t.clip_name << "," << i << "," << rl::FormatCell(e.vel) << ","
          << rl::FormatCell(e.kp_upper) << "," << rl::FormatCell(e.kp_lower) << "," << rl::FormatCell(e.dof_upper)
          << "," << rl::FormatCell(e.dof_lower) << "\n";
    }
  }
  return out.str();
}

std::string PerFrameSvg(const sim::HumanoidModel& model,
                        const std::vector<std::pair<std::string, EpisodeTrace>>& series) {
  constexpr double kW = 720, kPanelH = 180, kLeft = 60, kRight = 20, kTop = 30, kGap = 40;
  const char* kPanels[] = {"velocity error (m/s)", "upper DoF error (rad)", "lower DoF error (rad)"};
  const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::vector<std::array<std::vector<double>, 3>> values;
  size_t max_len = 1;
  for (const auto& [name, trace] : series) {
    std::array<std::vector<double>, 3> v;
    for (size_t i = 0; i < trace.robot.size(); ++i) {
      const FrameErrors e = ComputeFrameErrors(model, trace.robot[i], trace.reference[i]);
      v[0].push_back(e.vel);
      v[1].push_back(e.dof_upper);
      v[2].push_back(e.dof_lower);
    }
    max_len = std::max(max_len, trace.robot.size());
    values.push_back(std::move(v));
  }
  const double height = kTop + 3 * (kPanelH + kGap);
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int p = 0; p < 3; ++p) {
    const double y0 = kTop + p * (kPanelH + kGap);
    double vmax = 0.0;
    for (const auto& v : values) {
      for (double x : v[p]) vmax = std::max(vmax, std::isfinite(x) ? x : 0.0);
    }
    if (vmax <= 0.0) vmax = 1.0;
    out << "<text x=\"" << kLeft << "\" y=\"" << y0 - 8 << "\">" << kPanels[p] << "</text>\n";
    out << "<rect x=\"" << kLeft << "\" y=\"" << y0 << "\" width=\"" << kW - kLeft - kRight << "\" height=\"" << kPanelH
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << kLeft - 4 << "\" y=\"" << y0 + 10 << "\" text-anchor=\"end\">" << vmax << "</text>\n";
    out << "<text x=\"" << kLeft - 4 << "\" y=\"" << y0 + kPanelH << "\" text-anchor=\"end\">0</text>\n";
    for (size_t s = 0; s < values.size(); ++s) {
      const auto& v = values[s][p];
      if (v.empty()) continue;
      out << "<polyline fill=\"none\" stroke=\"" << kColors[s % 6] << "\" stroke-width=\"1.2\" points=\"";
      for (size_t i = 0; i < v.size(); ++i) {
        const double x = kLeft + (kW - kLeft - kRight) * (max_len > 1 ? static_cast<double>(i) / (max_len - 1) : 0.0);
        const double y = y0 + kPanelH * (1.0 - std::clamp(std::isfinite(v[i]) ? v[i] : 0.0, 0.0, vmax) / vmax);
        out << x << "," << y << (i + 1 < v.size() ? " " : "");
      }
      out << "\"/>\n";
    }
  }
  for (size_t s = 0; s < series.size(); ++s) {
    out << "<text x=\"" << kW - kRight - 150 << "\" y=\"" << 14 + 14 * s << "\" fill=\"" << kColors[s % 6] << "\">"
        << series[s].first << "</text>\n";
  }
  out << "<text x=\"" << kW / 2 << "\" y=\"" << height - 8 << "\" text-anchor=\"middle\">frame</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace wbt::eval

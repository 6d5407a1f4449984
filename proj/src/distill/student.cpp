#include "wbt/distill/student.hpp"

#include <algorithm>
#include <cmath>

#include "wbt/core/errors.hpp"
#include "wbt/env/config_json.hpp"
#include "wbt/rl/curve.hpp"

namespace wbt::distill {

StudentPolicy::StudentPolicy(int obs_dim, int action_dim, const std::vector<int>& hidden, nn::Activation act,
                             uint64_t seed)
    : obs_dim_(obs_dim), action_dim_(action_dim), hidden_(hidden), act_(act), norm_(obs_dim) {
  if (obs_dim <= 0 || action_dim <= 0) throw ConfigError("student dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::vector<int> sizes = {obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(action_dim);
  mlp_ = nn::Mlp(&store_, "student", sizes, act, rng, 0.01);
}

void StudentPolicy::Save(const std::string& path, const nlohmann::json& extra) const {
  nlohmann::json meta = extra;
  meta["student"] = {{"obs_dim", obs_dim_},
                     {"action_dim", action_dim_},
                     {"hidden", hidden_},
                     {"activation", nn::ActivationName(act_)}};
  meta["norm"] = norm_.ToJson();
  nn::SaveCheckpoint(path, store_, meta, false);
}

StudentPolicy StudentPolicy::Load(const std::string& path, nlohmann::json* meta) {
  const nlohmann::json m = nn::ReadCheckpointMetadata(path);
  if (!m.contains("student")) throw DataError(path + ": not a student checkpoint");
  try {
    const auto& s = m["student"];
    StudentPolicy p(s.at("obs_dim").get<int>(), s.at("action_dim").get<int>(), s.at("hidden").get<std::vector<int>>(),
                    nn::ParseActivation(s.at("activation").get<std::string>()), 0);
    nn::LoadCheckpoint(path, &p.store_);
    p.norm_ = rl::RunningMeanStd::FromJson(m.at("norm"));
    if (meta) *meta = m;
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad student metadata: " + e.what());
  }
}

void DaggerBuffer::Add(const VecX& student_obs, const VecX& teacher_obs, const VecX& label, Provenance tag) {
  if (capacity_ == 0) return;
  if (obs_.size() == capacity_) {
    obs_.pop_front();
    teacher_obs_.pop_front();
    labels_.pop_front();
    tags_.pop_front();
  }
  obs_.push_back(student_obs);
  teacher_obs_.push_back(keep_teacher_obs_ ? teacher_obs : VecX());
  labels_.push_back(label);
  tags_.push_back(tag);
}

void StudentConfig::Validate() const {
  if (history < 0) throw ConfigError("student.history must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("student.lr must be > 0");
  if (batch < 1) throw ConfigError("student.batch must be >= 1");
  if (buffer_capacity < 1) throw ConfigError("student.buffer_capacity must be >= 1");
  if (num_envs < 1 || steps_per_iteration < 1) throw ConfigError("student collection sizes must be >= 1");
  if (updates_per_iteration < 1 || max_iterations < 1) throw ConfigError("student iteration counts must be >= 1");
  if (convergence_window < 1) throw ConfigError("student.convergence_window must be >= 1");
  for (int h : hidden) {
    if (h <= 0) throw ConfigError("student hidden sizes must be positive");
  }
}

nlohmann::json StudentConfig::ToJson() const {
  return {{"history", history},
          {"hidden", hidden},
          {"activation", nn::ActivationName(activation)},
          {"lr", lr},
          {"batch", batch},
          {"buffer_capacity", buffer_capacity},
          {"num_envs", num_envs},
          {"steps_per_iteration", steps_per_iteration},
          {"updates_per_iteration", updates_per_iteration},
          {"max_iterations", max_iterations},
          {"convergence_window", convergence_window},
          {"convergence_tolerance", convergence_tolerance},
          {"bc_warm_start", bc_warm_start}};
}

StudentConfig StudentConfig::FromJson(const nlohmann::json& j, const StudentConfig& base) {
  if (!j.is_object()) throw ConfigError("student config must be a JSON object");
  StudentConfig c = base;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "history") c.history = v.get<int>();
      else if (key == "hidden") c.hidden = v.get<std::vector<int>>();
      else if (key == "activation") c.activation = nn::ParseActivation(v.get<std::string>());
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "batch") c.batch = v.get<int>();
      else if (key == "buffer_capacity") c.buffer_capacity = v.get<size_t>();
      else if (key == "num_envs") c.num_envs = v.get<int>();
      else if (key == "steps_per_iteration") c.steps_per_iteration = v.get<int>();
      else if (key == "updates_per_iteration") c.updates_per_iteration = v.get<int>();
      else if (key == "max_iterations") c.max_iterations = v.get<int>();
      else if (key == "convergence_window") c.convergence_window = v.get<int>();
      else if (key == "convergence_tolerance") c.convergence_tolerance = v.get<double>();
      else if (key == "bc_warm_start") c.bc_warm_start = v.get<bool>();
      else throw ConfigError("unknown student key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("student config: ") + e.what());
  }
  c.Validate();
  return c;
}

void InitCollector(Collector* c) {
  c->env->Reset(&c->student_obs, &c->teacher_obs);
  c->tags.assign(c->env->num_envs(), Provenance::kEpisodeStart);
}

CollectStats CollectDagger(Collector* c, StudentPolicy* student, const rl::GaussianPolicy& teacher, int steps,
                           Provenance driver, DaggerBuffer* buffer) {
  CollectStats stats;
  const int n = c->env->num_envs();
  const auto names = c->env->info_names();
  const auto col = [&](const std::string& name) {
    return static_cast<int>(std::find(names.begin(), names.end(), name) - names.begin());
  };
  const int tracking_col = col("tracking");
  const int vel_col = col("vel_error");
  rl::VecStep step;
  for (int t = 0; t < steps; ++t) {
    student->norm().Update(c->student_obs);
    const MatX labels = teacher.ActMean(c->teacher_obs);
    for (int e = 0; e < n; ++e) {
      buffer->Add(c->student_obs.row(e).transpose(), c->teacher_obs.row(e).transpose(), labels.row(e).transpose(),
                  c->tags[e]);
    }
    const MatX actions = driver == Provenance::kTeacherAction ? labels : student->Act(c->student_obs);
    c->env->Step(actions, &step);
    for (int e = 0; e < n; ++e) {
      c->tags[e] = (step.terminated[e] || step.truncated[e]) ? Provenance::kEpisodeStart : driver;
      stats.mean_tracking += step.info(e, tracking_col);
      stats.e_vel += step.info(e, vel_col);
    }
    stats.samples += n;
    c->student_obs = step.actor_obs;
    c->teacher_obs = step.critic_obs;
  }
  if (stats.samples) {
    stats.mean_tracking /= static_cast<double>(stats.samples);
    stats.e_vel /= static_cast<double>(stats.samples);
  }
  return stats;
}

namespace {

nn::Tensor MseLoss(const StudentPolicy& student, const MatX& norm_obs, const MatX& labels) {
  const nn::Tensor diff = nn::Sub(student.Forward(norm_obs), nn::Tensor::Constant(labels));
  return nn::Scale(nn::Sum(nn::Square(diff)), 1.0 / static_cast<double>(labels.rows()));
}

}  // namespace

double DistillUpdate(StudentPolicy* student, const DaggerBuffer& buffer, int batch, double lr, std::mt19937_64& rng) {
  if (buffer.empty()) throw std::invalid_argument("distillation update on an empty buffer");
  const int n = static_cast<int>(std::min<size_t>(batch, buffer.size()));
  MatX obs(n, student->obs_dim());
  MatX labels(n, student->action_dim());
  std::uniform_int_distribution<size_t> pick(0, buffer.size() - 1);
  for (int i = 0; i < n; ++i) {
    const size_t k = pick(rng);
    obs.row(i) = buffer.obs(k).transpose();
    labels.row(i) = buffer.label(k).transpose();
  }
  nn::Tensor loss = MseLoss(*student, student->norm().Normalize(obs), labels);
  const double value = loss.item();
  if (!std::isfinite(value)) throw DivergenceError("non-finite distillation loss");
  student->store().ZeroGrad();
  loss.Backward();
  student->store().ClipGradNorm(1.0);
  student->store().AdamStep(lr, nn::AdamConfig{});
  student->store().ZeroGrad();
  return value;
}

double BufferMse(const StudentPolicy& student, const DaggerBuffer& buffer) {
  if (buffer.empty()) return 0.0;
  double total = 0.0;
  const size_t chunk = 4096;
  for (size_t start = 0; start < buffer.size(); start += chunk) {
    const size_t len = std::min(chunk, buffer.size() - start);
    MatX obs(len, student.obs_dim());
    MatX labels(len, student.action_dim());
    for (size_t i = 0; i < len; ++i) {
      obs.row(i) = buffer.obs(start + i).transpose();
      labels.row(i) = buffer.label(start + i).transpose();
    }
    total += (student.Act(obs) - labels).squaredNorm();
  }
  return total / static_cast<double>(buffer.size());
}

std::vector<std::string> StudentCurveColumns() {
  return {"step", "buffer_size", "mse", "mean_tracking", "e_vel"};
}

StudentResult TrainStudent(std::shared_ptr<const sim::HumanoidModel> model,
                           std::shared_ptr<const std::vector<motion::MotionClip>> clips, const env::EnvConfig& env_cfg,
                           const rl::GaussianPolicy& teacher, const env::ObsLayout& teacher_layout,
                           const StudentConfig& cfg, uint64_t seed, const std::string& checkpoint_path,
                           const std::string& curve_path, const nlohmann::json& extra_meta,
                           const std::function<void(const StudentIteration&)>& progress) {
  cfg.Validate();
  env::EnvConfig ecfg = env_cfg;
  ecfg.history_length = std::max({ecfg.history_length, cfg.history, teacher_layout.history});
  const env::ObsLayout student_layout{false, cfg.history, true};
  env::TrackingVecEnv venv(model, clips, ecfg, cfg.num_envs, env::DeriveSeed(seed, 11), student_layout,
                           teacher_layout);
  if (venv.critic_obs_dim() != teacher.spec().actor_obs_dim) {
    throw ConfigError("teacher expects " + std::to_string(teacher.spec().actor_obs_dim) +
                      " inputs, environment layout gives " + std::to_string(venv.critic_obs_dim()));
  }
  StudentResult result;
  result.student = std::make_unique<StudentPolicy>(venv.actor_obs_dim(), venv.action_dim(), cfg.hidden,
                                                   cfg.activation, env::DeriveSeed(seed, 12));
  StudentPolicy& student = *result.student;
  std::mt19937_64 rng(env::DeriveSeed(seed, 13));
  DaggerBuffer buffer(cfg.buffer_capacity);
  Collector collector{&venv, {}, {}, {}};
  InitCollector(&collector);
  if (cfg.bc_warm_start) {
    CollectDagger(&collector, &student, teacher, cfg.steps_per_iteration, Provenance::kTeacherAction, &buffer);
  }
  rl::CurveWriter curve(curve_path, StudentCurveColumns());
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const CollectStats cs =
        CollectDagger(&collector, &student, teacher, cfg.steps_per_iteration, Provenance::kStudentAction, &buffer);
    if (it == 1) result.initial_mse = BufferMse(student, buffer);
    double mse = 0.0;
    for (int u = 0; u < cfg.updates_per_iteration; ++u) mse += DistillUpdate(&student, buffer, cfg.batch, cfg.lr, rng);
    StudentIteration row{it, mse / cfg.updates_per_iteration, buffer.size(), cs.mean_tracking, cs.e_vel};
    result.curve.push_back(row);
    curve.Row({static_cast<double>(row.iteration), static_cast<double>(row.buffer_size), row.mse, row.mean_tracking,
               row.e_vel});
    if (progress) progress(row);
    const int w = cfg.convergence_window;
    if (it > w) {
      const double before = result.curve[it - 1 - w].mse;
      if (before > 0.0 && (before - row.mse) / before < cfg.convergence_tolerance) {
        result.converged = true;
        break;
      }
    }
  }
  if (!checkpoint_path.empty()) {
    nlohmann::json meta = extra_meta;
    meta["kind"] = "student";
    meta["model"] = model->name();
    meta["seed"] = seed;
    meta["env"] = env::ToJson(ecfg);
    meta["actor_layout"] = env::ToJson(student_layout);
    meta["iterations"] = result.curve.size();
    meta["converged"] = result.converged;
    student.Save(checkpoint_path, meta);
  }
  return result;
}

}  // namespace wbt::distill

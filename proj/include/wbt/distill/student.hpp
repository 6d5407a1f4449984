#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wbt/env/tracking_env.hpp"
#include "wbt/nn/layers.hpp"
#include "wbt/rl/normalizer.hpp"
#include "wbt/rl/policy.hpp"

namespace wbt::distill {

/// Deployable policy: proprio history + goal, no privileged block.
class StudentPolicy {
 public:
  StudentPolicy(int obs_dim, int action_dim, const std::vector<int>& hidden, nn::Activation act, uint64_t seed);
  StudentPolicy(const StudentPolicy&) = delete;
  StudentPolicy& operator=(const StudentPolicy&) = delete;
  StudentPolicy(StudentPolicy&&) = default;
  StudentPolicy& operator=(StudentPolicy&&) = default;

  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }
  nn::ParamStore& store() { return store_; }
  rl::RunningMeanStd& norm() { return norm_; }
  const rl::RunningMeanStd& norm() const { return norm_; }

  nn::Tensor Forward(const MatX& norm_obs) const { return mlp_.Forward(nn::Tensor::Constant(norm_obs)); }
  MatX Act(const MatX& raw_obs) const { return mlp_.Eval(norm_.Normalize(raw_obs)); }

  void Save(const std::string& path, const nlohmann::json& extra) const;
  static StudentPolicy Load(const std::string& path, nlohmann::json* meta = nullptr);

 private:
  int obs_dim_;
  int action_dim_;
  std::vector<int> hidden_;
  nn::Activation act_;
  nn::ParamStore store_;
  nn::Mlp mlp_;
  rl::RunningMeanStd norm_;
};

/// Which action moved the environment into a stored state.
enum class Provenance : uint8_t { kEpisodeStart = 0, kStudentAction = 1, kTeacherAction = 2 };

/// FIFO buffer of (student observation, teacher label) pairs.
class DaggerBuffer {
 public:
  /// Teacher inputs are kept only when `keep_teacher_obs` (for offline relabeling).
  DaggerBuffer(size_t capacity, bool keep_teacher_obs = false)
      : capacity_(capacity), keep_teacher_obs_(keep_teacher_obs) {}

  void Add(const VecX& student_obs, const VecX& teacher_obs, const VecX& label, Provenance tag);
  size_t size() const { return obs_.size(); }
  size_t capacity() const { return capacity_; }
  bool empty() const { return obs_.empty(); }

  const VecX& obs(size_t i) const { return obs_[i]; }
  const VecX& teacher_obs(size_t i) const { return teacher_obs_[i]; }
  const VecX& label(size_t i) const { return labels_[i]; }
  Provenance tag(size_t i) const { return tags_[i]; }

 private:
  size_t capacity_;
  bool keep_teacher_obs_;
  std::deque<VecX> obs_;
  std::deque<VecX> teacher_obs_;
  std::deque<VecX> labels_;
  std::deque<Provenance> tags_;
};

struct StudentConfig {
  int history = 25;
  std::vector<int> hidden = {1024, 1024, 512};
  nn::Activation activation = nn::Activation::kElu;
  double lr = 1e-4;
  int batch = 4096;
  size_t buffer_capacity = 200000;
  int num_envs = 171;
  int steps_per_iteration = 24;  // per env
  int updates_per_iteration = 20;
  int max_iterations = 200;
  int convergence_window = 10;           // iterations
  double convergence_tolerance = 0.01;   // relative loss improvement over the window
  bool bc_warm_start = false;            // one teacher-driven collection before DAgger

  void Validate() const;
  nlohmann::json ToJson() const;
  static StudentConfig FromJson(const nlohmann::json& j, const StudentConfig& base);
};

/// Rolls the environments forward with `actions` (student or teacher), labels
/// every visited state with the teacher mean action, and appends to the buffer.
/// The env's actor observation is the student's input and its critic
/// observation the teacher's.
struct Collector {
  env::TrackingVecEnv* env;
  MatX student_obs;
  MatX teacher_obs;
  std::vector<Provenance> tags;  // provenance of the current state per env
};

void InitCollector(Collector* c);

struct CollectStats {
  long samples = 0;
  double mean_tracking = 0.0;  // per step
  double e_vel = 0.0;
};

/// Collects `steps` policy steps per env. `driver` picks who acts. The
/// student's observation normalizer is updated with every visited batch.
CollectStats CollectDagger(Collector* c, StudentPolicy* student, const rl::GaussianPolicy& teacher, int steps,
                           Provenance driver, DaggerBuffer* buffer);

/// One MSE regression step on a random minibatch; returns the batch loss
/// (mean over samples of the squared action error, summed over joints).
double DistillUpdate(StudentPolicy* student, const DaggerBuffer& buffer, int batch, double lr, std::mt19937_64& rng);

/// Loss mean(sum_j (a - label)^2) over the whole buffer, without updating.
double BufferMse(const StudentPolicy& student, const DaggerBuffer& buffer);

struct StudentIteration {
  int iteration = 0;
  double mse = 0.0;  // mean training loss over the iteration's updates
  size_t buffer_size = 0;
  double mean_tracking = 0.0;
  double e_vel = 0.0;
};

struct StudentResult {
  std::unique_ptr<StudentPolicy> student;
  double initial_mse = 0.0;  // on the first collected buffer, before any update
  std::vector<StudentIteration> curve;
  bool converged = false;
};

std::vector<std::string> StudentCurveColumns();

/// DAgger: alternate student-driven collection with regression on the
/// aggregated buffer until the loss stops improving or max_iterations.
StudentResult TrainStudent(std::shared_ptr<const sim::HumanoidModel> model,
                           std::shared_ptr<const std::vector<motion::MotionClip>> clips, const env::EnvConfig& env_cfg,
                           const rl::GaussianPolicy& teacher, const env::ObsLayout& teacher_layout,
                           const StudentConfig& cfg, uint64_t seed, const std::string& checkpoint_path,
                           const std::string& curve_path, const nlohmann::json& extra_meta = {},
                           const std::function<void(const StudentIteration&)>& progress = {});

}  // namespace wbt::distill

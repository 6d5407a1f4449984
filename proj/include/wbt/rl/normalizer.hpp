#pragma once

#include <nlohmann/json.hpp>

#include "wbt/core/math.hpp"

namespace wbt::rl {

/// Running per-feature mean and variance (parallel Welford merge).
class RunningMeanStd {
 public:
  RunningMeanStd() = default;
  explicit RunningMeanStd(int dim) : mean_(VecX::Zero(dim)), var_(VecX::Ones(dim)) {}

  /// Merges a batch with one sample per row.
  void Update(const MatX& batch);
  /// (x - mean) / sqrt(var + eps), clipped to [-clip, clip]; rows are samples.
  MatX Normalize(const MatX& x) const;

  int dim() const { return static_cast<int>(mean_.size()); }
  const VecX& mean() const { return mean_; }
  const VecX& var() const { return var_; }
  double count() const { return count_; }

  nlohmann::json ToJson() const;
  static RunningMeanStd FromJson(const nlohmann::json& j);

  static constexpr double kEps = 1e-8;
  static constexpr double kClip = 10.0;

 private:
  VecX mean_;
  VecX var_;
  double count_ = 0.0;
};

/// Scales rewards by the running standard deviation of the discounted return.
class RewardScaler {
 public:
  RewardScaler(int num_envs, double gamma) : returns_(VecX::Zero(num_envs)), stats_(1), gamma_(gamma) {}

  /// Updates the running returns with `rewards` and returns the scaled rewards.
  /// Returns of finished environments are cleared afterwards.
  VecX Scale(const VecX& rewards, const std::vector<char>& done);
  double std() const { return std::sqrt(stats_.var()[0] + RunningMeanStd::kEps); }

 private:
  VecX returns_;
  RunningMeanStd stats_;
  double gamma_;
};

}  // namespace wbt::rl

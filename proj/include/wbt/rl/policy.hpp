#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wbt/nn/layers.hpp"
#include "wbt/nn/param_store.hpp"
#include "wbt/rl/normalizer.hpp"

namespace wbt::rl {

struct PolicySpec {
  int actor_obs_dim = 0;
  int critic_obs_dim = 0;
  int action_dim = 0;
  std::vector<int> actor_hidden = {512, 256, 128};
  std::vector<int> critic_hidden = {512, 256, 128};
  nn::Activation activation = nn::Activation::kElu;
  double init_std = 0.8;

  void Validate() const;
  nlohmann::json ToJson() const;
  static PolicySpec FromJson(const nlohmann::json& j);
};

/// Diagonal Gaussian actor with a state-independent log-std and an MLP critic.
/// Observations are normalized by running statistics before both networks.
class GaussianPolicy {
 public:
  GaussianPolicy(const PolicySpec& spec, uint64_t seed);
  // Parameters are shared graph nodes, so a copy would alias them.
  GaussianPolicy(const GaussianPolicy&) = delete;
  GaussianPolicy& operator=(const GaussianPolicy&) = delete;
  GaussianPolicy(GaussianPolicy&&) = default;
  GaussianPolicy& operator=(GaussianPolicy&&) = default;

  const PolicySpec& spec() const { return spec_; }
  nn::ParamStore& store() { return store_; }
  const nn::ParamStore& store() const { return store_; }
  RunningMeanStd& actor_norm() { return actor_norm_; }
  RunningMeanStd& critic_norm() { return critic_norm_; }
  const RunningMeanStd& actor_norm() const { return actor_norm_; }
  const RunningMeanStd& critic_norm() const { return critic_norm_; }

  // Graph-building forwards on already normalized observations.
  nn::Tensor Mean(const nn::Tensor& norm_obs) const { return actor_.Forward(norm_obs); }
  nn::Tensor Value(const nn::Tensor& norm_critic_obs) const { return critic_.Forward(norm_critic_obs); }
  nn::Tensor LogStd() const { return log_std_; }
  /// Log-density of each row of `actions` (N x 1).
  nn::Tensor LogProb(const nn::Tensor& mean, const MatX& actions) const;
  /// Entropy of the action distribution (1 x 1).
  nn::Tensor Entropy() const;

  // Graph-free evaluation on raw observations.
  MatX ActMean(const MatX& raw_obs) const;
  VecX Values(const MatX& raw_critic_obs) const;
  /// Samples actions for normalized observations; fills log-probs.
  void Sample(const MatX& norm_obs, std::mt19937_64& rng, MatX* actions, VecX* log_probs) const;

  /// Checkpoint with spec, normalizers and `extra` in the metadata.
  void Save(const std::string& path, const nlohmann::json& extra, bool with_moments) const;
  /// Returns the policy and fills `meta` with the full metadata block.
  static GaussianPolicy Load(const std::string& path, nlohmann::json* meta = nullptr);

 private:
  PolicySpec spec_;
  nn::ParamStore store_;
  nn::Mlp actor_;
  nn::Mlp critic_;
  nn::Tensor log_std_;
  RunningMeanStd actor_norm_;
  RunningMeanStd critic_norm_;
};

/// Closed-form log-density of a diagonal Gaussian, one value per row.
VecX GaussianLogProb(const MatX& mean, const VecX& log_std, const MatX& actions);

}  // namespace wbt::rl

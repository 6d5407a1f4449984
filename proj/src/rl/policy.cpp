#include "wbt/rl/policy.hpp"

#include <cmath>

#include "wbt/core/errors.hpp"

namespace wbt::rl {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

void PolicySpec::Validate() const {
  if (actor_obs_dim <= 0 || critic_obs_dim <= 0 || action_dim <= 0) {
    throw ConfigError("policy dimensions must be positive");
  }
  if (!(init_std > 0.0)) throw ConfigError("init_std must be > 0");
  for (int h : actor_hidden) {
    if (h <= 0) throw ConfigError("actor hidden sizes must be positive");
  }
  for (int h : critic_hidden) {
    if (h <= 0) throw ConfigError("critic hidden sizes must be positive");
  }
}

nlohmann::json PolicySpec::ToJson() const {
  return {{"actor_obs_dim", actor_obs_dim}, {"critic_obs_dim", critic_obs_dim},
          {"action_dim", action_dim},       {"actor_hidden", actor_hidden},
          {"critic_hidden", critic_hidden}, {"activation", nn::ActivationName(activation)},
          {"init_std", init_std}};
}

PolicySpec PolicySpec::FromJson(const nlohmann::json& j) {
  PolicySpec s;
  try {
    s.actor_obs_dim = j.at("actor_obs_dim").get<int>();
    s.critic_obs_dim = j.at("critic_obs_dim").get<int>();
    s.action_dim = j.at("action_dim").get<int>();
    s.actor_hidden = j.at("actor_hidden").get<std::vector<int>>();
    s.critic_hidden = j.at("critic_hidden").get<std::vector<int>>();
    s.activation = nn::ParseActivation(j.at("activation").get<std::string>());
    s.init_std = j.at("init_std").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad policy spec: ") + e.what());
  }
  return s;
}

GaussianPolicy::GaussianPolicy(const PolicySpec& spec, uint64_t seed)
    : spec_(spec), actor_norm_(spec.actor_obs_dim), critic_norm_(spec.critic_obs_dim) {
  spec.Validate();
  std::mt19937_64 rng(seed);
  std::vector<int> a = {spec.actor_obs_dim};
  a.insert(a.end(), spec.actor_hidden.begin(), spec.actor_hidden.end());
  a.push_back(spec.action_dim);
  std::vector<int> c = {spec.critic_obs_dim};
  c.insert(c.end(), spec.critic_hidden.begin(), spec.critic_hidden.end());
  c.push_back(1);
  actor_ = nn::Mlp(&store_, "actor", a, spec.activation, rng, 0.01);
  critic_ = nn::Mlp(&store_, "critic", c, spec.activation, rng, 1.0);
  log_std_ = store_.Add("log_std", MatX::Constant(1, spec.action_dim, std::log(spec.init_std)));
}

nn::Tensor GaussianPolicy::LogProb(const nn::Tensor& mean, const MatX& actions) const {
  using namespace nn;
  const Tensor z = Mul(Sub(Tensor::Constant(actions), mean), Exp(Scale(log_std_, -1.0)));
  const Tensor quad = Scale(RowSum(Square(z)), -0.5);
  return AddScalar(Sub(quad, Sum(log_std_)), -0.5 * kLog2Pi * spec_.action_dim);
}

nn::Tensor GaussianPolicy::Entropy() const {
  return nn::AddScalar(nn::Sum(log_std_), 0.5 * (kLog2Pi + 1.0) * spec_.action_dim);
}

MatX GaussianPolicy::ActMean(const MatX& raw_obs) const { return actor_.Eval(actor_norm_.Normalize(raw_obs)); }

VecX GaussianPolicy::Values(const MatX& raw_critic_obs) const {
  return critic_.Eval(critic_norm_.Normalize(raw_critic_obs)).col(0);
}

void GaussianPolicy::Sample(const MatX& norm_obs, std::mt19937_64& rng, MatX* actions, VecX* log_probs) const {
  const MatX mean = actor_.Eval(norm_obs);
  const VecX log_std = log_std_.value().row(0).transpose();
  std::normal_distribution<double> normal(0.0, 1.0);
  actions->resize(mean.rows(), mean.cols());
  for (Eigen::Index r = 0; r < mean.rows(); ++r) {
    for (Eigen::Index c = 0; c < mean.cols(); ++c) (*actions)(r, c) = mean(r, c) + std::exp(log_std[c]) * normal(rng);
  }
  *log_probs = GaussianLogProb(mean, log_std, *actions);
}

void GaussianPolicy::Save(const std::string& path, const nlohmann::json& extra, bool with_moments) const {
  nlohmann::json meta = extra;
  meta["policy"] = spec_.ToJson();
  meta["actor_norm"] = actor_norm_.ToJson();
  meta["critic_norm"] = critic_norm_.ToJson();
  nn::SaveCheckpoint(path, store_, meta, with_moments);
}

GaussianPolicy GaussianPolicy::Load(const std::string& path, nlohmann::json* meta) {
  const nlohmann::json m = nn::ReadCheckpointMetadata(path);
  if (!m.contains("policy")) throw DataError(path + ": not a policy checkpoint");
  GaussianPolicy p(PolicySpec::FromJson(m["policy"]), 0);
  nn::LoadCheckpoint(path, &p.store_);
  p.actor_norm_ = RunningMeanStd::FromJson(m.at("actor_norm"));
  p.critic_norm_ = RunningMeanStd::FromJson(m.at("critic_norm"));
  if (meta) *meta = m;
  return p;
}

VecX GaussianLogProb(const MatX& mean, const VecX& log_std, const MatX& actions) {
  VecX out(mean.rows());
  const double log_norm = log_std.sum() + 0.5 * kLog2Pi * static_cast<double>(log_std.size());
  for (Eigen::Index r = 0; r < mean.rows(); ++r) {
    double q = 0.0;
    for (Eigen::Index c = 0; c < mean.cols(); ++c) {
      const double z = (actions(r, c) - mean(r, c)) / std::exp(log_std[c]);
      q += z * z;
    }
    out[r] = -0.5 * q - log_norm;
  }
  return out;
}

}  // namespace wbt::rl

#include "wbt/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wbt/core/errors.hpp"

namespace wbt::rl {

void PpoConfig::Validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo.gae_lambda must be in [0, 1]");
  if (!(clip > 0.0)) throw ConfigError("ppo.clip must be > 0");
  if (epochs < 1) throw ConfigError("ppo.epochs must be >= 1");
  if (mini_batches < 1) throw ConfigError("ppo.mini_batches must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("ppo.lr must be > 0");
  if (!(max_grad_norm > 0.0)) throw ConfigError("ppo.max_grad_norm must be > 0");
  if (steps_per_env < 1) throw ConfigError("ppo.steps_per_env must be >= 1");
  if (entropy_coef < 0.0 || value_coef < 0.0) throw ConfigError("ppo loss coefficients must be >= 0");
}

nlohmann::json PpoConfig::ToJson() const {
  return {{"gamma", gamma},
          {"gae_lambda", gae_lambda},
          {"clip", clip},
          {"entropy_coef", entropy_coef},
          {"value_coef", value_coef},
          {"epochs", epochs},
          {"mini_batches", mini_batches},
          {"lr", lr},
          {"max_grad_norm", max_grad_norm},
          {"steps_per_env", steps_per_env},
          {"normalize_advantages", normalize_advantages},
          {"normalize_observations", normalize_observations},
          {"scale_rewards", scale_rewards}};
}

PpoConfig PpoConfig::FromJson(const nlohmann::json& j, const PpoConfig& base) {
  PpoConfig c = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "gamma") c.gamma = value.get<double>();
      else if (key == "gae_lambda") c.gae_lambda = value.get<double>();
      else if (key == "clip") c.clip = value.get<double>();
      else if (key == "entropy_coef") c.entropy_coef = value.get<double>();
      else if (key == "value_coef") c.value_coef = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "mini_batches") c.mini_batches = value.get<int>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "max_grad_norm") c.max_grad_norm = value.get<double>();
      else if (key == "steps_per_env") c.steps_per_env = value.get<int>();
      else if (key == "normalize_advantages") c.normalize_advantages = value.get<bool>();
      else if (key == "normalize_observations") c.normalize_observations = value.get<bool>();
      else if (key == "scale_rewards") c.scale_rewards = value.get<bool>();
      else throw ConfigError("unknown ppo key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("ppo config: ") + e.what());
  }
  c.Validate();
  return c;
}

void RolloutBuffer::Reset(int t, int n) {
  steps = t;
  envs = n;
  actor_obs.assign(t, MatX());
  critic_obs.assign(t, MatX());
  actions.assign(t, MatX());
  log_probs = rewards = values = dones = MatX::Zero(t, n);
  last_values = VecX::Zero(n);
  advantages.resize(0, 0);
  returns.resize(0, 0);
}

void GaeAdvantages(const MatX& rewards, const MatX& values, const MatX& dones, const VecX& last_values,
                   double gamma, double lambda, MatX* advantages, MatX* returns) {
  const Eigen::Index t_len = rewards.rows();
  const Eigen::Index n = rewards.cols();
  if (t_len == 0 || n == 0) throw std::invalid_argument("GAE on an empty buffer");
  if (values.rows() != t_len || values.cols() != n || dones.rows() != t_len || dones.cols() != n ||
      last_values.size() != n) {
    throw std::invalid_argument("GAE: inconsistent buffer shapes");
  }
  advantages->resize(t_len, n);
  for (Eigen::Index e = 0; e < n; ++e) {
    double next_adv = 0.0;
    double next_value = last_values[e];
    for (Eigen::Index t = t_len - 1; t >= 0; --t) {
      const double live = 1.0 - dones(t, e);
      const double delta = rewards(t, e) + gamma * next_value * live - values(t, e);
      next_adv = delta + gamma * lambda * live * next_adv;
      (*advantages)(t, e) = next_adv;
      next_value = values(t, e);
    }
  }
  *returns = *advantages + values;
}

PpoLossParts PpoLoss(const GaussianPolicy& policy, const MiniBatch& batch, const PpoConfig& cfg) {
  using namespace nn;
  PpoLossParts out;
  const Tensor mean = policy.Mean(Tensor::Constant(batch.actor_obs));
  const Tensor log_prob = policy.LogProb(mean, batch.actions);
  const Tensor ratio = Exp(Sub(log_prob, Tensor::Constant(batch.old_log_probs)));
  const Tensor adv = Tensor::Constant(batch.advantages);
  const Tensor clipped = Clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
  out.surrogate = Mean(Minimum(Mul(ratio, adv), Mul(clipped, adv)));
  const Tensor value = policy.Value(Tensor::Constant(batch.critic_obs));
  out.value_loss = Mean(Square(Sub(value, Tensor::Constant(batch.returns))));
  out.entropy = policy.Entropy();
  out.total = Sub(Add(Scale(out.surrogate, -1.0), Scale(out.value_loss, cfg.value_coef)),
                  Scale(out.entropy, cfg.entropy_coef));

  const VecX r = ratio.value().col(0);
  out.clip_fraction = ((r.array() - 1.0).abs() > cfg.clip).cast<double>().mean();
  out.approx_kl = ((r.array() - 1.0) - r.array().log()).mean();
  return out;
}

PpoTrainer::PpoTrainer(VecEnv* env, GaussianPolicy* policy, PpoConfig cfg, uint64_t seed)
    : env_(env), policy_(policy), cfg_(cfg), rng_(seed), scaler_(env->num_envs(), cfg.gamma) {
  cfg_.Validate();
  const PolicySpec& s = policy->spec();
  if (s.actor_obs_dim != env->actor_obs_dim() || s.critic_obs_dim != env->critic_obs_dim() ||
      s.action_dim != env->action_dim()) {
    throw ConfigError("policy dimensions do not match the environment");
  }
}

UpdateStats PpoTrainer::Iterate() {
  UpdateStats stats;
  Collect(&stats);
  Update(&stats);
  stats.update = ++updates_;
  stats.env_steps = env_steps_;
  return stats;
}

void PpoTrainer::Collect(UpdateStats* stats) {
  const int n = env_->num_envs();
  if (actor_obs_.size() == 0) {
    env_->Reset(&actor_obs_, &critic_obs_);
    episode_return_ = VecX::Zero(n);
    episode_length_ = VecX::Zero(n);
  }
  buffer_.Reset(cfg_.steps_per_env, n);
  VecStep step;
  double reward_sum = 0.0;
  double return_sum = 0.0;
  double length_sum = 0.0;
  int episodes = 0;
  MatX info_sum;
  for (int t = 0; t < cfg_.steps_per_env; ++t) {
    if (cfg_.normalize_observations) {
      policy_->actor_norm().Update(actor_obs_);
      policy_->critic_norm().Update(critic_obs_);
    }
    buffer_.actor_obs[t] = policy_->actor_norm().Normalize(actor_obs_);
    buffer_.critic_obs[t] = policy_->critic_norm().Normalize(critic_obs_);
    VecX log_probs;
    policy_->Sample(buffer_.actor_obs[t], rng_, &buffer_.actions[t], &log_probs);
    buffer_.log_probs.row(t) = log_probs.transpose();
    buffer_.values.row(t) = policy_->Values(critic_obs_).transpose();

    env_->Step(buffer_.actions[t], &step);
    env_steps_ += n;
    std::vector<char> done(n);
    for (int e = 0; e < n; ++e) done[e] = step.terminated[e] || step.truncated[e];
    VecX r = cfg_.scale_rewards ? scaler_.Scale(step.rewards, done) : step.rewards;
    for (int e = 0; e < n; ++e) {
      if (step.truncated[e] && !step.terminated[e]) {
        r[e] += cfg_.gamma * policy_->Values(step.terminal_critic_obs.row(e))[0];
      }
      buffer_.dones(t, e) = done[e];
      episode_return_[e] += step.rewards[e];
      episode_length_[e] += 1.0;
      if (done[e]) {
        return_sum += episode_return_[e];
        length_sum += episode_length_[e];
        ++episodes;
        episode_return_[e] = 0.0;
        episode_length_[e] = 0.0;
      }
    }
    buffer_.rewards.row(t) = r.transpose();
    reward_sum += step.rewards.sum();
    if (step.info.size()) {
      if (info_sum.size() == 0) info_sum = MatX::Zero(1, step.info.cols());
      info_sum += step.info.colwise().sum();
    }
    actor_obs_ = step.actor_obs;
    critic_obs_ = step.critic_obs;
  }
  buffer_.last_values = policy_->Values(critic_obs_);
  const double samples = static_cast<double>(cfg_.steps_per_env) * n;
  stats->mean_reward = reward_sum / samples;
  stats->episodes = episodes;
  if (episodes > 0) {
    stats->mean_episode_return = return_sum / episodes;
    stats->mean_episode_length = length_sum / episodes;
  }
  if (info_sum.size()) stats->info_means = (info_sum / samples).row(0).transpose();
}

void PpoTrainer::Update(UpdateStats* stats) {
  GaeAdvantages(buffer_.rewards, buffer_.values, buffer_.dones, buffer_.last_values, cfg_.gamma, cfg_.gae_lambda,
                &buffer_.advantages, &buffer_.returns);
  const int t_len = buffer_.steps;
  const int n = buffer_.envs;
  const int total = t_len * n;
  const PolicySpec& s = policy_->spec();
  MatX actor_obs(total, s.actor_obs_dim), critic_obs(total, s.critic_obs_dim), actions(total, s.action_dim);
  VecX log_probs(total), adv(total), ret(total);
  for (int t = 0; t < t_len; ++t) {
    actor_obs.middleRows(t * n, n) = buffer_.actor_obs[t];
    critic_obs.middleRows(t * n, n) = buffer_.critic_obs[t];
    actions.middleRows(t * n, n) = buffer_.actions[t];
    log_probs.segment(t * n, n) = buffer_.log_probs.row(t).transpose();
    adv.segment(t * n, n) = buffer_.advantages.row(t).transpose();
    ret.segment(t * n, n) = buffer_.returns.row(t).transpose();
  }
  if (cfg_.normalize_advantages && total > 1) {
    const double mean = adv.mean();
    const double sd = std::sqrt((adv.array() - mean).square().sum() / (total - 1));
    adv = (adv.array() - mean) / (sd + 1e-8);
  }

  std::vector<int> order(total);
  const int batch = std::max(1, total / cfg_.mini_batches);
  int count = 0;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    for (int mb = 0; mb < cfg_.mini_batches; ++mb) {
      const int start = mb * batch;
      const int len = (mb + 1 == cfg_.mini_batches) ? total - start : batch;
      if (len <= 0) continue;
      MiniBatch b;
      b.actor_obs.resize(len, s.actor_obs_dim);
      b.critic_obs.resize(len, s.critic_obs_dim);
      b.actions.resize(len, s.action_dim);
      b.old_log_probs.resize(len);
      b.advantages.resize(len);
      b.returns.resize(len);
      for (int i = 0; i < len; ++i) {
        const int k = order[start + i];
        b.actor_obs.row(i) = actor_obs.row(k);
        b.critic_obs.row(i) = critic_obs.row(k);
        b.actions.row(i) = actions.row(k);
        b.old_log_probs[i] = log_probs[k];
        b.advantages[i] = adv[k];
        b.returns[i] = ret[k];
      }
      PpoLossParts parts = PpoLoss(*policy_, b, cfg_);
      if (!std::isfinite(parts.total.item())) {
        std::ostringstream msg;
        msg << "non-finite PPO loss at update " << updates_ + 1 << " (surrogate " << parts.surrogate.item()
            << ", value loss " << parts.value_loss.item() << ", entropy " << parts.entropy.item() << ")";
        throw DivergenceError(msg.str());
      }
      policy_->store().ZeroGrad();
      parts.total.Backward();
      stats->grad_norm += policy_->store().ClipGradNorm(cfg_.max_grad_norm);
      policy_->store().AdamStep(cfg_.lr, nn::AdamConfig{});
      stats->surrogate += parts.surrogate.item();
      stats->value_loss += parts.value_loss.item();
      stats->entropy += parts.entropy.item();
      stats->approx_kl += parts.approx_kl;
      stats->clip_fraction += parts.clip_fraction;
      ++count;
    }
  }
  if (!policy_->store().AllFinite()) throw DivergenceError("non-finite policy parameters after update");
  policy_->store().ZeroGrad();
  const double c = std::max(count, 1);
  stats->surrogate /= c;
  stats->value_loss /= c;
  stats->entropy /= c;
  stats->approx_kl /= c;
  stats->clip_fraction /= c;
  stats->grad_norm /= c;
  stats->action_std = policy_->store().Get("log_std").value().array().exp().mean();
}

}  // namespace wbt::rl

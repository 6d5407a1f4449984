#include "wbt/rl/normalizer.hpp"

#include <vector>

#include "wbt/core/errors.hpp"

namespace wbt::rl {

void RunningMeanStd::Update(const MatX& batch) {
  if (batch.rows() == 0) return;
  if (batch.cols() != dim()) throw std::invalid_argument("RunningMeanStd: feature count mismatch");
  const double n = static_cast<double>(batch.rows());
  const VecX bmean = batch.colwise().mean().transpose();
  const VecX bvar = (batch.rowwise() - bmean.transpose()).array().square().colwise().mean().transpose();
  if (count_ == 0.0) {
    mean_ = bmean;
    var_ = bvar;
    count_ = n;
    return;
  }
  const double total = count_ + n;
  const VecX delta = bmean - mean_;
  mean_ += delta * (n / total);
  var_ = (var_ * count_ + bvar * n + delta.cwiseAbs2() * (count_ * n / total)) / total;
  count_ = total;
}

MatX RunningMeanStd::Normalize(const MatX& x) const {
  const Eigen::RowVectorXd inv = (var_.array() + kEps).rsqrt().matrix().transpose();
  MatX out = (x.rowwise() - mean_.transpose()).array().rowwise() * inv.array();
  return out.cwiseMax(-kClip).cwiseMin(kClip);
}

nlohmann::json RunningMeanStd::ToJson() const {
  return {{"mean", std::vector<double>(mean_.data(), mean_.data() + mean_.size())},
          {"var", std::vector<double>(var_.data(), var_.data() + var_.size())},
          {"count", count_}};
}

RunningMeanStd RunningMeanStd::FromJson(const nlohmann::json& j) {
  try {
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto var = j.at("var").get<std::vector<double>>();
    if (mean.size() != var.size()) throw DataError("normalizer mean/var size mismatch");
    RunningMeanStd r(static_cast<int>(mean.size()));
    r.mean_ = Eigen::Map<const VecX>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    r.var_ = Eigen::Map<const VecX>(var.data(), static_cast<Eigen::Index>(var.size()));
    r.count_ = j.at("count").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad normalizer block: ") + e.what());
  }
}

VecX RewardScaler::Scale(const VecX& rewards, const std::vector<char>& done) {
  returns_ = returns_ * gamma_ + rewards;
  stats_.Update(returns_);
  VecX out = rewards / std();
  for (size_t i = 0; i < done.size(); ++i) {
    if (done[i]) returns_[static_cast<Eigen::Index>(i)] = 0.0;
  }
  return out;
}

}  // namespace wbt::rl

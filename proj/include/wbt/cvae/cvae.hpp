#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wbt/motion/motion_clip.hpp"
#include "wbt/nn/layers.hpp"
#include "wbt/nn/param_store.hpp"
#include "wbt/sim/humanoid_model.hpp"

namespace wbt::cvae {

struct CvaeConfig {
  int context = 50;  // M past frames
  int horizon = 15;  // H future frames
  int latent = 128;
  int dim = 512;
  int enc_layers = 4;
  int dec_layers = 4;
  int heads = 8;
  int ffn_mult = 4;
  double alpha = 0.5;  // KL weight
  double beta = 0.5;   // smoothness weight
  double lr = 3e-4;
  int warmup = 2000;
  double weight_decay = 0.01;
  int batch = 512;
  int total_steps = 60000;
  double max_grad_norm = 1.0;
  double ensemble_decay = 0.01;

  /// Small model that trains in about a minute on one core.
  static CvaeConfig Desk();

  void Validate() const;
  nlohmann::json ToJson() const;
  static CvaeConfig FromJson(const nlohmann::json& j, const CvaeConfig& base);
};

// Per-frame feature vector:
//   body: dof_pos (J), heading-local keypoints (36)
//   root: height, roll, pitch, heading-local linear velocity (3), heading-local angular velocity (3)
inline constexpr int kRootFeatures = 9;
inline int BodyFeatures(int num_joints) { return num_joints + 3 * kNumKeypoints; }
inline int FrameFeatures(int num_joints) { return BodyFeatures(num_joints) + kRootFeatures; }

VecX FrameFeatureVector(const motion::MotionFrame& frame);
/// frames x FrameFeatures(J).
MatX ClipFeatures(const motion::MotionClip& clip);

/// Per-channel affine normalization; the scale never drops below `floor`.
struct FeatureNormalizer {
  VecX mean;
  VecX scale;

  static FeatureNormalizer Fit(const std::vector<MatX>& features, double floor = 0.05);
  MatX Normalize(const MatX& f) const;
  MatX Denormalize(const MatX& f) const;
  nlohmann::json ToJson() const;
  static FeatureNormalizer FromJson(const nlohmann::json& j);
};

/// Two tokens per frame (body, root), interleaved, plus learned positions.
class MotionTokenizer {
 public:
  MotionTokenizer() = default;
  MotionTokenizer(nn::ParamStore* store, int num_joints, int dim, int max_frames, std::mt19937_64& rng);

  /// T x F frames -> 2T x dim tokens. Throws std::invalid_argument on a
  /// feature-count mismatch or more than max_frames frames.
  nn::Tensor Forward(const nn::Tensor& frames) const;
  int features() const { return body_in_ + kRootFeatures; }

 private:
  const MatX& Interleave(int t, int which) const;

  nn::Linear body_;
  nn::Linear root_;
  nn::Tensor positions_;
  int body_in_ = 0;
  int max_frames_ = 0;
  mutable std::map<std::pair<int, int>, MatX> interleave_;
};

struct Posterior {
  nn::Tensor mu;         // 1 x d
  nn::Tensor log_sigma;  // 1 x d
};

struct CvaeLosses {
  nn::Tensor recon;
  nn::Tensor kl;
  nn::Tensor smooth;
  nn::Tensor motion;
};

/// 0.5 * sum(sigma^2 + mu^2 - 1 - log sigma^2) with sigma = exp(log_sigma).
nn::Tensor KlLoss(const nn::Tensor& mu, const nn::Tensor& log_sigma);
/// Plain-value form. Throws std::invalid_argument when any sigma <= 0.
double KlDivergence(const VecX& mu, const VecX& sigma);
/// ||x - x_hat||^2.
nn::Tensor ReconLoss(const MatX& x, const nn::Tensor& x_hat);
/// ||x_hat_0 - m_t||^2 + sum_i ||x_hat_{i+1} - x_hat_i||^2.
nn::Tensor SmoothLoss(const nn::Tensor& x_hat, const VecX& m_t);
CvaeLosses ComputeLosses(const MatX& x, const nn::Tensor& x_hat, const Posterior& post, const VecX& m_t,
                         double alpha, double beta);

/// Transformer CVAE over normalized frame features. The decoder predicts
/// offsets from the last condition frame.
class MotionCvae {
 public:
  MotionCvae(const CvaeConfig& cfg, int num_joints, uint64_t seed);
  MotionCvae(const MotionCvae&) = delete;
  MotionCvae& operator=(const MotionCvae&) = delete;

  /// c: M x F, x: H x F (normalized).
  Posterior Encode(const MatX& c, const MatX& x) const;
  Posterior Encode(const nn::Tensor& c, const nn::Tensor& x) const;
  /// z: 1 x d. Returns H x F.
  nn::Tensor Decode(const nn::Tensor& z, const MatX& c) const;
  nn::Tensor Decode(const nn::Tensor& z, const nn::Tensor& c) const;
  /// Losses of one window with reparameterization noise `eps` (1 x d).
  CvaeLosses WindowLoss(const MatX& c, const MatX& x, const MatX& eps) const;
  /// z = 0 prediction, H x F.
  MatX Predict(const MatX& c) const;

  const CvaeConfig& config() const { return cfg_; }
  int num_joints() const { return num_joints_; }
  int features() const { return FrameFeatures(num_joints_); }
  nn::ParamStore& store() { return store_; }
  const nn::ParamStore& store() const { return store_; }
  const nn::Tensor& queries() const { return queries_; }
  FeatureNormalizer& normalizer() { return norm_; }
  const FeatureNormalizer& normalizer() const { return norm_; }

  void Save(const std::string& path, const nlohmann::json& extra) const;
  static std::unique_ptr<MotionCvae> Load(const std::string& path, nlohmann::json* meta = nullptr);

 private:
  CvaeConfig cfg_;
  int num_joints_;
  nn::ParamStore store_;
  FeatureNormalizer norm_;
  MotionTokenizer tokenizer_;
  nn::Tensor cls_;
  std::vector<nn::TransformerBlock> encoder_;
  nn::LayerNorm enc_norm_;
  nn::Linear posterior_head_;
  nn::Linear latent_in_;
  nn::Tensor queries_;
  std::vector<nn::TransformerBlock> decoder_;
  nn::LayerNorm dec_norm_;
  nn::Linear out_head_;
};

/// Normalized exp(-k * age_i) weighted mean of the rows of `predictions`.
/// Throws std::invalid_argument when empty or sizes disagree.
VecX TemporalEnsemble(const std::vector<VecX>& predictions, const std::vector<double>& ages, double k);

struct CvaeTrainResult {
  std::unique_ptr<MotionCvae> model;
  // Per step: l_motion, l_recon, l_kl, l_smooth.
  std::vector<std::array<double, 4>> curve;
};

/// Curve columns: step, lr, l_motion, l_recon, l_kl, l_smooth.
std::vector<std::string> CvaeCurveColumns();

/// Windows are drawn uniformly over every (clip, t) with M past and H future
/// frames. Throws DataError when no clip is long enough.
CvaeTrainResult TrainCvae(const sim::HumanoidModel& model, const std::vector<motion::MotionClip>& clips,
                          const CvaeConfig& cfg, uint64_t seed, const std::string& checkpoint_path,
                          const std::string& curve_path,
                          const std::function<void(int, const std::array<double, 4>&)>& progress = {});

struct SynthesisResult {
  motion::MotionClip clip;
  bool aborted = false;  // a non-finite frame stopped generation early
  int generated = 0;
};

/// Appends `steps` frames to `seed` by sliding-window prediction with z = 0
/// and temporal ensembling. `on_condition(step, c)` sees each normalized
/// condition window. Throws DataError when the seed is shorter than M frames
/// or has the wrong joint count.
SynthesisResult SynthesizeStream(const MotionCvae& cvae, const sim::HumanoidModel& model,
                                 const motion::MotionClip& seed, int steps,
                                 const std::function<void(int, const MatX&)>& on_condition = {});

}  // namespace wbt::cvae

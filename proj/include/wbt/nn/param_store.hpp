#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wbt/nn/tensor.hpp"

namespace wbt::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled (AdamW) when > 0
};

/// Named trainable parameters plus Adam moments. Parameters keep insertion
/// order, which fixes the order of checkpoint tables and gradient checks.
class ParamStore {
 public:
  /// Registers a parameter. Throws std::invalid_argument on a duplicate name.
  Tensor Add(const std::string& name, MatX init);
  Tensor Get(const std::string& name) const;
  bool Has(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Tensor>& params() const { return params_; }
  size_t size() const { return params_.size(); }
  long NumScalars() const;
  long step() const { return step_; }

  /// Gradient of a parameter, zeros if nothing reached it.
  MatX GradOf(size_t i) const;

  void ZeroGrad();
  /// Rescales all gradients so their joint L2 norm is at most `max_norm`.
  /// Returns the norm before clipping.
  double ClipGradNorm(double max_norm);
  /// One bias-corrected Adam/AdamW update using the current gradients.
  void AdamStep(double lr, const AdamConfig& cfg);

  /// Copies values (and moments when `with_moments`) from a store with the same layout.
  void CopyFrom(const ParamStore& other, bool with_moments = false);
  bool AllFinite() const;

  // Moment access for checkpointing.
  std::vector<MatX>& moments_m() { return m_; }
  std::vector<MatX>& moments_v() { return v_; }
  const std::vector<MatX>& moments_m() const { return m_; }
  const std::vector<MatX>& moments_v() const { return v_; }
  void set_step(long step) { step_ = step; }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> params_;
  std::vector<MatX> m_;
  std::vector<MatX> v_;
  std::map<std::string, size_t> index_;
  long step_ = 0;
};

/// Linear warmup from 0 to `base_lr`, then cosine decay to 0 at `total_steps`.
double CosineWarmupLr(long step, double base_lr, long warmup_steps, long total_steps);

/// Uniform in [-a, a] with a = gain * sqrt(6 / (fan_in + fan_out)).
MatX XavierUniform(int fan_in, int fan_out, double gain, std::mt19937_64& rng);

/// Checkpoint layout (little-endian):
///   "EXB2CKPT" | u32 version | u64 n + n bytes of JSON metadata |
///   u32 count | count x (u32 len + name, u64 rows, u64 cols, rows*cols f64 row-major) |
///   u8 has_moments [| i64 step | per tensor: m values, v values]
inline constexpr uint32_t kCheckpointVersion = 1;

void SaveCheckpoint(const std::string& path, const ParamStore& store, const nlohmann::json& metadata,
                    bool with_moments);
/// Loads into a store with the same names and shapes. Throws DataError on
/// a bad magic, version, name or shape. Returns the metadata.
nlohmann::json LoadCheckpoint(const std::string& path, ParamStore* store);
/// Metadata only.
nlohmann::json ReadCheckpointMetadata(const std::string& path);

/// Worst relative error between analytic and central finite-difference
/// gradients of `loss` with respect to every entry of `vars`.
/// Relative error is |a - n| / max(|a| + |n|, floor).
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<var index>[row,col]"
};
GradCheckResult GradCheck(const std::function<Tensor()>& loss, const std::vector<Tensor>& vars,
                          double h = 1e-5, double floor = 1e-4);

}  // namespace wbt::nn

#include "wbt/nn/param_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "wbt/core/errors.hpp"

namespace wbt::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

Tensor ParamStore::Add(const std::string& name, MatX init) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  index_[name] = params_.size();
  names_.push_back(name);
  m_.push_back(MatX::Zero(init.rows(), init.cols()));
  v_.push_back(MatX::Zero(init.rows(), init.cols()));
  params_.push_back(Tensor::Variable(std::move(init)));
  return params_.back();
}

Tensor ParamStore::Get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return params_[it->second];
}

long ParamStore::NumScalars() const {
  long n = 0;
  for (const Tensor& p : params_) n += p.value().size();
  return n;
}

MatX ParamStore::GradOf(size_t i) const {
  const Tensor& p = params_[i];
  if (p.grad().size() == 0) return MatX::Zero(p.rows(), p.cols());
  return p.grad();
}

void ParamStore::ZeroGrad() {
  for (Tensor& p : params_) p.mutable_grad().resize(0, 0);
}

double ParamStore::ClipGradNorm(double max_norm) {
  double sq = 0.0;
  for (const Tensor& p : params_) {
    if (p.grad().size()) sq += p.grad().squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Tensor& p : params_) {
      if (p.grad().size()) p.mutable_grad() *= s;
    }
  }
  return norm;
}

void ParamStore::AdamStep(double lr, const AdamConfig& cfg) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  for (size_t i = 0; i < params_.size(); ++i) {
    const MatX g = GradOf(i);
    MatX& w = params_[i].mutable_value();
    if (cfg.weight_decay > 0.0) w *= 1.0 - lr * cfg.weight_decay;
    m_[i] = cfg.beta1 * m_[i] + (1.0 - cfg.beta1) * g;
    v_[i] = cfg.beta2 * v_[i] + (1.0 - cfg.beta2) * g.cwiseAbs2();
    const MatX mhat = m_[i] / bc1;
    const MatX vhat = v_[i] / bc2;
    w.array() -= lr * mhat.array() / (vhat.array().sqrt() + cfg.eps);
  }
}

void ParamStore::CopyFrom(const ParamStore& other, bool with_moments) {
  if (other.names_ != names_) throw std::invalid_argument("CopyFrom: parameter layout differs");
  for (size_t i = 0; i < params_.size(); ++i) {
    params_[i].mutable_value() = other.params_[i].value();
    if (with_moments) {
      m_[i] = other.m_[i];
      v_[i] = other.v_[i];
    }
  }
  if (with_moments) step_ = other.step_;
}

bool ParamStore::AllFinite() const {
  for (const Tensor& p : params_) {
    if (!p.value().allFinite()) return false;
  }
  return true;
}

double CosineWarmupLr(long step, double base_lr, long warmup_steps, long total_steps) {
  if (step <= 0) return 0.0;
  if (step < warmup_steps) return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (step >= total_steps) return 0.0;
  const double progress =
      static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return 0.5 * base_lr * (1.0 + std::cos(kPi * progress));
}

MatX XavierUniform(int fan_in, int fan_out, double gain, std::mt19937_64& rng) {
  const double a = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  MatX w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w(i) = a * (2.0 * std::generate_canonical<double, 53>(rng) - 1.0);
  }
  return w;
}

namespace {

constexpr char kMagic[8] = {'E', 'X', 'B', '2', 'C', 'K', 'P', 'T'};

template <typename T>
void Put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T Take(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError(path + ": truncated checkpoint");
  return v;
}

void PutMatrix(std::ostream& out, const MatX& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) Put<double>(out, m(r, c));
  }
}

void TakeMatrix(std::istream& in, const std::string& path, MatX* m) {
  for (Eigen::Index r = 0; r < m->rows(); ++r) {
    for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = Take<double>(in, path);
  }
}

std::ifstream OpenChecked(const std::string& path, nlohmann::json* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw DataError(path + ": not a checkpoint (bad magic)");
  const auto version = Take<uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto n = Take<uint64_t>(in, path);
  std::string text(n, '\0');
  in.read(text.data(), static_cast<std::streamsize>(n));
  if (!in) throw DataError(path + ": truncated checkpoint");
  try {
    *meta = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad checkpoint metadata: " + e.what());
  }
  return in;
}

}  // namespace

void SaveCheckpoint(const std::string& path, const ParamStore& store, const nlohmann::json& metadata,
                    bool with_moments) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(kMagic, 8);
  Put<uint32_t>(out, kCheckpointVersion);
  const std::string text = metadata.dump();
  Put<uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  Put<uint32_t>(out, static_cast<uint32_t>(store.size()));
  for (size_t i = 0; i < store.size(); ++i) {
    const std::string& name = store.names()[i];
    const MatX& v = store.params()[i].value();
    Put<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    Put<uint64_t>(out, static_cast<uint64_t>(v.rows()));
    Put<uint64_t>(out, static_cast<uint64_t>(v.cols()));
    PutMatrix(out, v);
  }
  Put<uint8_t>(out, with_moments ? 1 : 0);
  if (with_moments) {
    Put<int64_t>(out, store.step());
    for (size_t i = 0; i < store.size(); ++i) {
      PutMatrix(out, store.moments_m()[i]);
      PutMatrix(out, store.moments_v()[i]);
    }
  }
  if (!out) throw DataError("failed writing checkpoint " + path);
}

nlohmann::json LoadCheckpoint(const std::string& path, ParamStore* store) {
  nlohmann::json meta;
  std::ifstream in = OpenChecked(path, &meta);
  const auto count = Take<uint32_t>(in, path);
  if (count != store->size()) {
    throw DataError(path + ": checkpoint has " + std::to_string(count) + " tensors, model expects " +
                    std::to_string(store->size()));
  }
  for (size_t i = 0; i < count; ++i) {
    const auto len = Take<uint32_t>(in, path);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw DataError(path + ": truncated checkpoint");
    if (name != store->names()[i]) throw DataError(path + ": unexpected tensor '" + name + "'");
    const auto rows = Take<uint64_t>(in, path);
    const auto cols = Take<uint64_t>(in, path);
    Tensor p = store->params()[i];
    if (static_cast<long>(rows) != p.rows() || static_cast<long>(cols) != p.cols()) {
      throw DataError(path + ": shape mismatch for '" + name + "'");
    }
    TakeMatrix(in, path, &p.mutable_value());
  }
  const auto has_moments = Take<uint8_t>(in, path);
  if (has_moments) {
    store->set_step(Take<int64_t>(in, path));
    for (size_t i = 0; i < store->size(); ++i) {
      TakeMatrix(in, path, &store->moments_m()[i]);
      TakeMatrix(in, path, &store->moments_v()[i]);
    }
  }
  return meta;
}

nlohmann::json ReadCheckpointMetadata(const std::string& path) {
  nlohmann::json meta;
  OpenChecked(path, &meta);
  return meta;
}

GradCheckResult GradCheck(const std::function<Tensor()>& loss, const std::vector<Tensor>& vars, double h,
                          double floor) {
  for (Tensor v : vars) v.mutable_grad().resize(0, 0);
  Tensor l = loss();
  l.Backward();
  std::vector<MatX> analytic;
  for (const Tensor& v : vars) {
    analytic.push_back(v.grad().size() ? v.grad() : MatX::Zero(v.rows(), v.cols()));
  }
  GradCheckResult result;
  for (size_t k = 0; k < vars.size(); ++k) {
    Tensor v = vars[k];
    MatX& x = v.mutable_value();
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double orig = x(r, c);
        x(r, c) = orig + h;
        const double up = loss().item();
        x(r, c) = orig - h;
        const double down = loss().item();
        x(r, c) = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic[k](r, c);
        const double err = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), floor);
        if (err > result.max_rel_error) {
          result.max_rel_error = err;
          result.worst = std::to_string(k) + "[" + std::to_string(r) + "," + std::to_string(c) + "]";
        }
      }
    }
  }
  return result;
}

}  // namespace wbt::nn

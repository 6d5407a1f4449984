#include "wbt/cvae/cvae.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "wbt/core/errors.hpp"
#include "wbt/motion/synth.hpp"
#include "wbt/rl/curve.hpp"

namespace wbt::cvae {

using nn::Tensor;

CvaeConfig CvaeConfig::Desk() {
  CvaeConfig c;
  c.context = 10;
  c.horizon = 5;
  c.latent = 16;
  c.dim = 64;
  c.enc_layers = 2;
  c.dec_layers = 2;
  c.warmup = 100;
  c.batch = 16;
  c.total_steps = 500;
  return c;
}

void CvaeConfig::Validate() const {
  if (context < 1 || horizon < 1) throw ConfigError("cvae: context and horizon must be >= 1");
  if (latent < 1 || dim < 1 || heads < 1 || ffn_mult < 1) throw ConfigError("cvae: sizes must be >= 1");
  if (dim % heads != 0) throw ConfigError("cvae: dim must be divisible by heads");
  if (enc_layers < 0 || dec_layers < 0) throw ConfigError("cvae: layer counts must be >= 0");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("cvae: alpha and beta must be >= 0");
  if (!(lr > 0.0) || !(weight_decay >= 0.0)) throw ConfigError("cvae: bad lr or weight_decay");
  if (warmup < 0 || batch < 1 || total_steps < 0) throw ConfigError("cvae: bad schedule");
  if (!(max_grad_norm > 0.0)) throw ConfigError("cvae: max_grad_norm must be > 0");
  if (!(ensemble_decay >= 0.0)) throw ConfigError("cvae: ensemble_decay must be >= 0");
}

nlohmann::json CvaeConfig::ToJson() const {
  return {{"context", context},         {"horizon", horizon},   {"latent", latent},
          {"dim", dim},                 {"enc_layers", enc_layers}, {"dec_layers", dec_layers},
          {"heads", heads},             {"ffn_mult", ffn_mult}, {"alpha", alpha},
          {"beta", beta},               {"lr", lr},             {"warmup", warmup},
          {"weight_decay", weight_decay}, {"batch", batch},     {"total_steps", total_steps},
          {"max_grad_norm", max_grad_norm}, {"ensemble_decay", ensemble_decay}};
}

CvaeConfig CvaeConfig::FromJson(const nlohmann::json& j, const CvaeConfig& base) {
  if (!j.is_object()) throw ConfigError("cvae config must be a JSON object");
  CvaeConfig c = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "context") c.context = value.get<int>();
      else if (key == "horizon") c.horizon = value.get<int>();
      else if (key == "latent") c.latent = value.get<int>();
      else if (key == "dim") c.dim = value.get<int>();
      else if (key == "enc_layers") c.enc_layers = value.get<int>();
      else if (key == "dec_layers") c.dec_layers = value.get<int>();
      else if (key == "heads") c.heads = value.get<int>();
      else if (key == "ffn_mult") c.ffn_mult = value.get<int>();
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "beta") c.beta = value.get<double>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "warmup") c.warmup = value.get<int>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "batch") c.batch = value.get<int>();
      else if (key == "total_steps") c.total_steps = value.get<int>();
      else if (key == "max_grad_norm") c.max_grad_norm = value.get<double>();
      else if (key == "ensemble_decay") c.ensemble_decay = value.get<double>();
      else throw ConfigError("unknown cvae key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("cvae config: ") + e.what());
  }
  c.Validate();
  return c;
}

VecX FrameFeatureVector(const motion::MotionFrame& frame) {
  const int j = frame.num_dofs();
  VecX f(FrameFeatures(j));
  f.head(j) = frame.dof_pos;
  f.segment(j, 3 * kNumKeypoints) = FlattenKeypoints(frame.keypoints_local);
  const Vec3 rpy = frame.rpy();
  const Mat3 to_local = RotZ(-rpy.z());
  int o = BodyFeatures(j);
  f(o++) = frame.root_pos.z();
  f(o++) = rpy.x();
  f(o++) = rpy.y();
  f.segment<3>(o) = to_local * frame.root_lin_vel;
  f.segment<3>(o + 3) = to_local * frame.root_ang_vel;
  return f;
}

MatX ClipFeatures(const motion::MotionClip& clip) {
  MatX out(clip.num_frames(), FrameFeatures(clip.num_dofs()));
  for (int i = 0; i < clip.num_frames(); ++i) out.row(i) = FrameFeatureVector(clip.frames[i]).transpose();
  return out;
}

FeatureNormalizer FeatureNormalizer::Fit(const std::vector<MatX>& features, double floor) {
  if (features.empty()) throw DataError("no features to normalize");
  const long cols = features.front().cols();
  VecX sum = VecX::Zero(cols), sq = VecX::Zero(cols);
  long n = 0;
  for (const MatX& f : features) {
    if (f.cols() != cols) throw DataError("feature width mismatch");
    sum += f.colwise().sum().transpose();
    n += f.rows();
  }
  if (n == 0) throw DataError("no frames to normalize");
  FeatureNormalizer out;
  out.mean = sum / static_cast<double>(n);
  for (const MatX& f : features) sq += (f.rowwise() - out.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  out.scale = (sq / static_cast<double>(n)).array().sqrt().max(floor).matrix();
  return out;
}

MatX FeatureNormalizer::Normalize(const MatX& f) const {
  return ((f.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

MatX FeatureNormalizer::Denormalize(const MatX& f) const {
  return ((f.array().rowwise() * scale.transpose().array()).rowwise() + mean.transpose().array()).matrix();
}

nlohmann::json FeatureNormalizer::ToJson() const {
  return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
          {"scale", std::vector<double>(scale.data(), scale.data() + scale.size())}};
}

FeatureNormalizer FeatureNormalizer::FromJson(const nlohmann::json& j) {
  FeatureNormalizer n;
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto s = j.at("scale").get<std::vector<double>>();
  if (m.size() != s.size()) throw DataError("normalizer mean/scale size mismatch");
  n.mean = Eigen::Map<const VecX>(m.data(), m.size());
  n.scale = Eigen::Map<const VecX>(s.data(), s.size());
  return n;
}

MotionTokenizer::MotionTokenizer(nn::ParamStore* store, int num_joints, int dim, int max_frames,
                                 std::mt19937_64& rng)
    : body_(store, "tok.body", BodyFeatures(num_joints), dim, rng),
      root_(store, "tok.root", kRootFeatures, dim, rng),
      body_in_(BodyFeatures(num_joints)),
      max_frames_(max_frames) {
  std::normal_distribution<double> normal(0.0, 0.02);
  MatX pos(2 * max_frames, dim);
  for (long i = 0; i < pos.size(); ++i) pos.data()[i] = normal(rng);
  positions_ = store->Add("tok.pos", pos);
}

const MatX& MotionTokenizer::Interleave(int t, int which) const {
  auto it = interleave_.find({t, which});
  if (it != interleave_.end()) return it->second;
  MatX p = MatX::Zero(2 * t, t);
  for (int i = 0; i < t; ++i) p(2 * i + which, i) = 1.0;
  return interleave_.emplace(std::make_pair(t, which), std::move(p)).first->second;
}

Tensor MotionTokenizer::Forward(const Tensor& frames) const {
  if (frames.cols() != features()) {
    throw std::invalid_argument("tokenizer: frames have " + std::to_string(frames.cols()) + " features, expected " +
                                std::to_string(features()));
  }
  const int t = frames.rows();
  if (t < 1 || t > max_frames_) throw std::invalid_argument("tokenizer: frame count out of range");
  const Tensor body = body_.Forward(nn::SliceCols(frames, 0, body_in_));
  const Tensor root = root_.Forward(nn::SliceCols(frames, body_in_, kRootFeatures));
  const Tensor tokens = nn::Add(nn::MatMul(Tensor::Constant(Interleave(t, 0)), body),
                                nn::MatMul(Tensor::Constant(Interleave(t, 1)), root));
  return nn::Add(tokens, nn::SliceRows(positions_, 0, 2 * t));
}

Tensor KlLoss(const Tensor& mu, const Tensor& log_sigma) {
  const Tensor var = nn::Exp(nn::Scale(log_sigma, 2.0));
  const Tensor inner = nn::Sub(nn::AddScalar(nn::Add(var, nn::Square(mu)), -1.0), nn::Scale(log_sigma, 2.0));
  return nn::Scale(nn::Sum(inner), 0.5);
}

double KlDivergence(const VecX& mu, const VecX& sigma) {
  if (mu.size() != sigma.size()) throw std::invalid_argument("KlDivergence: size mismatch");
  double kl = 0.0;
  for (long i = 0; i < mu.size(); ++i) {
    if (!(sigma(i) > 0.0)) throw std::invalid_argument("KlDivergence: sigma must be positive");
    const double s2 = sigma(i) * sigma(i);
    kl += s2 + mu(i) * mu(i) - 1.0 - std::log(s2);
  }
  return 0.5 * kl;
}

Tensor ReconLoss(const MatX& x, const Tensor& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) throw std::invalid_argument("ReconLoss: shape mismatch");
  return nn::Sum(nn::Square(nn::Sub(x_hat, Tensor::Constant(x))));
}

Tensor SmoothLoss(const Tensor& x_hat, const VecX& m_t) {
  if (m_t.size() != x_hat.cols()) throw std::invalid_argument("SmoothLoss: shape mismatch");
  const int h = x_hat.rows();
  Tensor loss = nn::Sum(nn::Square(nn::Sub(nn::SliceRows(x_hat, 0, 1), Tensor::Constant(m_t.transpose()))));
  if (h > 1) {
    const Tensor d = nn::Sub(nn::SliceRows(x_hat, 1, h - 1), nn::SliceRows(x_hat, 0, h - 1));
    loss = nn::Add(loss, nn::Sum(nn::Square(d)));
  }
  return loss;
}

CvaeLosses ComputeLosses(const MatX& x, const Tensor& x_hat, const Posterior& post, const VecX& m_t, double alpha,
                         double beta) {
  CvaeLosses l;
  l.recon = ReconLoss(x, x_hat);
  l.kl = KlLoss(post.mu, post.log_sigma);
  l.smooth = SmoothLoss(x_hat, m_t);
  l.motion = nn::Add(nn::Add(l.recon, nn::Scale(l.kl, alpha)), nn::Scale(l.smooth, beta));
  return l;
}

MotionCvae::MotionCvae(const CvaeConfig& cfg, int num_joints, uint64_t seed) : cfg_(cfg), num_joints_(num_joints) {
  cfg_.Validate();
  if (num_joints < 1) throw ConfigError("cvae: num_joints must be >= 1");
  std::mt19937_64 rng(seed);
  const int d = cfg_.dim;
  const int f = FrameFeatures(num_joints);
  norm_.mean = VecX::Zero(f);
  norm_.scale = VecX::Ones(f);
  tokenizer_ = MotionTokenizer(&store_, num_joints, d, cfg_.context + cfg_.horizon, rng);
  std::normal_distribution<double> normal(0.0, 0.02);
  MatX cls(1, d);
  for (long i = 0; i < cls.size(); ++i) cls.data()[i] = normal(rng);
  cls_ = store_.Add("enc.cls", cls);
  for (int i = 0; i < cfg_.enc_layers; ++i) {
    encoder_.emplace_back(&store_, "enc." + std::to_string(i), d, cfg_.heads, cfg_.ffn_mult * d, rng);
  }
  enc_norm_ = nn::LayerNorm(&store_, "enc.ln", d);
  posterior_head_ = nn::Linear(&store_, "enc.head", d, 2 * cfg_.latent, rng, 0.0);
  latent_in_ = nn::Linear(&store_, "dec.z", cfg_.latent, d, rng);
  MatX q(cfg_.horizon, d);
  for (long i = 0; i < q.size(); ++i) q.data()[i] = normal(rng);
  queries_ = store_.Add("dec.queries", q);
  for (int i = 0; i < cfg_.dec_layers; ++i) {
    decoder_.emplace_back(&store_, "dec." + std::to_string(i), d, cfg_.heads, cfg_.ffn_mult * d, rng);
  }
  dec_norm_ = nn::LayerNorm(&store_, "dec.ln", d);
  out_head_ = nn::Linear(&store_, "dec.head", d, f, rng, 0.01);
}

Posterior MotionCvae::Encode(const MatX& c, const MatX& x) const {
  return Encode(Tensor::Constant(c), Tensor::Constant(x));
}

Posterior MotionCvae::Encode(const Tensor& c, const Tensor& x) const {
  if (c.rows() != cfg_.context || x.rows() != cfg_.horizon) throw std::invalid_argument("Encode: window shape");
  Tensor h = nn::ConcatRows({cls_, tokenizer_.Forward(nn::ConcatRows({c, x}))});
  for (const auto& block : encoder_) h = block.Forward(h, nn::AttentionMask::kBidirectional);
  const Tensor out = posterior_head_.Forward(enc_norm_.Forward(nn::SliceRows(h, 0, 1)));
  return {nn::SliceCols(out, 0, cfg_.latent), nn::SliceCols(out, cfg_.latent, cfg_.latent)};
}

Tensor MotionCvae::Decode(const Tensor& z, const MatX& c) const { return Decode(z, Tensor::Constant(c)); }

Tensor MotionCvae::Decode(const Tensor& z, const Tensor& c) const {
  if (z.rows() != 1 || z.cols() != cfg_.latent) throw std::invalid_argument("Decode: z must be 1 x latent");
  if (c.rows() != cfg_.context) throw std::invalid_argument("Decode: condition must have M frames");
  Tensor h = nn::ConcatRows({latent_in_.Forward(z), tokenizer_.Forward(c), queries_});
  for (const auto& block : decoder_) h = block.Forward(h, nn::AttentionMask::kCausal);
  const Tensor q = nn::SliceRows(h, h.rows() - cfg_.horizon, cfg_.horizon);
  const Tensor offsets = out_head_.Forward(dec_norm_.Forward(q));
  return nn::Add(offsets, nn::SliceRows(c, cfg_.context - 1, 1));
}

CvaeLosses MotionCvae::WindowLoss(const MatX& c, const MatX& x, const MatX& eps) const {
  const Posterior post = Encode(c, x);
  const Tensor z = nn::Add(post.mu, nn::Mul(nn::Exp(post.log_sigma), Tensor::Constant(eps)));
  const Tensor x_hat = Decode(z, c);
  return ComputeLosses(x, x_hat, post, c.row(c.rows() - 1).transpose(), cfg_.alpha, cfg_.beta);
}

MatX MotionCvae::Predict(const MatX& c) const {
  return Decode(Tensor::Constant(MatX::Zero(1, cfg_.latent)), c).value();
}

void MotionCvae::Save(const std::string& path, const nlohmann::json& extra) const {
  nlohmann::json meta = extra;
  meta["kind"] = "cvae";
  meta["cvae"] = cfg_.ToJson();
  meta["num_joints"] = num_joints_;
  meta["normalizer"] = norm_.ToJson();
  nn::SaveCheckpoint(path, store_, meta, false);
}

std::unique_ptr<MotionCvae> MotionCvae::Load(const std::string& path, nlohmann::json* meta) {
  const nlohmann::json m = nn::ReadCheckpointMetadata(path);
  if (m.value("kind", "") != "cvae") throw DataError(path + ": not a cvae checkpoint");
  auto model = std::make_unique<MotionCvae>(CvaeConfig::FromJson(m.at("cvae"), CvaeConfig{}),
                                            m.at("num_joints").get<int>(), 0);
  nn::LoadCheckpoint(path, &model->store_);
  model->norm_ = FeatureNormalizer::FromJson(m.at("normalizer"));
  if (model->norm_.mean.size() != model->features()) throw DataError(path + ": normalizer width mismatch");
  if (meta) *meta = m;
  return model;
}

VecX TemporalEnsemble(const std::vector<VecX>& predictions, const std::vector<double>& ages, double k) {
  if (predictions.empty()) throw std::invalid_argument("TemporalEnsemble: no predictions");
  if (predictions.size() != ages.size()) throw std::invalid_argument("TemporalEnsemble: ages size mismatch");
  if (predictions.size() == 1) return predictions.front();
  VecX acc = VecX::Zero(predictions.front().size());
  double total = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != acc.size()) throw std::invalid_argument("TemporalEnsemble: width mismatch");
    const double w = std::exp(-k * ages[i]);
    acc += w * predictions[i];
    total += w;
  }
  return acc / total;
}

std::vector<std::string> CvaeCurveColumns() { return {"step", "lr", "l_motion", "l_recon", "l_kl", "l_smooth"}; }

CvaeTrainResult TrainCvae(const sim::HumanoidModel& model, const std::vector<motion::MotionClip>& clips,
                          const CvaeConfig& cfg, uint64_t seed, const std::string& checkpoint_path,
                          const std::string& curve_path,
                          const std::function<void(int, const std::array<double, 4>&)>& progress) {
  cfg.Validate();
  const int m = cfg.context, h = cfg.horizon;
  std::vector<MatX> raw;
  for (const auto& clip : clips) {
    if (clip.num_dofs() != model.num_joints()) throw DataError("clip '" + clip.name + "' has the wrong joint count");
    raw.push_back(ClipFeatures(clip));
  }
  std::vector<std::pair<int, int>> windows;  // (clip, index of the last condition frame)
  for (size_t i = 0; i < raw.size(); ++i) {
    for (int t = m - 1; t + h < raw[i].rows(); ++t) windows.emplace_back(static_cast<int>(i), t);
  }
  if (windows.empty()) {
    throw DataError("no clip has " + std::to_string(m + h) + " frames for a training window");
  }

  CvaeTrainResult result;
  result.model = std::make_unique<MotionCvae>(cfg, model.num_joints(), seed);
  MotionCvae& net = *result.model;
  net.normalizer() = FeatureNormalizer::Fit(raw);
  std::vector<MatX> feats;
  for (const MatX& r : raw) feats.push_back(net.normalizer().Normalize(r));

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<size_t> pick(0, windows.size() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  nn::AdamConfig adam;
  adam.weight_decay = cfg.weight_decay;
  rl::CurveWriter curve(curve_path, CvaeCurveColumns());

  for (int step = 0; step < cfg.total_steps; ++step) {
    Tensor total;
    std::array<double, 4> sums{};
    for (int b = 0; b < cfg.batch; ++b) {
      const auto [ci, t] = windows[pick(rng)];
      const MatX c = feats[ci].middleRows(t - m + 1, m);
      const MatX x = feats[ci].middleRows(t + 1, h);
      MatX eps(1, cfg.latent);
      for (long i = 0; i < eps.size(); ++i) eps.data()[i] = normal(rng);
      const CvaeLosses l = net.WindowLoss(c, x, eps);
      total = total.defined() ? nn::Add(total, l.motion) : l.motion;
      sums[0] += l.motion.item();
      sums[1] += l.recon.item();
      sums[2] += l.kl.item();
      sums[3] += l.smooth.item();
    }
    for (double& s : sums) s /= cfg.batch;
    if (!std::isfinite(sums[0])) {
      if (!checkpoint_path.empty()) net.Save(checkpoint_path, {{"model", model.name()}, {"seed", seed}, {"step", step}});
      throw DivergenceError("cvae loss became non-finite at step " + std::to_string(step));
    }
    net.store().ZeroGrad();
    nn::Scale(total, 1.0 / cfg.batch).Backward();
    net.store().ClipGradNorm(cfg.max_grad_norm);
    const double lr = nn::CosineWarmupLr(step + 1, cfg.lr, cfg.warmup, cfg.total_steps);
    net.store().AdamStep(lr, adam);
    result.curve.push_back(sums);
    curve.Row({static_cast<double>(step), lr, sums[0], sums[1], sums[2], sums[3]});
    if (progress) progress(step, sums);
  }
  if (!checkpoint_path.empty()) {
    net.Save(checkpoint_path, {{"model", model.name()}, {"seed", seed}, {"step", cfg.total_steps}});
  }
  return result;
}

namespace {

// Rebuilds a frame from denormalized features, integrating heading and
// planar position from the previous frame with the mean of both velocities.
motion::MotionFrame FrameFromFeatures(const VecX& f, const VecX& prev_f, const motion::MotionFrame& prev, int j,
                                      double dt) {
  const int o = BodyFeatures(j);
  motion::MotionFrame out;
  out.dof_pos = f.head(j);
  out.keypoints_local = UnflattenKeypoints(f.segment(j, 3 * kNumKeypoints));
  const double prev_yaw = prev.yaw();
  const double yaw_rate = 0.5 * (f(o + 8) + prev_f(o + 8));
  const double yaw = prev_yaw + yaw_rate * dt;
  const Vec3 v_prev = RotZ(prev_yaw) * prev_f.segment<3>(o + 3);
  const Vec3 v_next = RotZ(yaw) * f.segment<3>(o + 3);
  out.root_pos = prev.root_pos + 0.5 * dt * (v_prev + v_next);
  out.root_pos.z() = f(o);
  out.root_quat = QuatFromRpy(f(o + 1), f(o + 2), yaw).normalized();
  out.root_lin_vel = v_next;
  out.root_ang_vel = RotZ(yaw) * f.segment<3>(o + 6);
  return out;
}

}  // namespace

SynthesisResult SynthesizeStream(const MotionCvae& cvae, const sim::HumanoidModel& model,
                                 const motion::MotionClip& seed, int steps,
                                 const std::function<void(int, const MatX&)>& on_condition) {
  const CvaeConfig& cfg = cvae.config();
  const int j = cvae.num_joints();
  if (steps < 0) throw std::invalid_argument("SynthesizeStream: steps must be >= 0");
  if (seed.num_frames() < cfg.context) {
    throw DataError("seed motion has " + std::to_string(seed.num_frames()) + " frames, need " +
                    std::to_string(cfg.context));
  }
  if (seed.num_dofs() != j || model.num_joints() != j) throw DataError("seed motion has the wrong joint count");

  SynthesisResult result;
  result.clip = seed;
  if (steps == 0) return result;

  const FeatureNormalizer& norm = cvae.normalizer();
  const MatX seed_raw = ClipFeatures(seed);
  MatX produced = norm.Normalize(seed_raw);  // normalized history, seed then generated
  produced.conservativeResize(produced.rows() + steps, Eigen::NoChange);
  int n = seed.num_frames();
  // Pending predictions per future frame index: (normalized frame, step made).
  std::map<int, std::vector<std::pair<VecX, int>>> pending;

  motion::MotionClip generated;
  generated.fps = seed.fps;
  VecX prev_f = seed_raw.row(seed_raw.rows() - 1).transpose();
  motion::MotionFrame prev = seed.frames.back();
  for (int s = 0; s < steps; ++s) {
    const MatX c = produced.middleRows(n - cfg.context, cfg.context);
    if (on_condition) on_condition(s, c);
    const MatX pred = cvae.Predict(c);
    for (int i = 0; i < cfg.horizon; ++i) pending[n + i].emplace_back(pred.row(i).transpose(), s);
    std::vector<VecX> preds;
    std::vector<double> ages;
    for (const auto& [p, made] : pending[n]) {
      preds.push_back(p);
      ages.push_back(static_cast<double>(s - made));
    }
    pending.erase(n);
    const VecX next = TemporalEnsemble(preds, ages, cfg.ensemble_decay);
    if (!next.allFinite()) {
      result.aborted = true;
      break;
    }
    produced.row(n) = next.transpose();
    const VecX f = norm.Denormalize(next.transpose()).transpose();
    motion::MotionFrame frame = FrameFromFeatures(f, prev_f, prev, j, seed.dt());
    generated.frames.push_back(frame);
    prev = frame;
    prev_f = f;
    ++n;
  }
  result.generated = generated.num_frames();
  if (generated.frames.empty()) return result;

  // Pose-consistent keypoints and finite-difference velocities for the new
  // frames, with the last seed frame as the left neighbour.
  motion::RecomputeKeypoints(model, generated);
  motion::MotionClip joined;
  joined.fps = seed.fps;
  joined.frames.push_back(seed.frames.back());
  joined.frames.insert(joined.frames.end(), generated.frames.begin(), generated.frames.end());
  if (joined.num_frames() >= 2) {
    motion::ReconstructLinearVelocities(joined);
    motion::ReconstructAngularVelocities(joined);
  }
  for (size_t i = 0; i < generated.frames.size(); ++i) {
    generated.frames[i].root_lin_vel = joined.frames[i + 1].root_lin_vel;
    generated.frames[i].root_ang_vel = joined.frames[i + 1].root_ang_vel;
  }
  result.clip.frames.insert(result.clip.frames.end(), generated.frames.begin(), generated.frames.end());
  return result;
}

}  // namespace wbt::cvae

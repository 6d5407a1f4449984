#include "wbt/nn/layers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "wbt/core/errors.hpp"

namespace wbt::nn {

Activation ParseActivation(const std::string& name) {
  if (name == "elu") return Activation::kElu;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "gelu") return Activation::kGelu;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + name + "'");
}

std::string ActivationName(Activation a) {
  switch (a) {
    case Activation::kElu: return "elu";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kGelu: return "gelu";
    case Activation::kIdentity: return "identity";
  }
  return "identity";
}

Tensor Apply(Activation a, const Tensor& x) {
  switch (a) {
    case Activation::kElu: return Elu(x);
    case Activation::kRelu: return Relu(x);
    case Activation::kTanh: return Tanh(x);
    case Activation::kGelu: return Gelu(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

Linear::Linear(ParamStore* store, const std::string& name, int in, int out, std::mt19937_64& rng, double gain)
    : in_(in), out_(out) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("Linear " + name + ": sizes must be positive");
  w_ = store->Add(name + ".w", XavierUniform(in, out, gain, rng));
  b_ = store->Add(name + ".b", MatX::Zero(1, out));
}

Tensor Linear::Forward(const Tensor& x) const {
  if (x.cols() != in_) {
    throw std::invalid_argument("Linear: input has " + std::to_string(x.cols()) + " columns, expected " +
                                std::to_string(in_));
  }
  return Add(MatMul(x, w_), b_);
}

Mlp::Mlp(ParamStore* store, const std::string& name, const std::vector<int>& sizes, Activation act,
         std::mt19937_64& rng, double output_gain)
    : act_(act) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp " + name + ": need at least input and output sizes");
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    const bool last = i + 2 == sizes.size();
    layers_.emplace_back(store, name + "." + std::to_string(i), sizes[i], sizes[i + 1], rng,
                         last ? output_gain : 1.0);
  }
}

Tensor Mlp::Forward(const Tensor& x) const {
  Tensor h = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].Forward(h);
    if (i + 1 < layers_.size()) h = Apply(act_, h);
  }
  return h;
}

MatX Mlp::Eval(const MatX& x) const { return Forward(Tensor::Constant(x)).value(); }

LayerNorm::LayerNorm(ParamStore* store, const std::string& name, int dim) {
  gain_ = store->Add(name + ".gain", MatX::Ones(1, dim));
  bias_ = store->Add(name + ".bias", MatX::Zero(1, dim));
}

MatX CausalMask(int t) {
  MatX m = MatX::Zero(t, t);
  for (int i = 0; i < t; ++i) {
    for (int j = i + 1; j < t; ++j) m(i, j) = -std::numeric_limits<double>::infinity();
  }
  return m;
}

MultiHeadAttention::MultiHeadAttention(ParamStore* store, const std::string& name, int dim, int heads,
                                       std::mt19937_64& rng)
    : dim_(dim), heads_(heads) {
  if (heads <= 0 || dim % heads != 0) {
    throw std::invalid_argument("attention " + name + ": dim " + std::to_string(dim) +
                                " not divisible by heads " + std::to_string(heads));
  }
  q_ = Linear(store, name + ".q", dim, dim, rng);
  k_ = Linear(store, name + ".k", dim, dim, rng);
  v_ = Linear(store, name + ".v", dim, dim, rng);
  o_ = Linear(store, name + ".o", dim, dim, rng);
}

namespace {

Tensor HeadScores(const Tensor& q, const Tensor& k, int start, int dh, AttentionMask mask) {
  Tensor s = Scale(MatMul(SliceCols(q, start, dh), Transpose(SliceCols(k, start, dh))),
                   1.0 / std::sqrt(static_cast<double>(dh)));
  if (mask == AttentionMask::kCausal) s = Add(s, Tensor::Constant(CausalMask(s.rows())));
  return SoftmaxRows(s);
}

}  // namespace

Tensor MultiHeadAttention::Forward(const Tensor& tokens, AttentionMask mask) const {
  if (tokens.cols() != dim_) throw std::invalid_argument("attention: token dim mismatch");
  const Tensor q = q_.Forward(tokens);
  const Tensor k = k_.Forward(tokens);
  const Tensor v = v_.Forward(tokens);
  const int dh = dim_ / heads_;
  std::vector<Tensor> outs;
  for (int h = 0; h < heads_; ++h) {
    outs.push_back(MatMul(HeadScores(q, k, h * dh, dh, mask), SliceCols(v, h * dh, dh)));
  }
  return o_.Forward(heads_ == 1 ? outs[0] : ConcatCols(outs));
}

MatX MultiHeadAttention::Weights(const Tensor& tokens, AttentionMask mask, int head) const {
  const int dh = dim_ / heads_;
  return HeadScores(q_.Forward(tokens), k_.Forward(tokens), head * dh, dh, mask).value();
}

TransformerBlock::TransformerBlock(ParamStore* store, const std::string& name, int dim, int heads, int ffn_dim,
                                   std::mt19937_64& rng) {
  ln1_ = LayerNorm(store, name + ".ln1", dim);
  attn_ = MultiHeadAttention(store, name + ".attn", dim, heads, rng);
  ln2_ = LayerNorm(store, name + ".ln2", dim);
  ff1_ = Linear(store, name + ".ff1", dim, ffn_dim, rng);
  ff2_ = Linear(store, name + ".ff2", ffn_dim, dim, rng);
}

Tensor TransformerBlock::Forward(const Tensor& tokens, AttentionMask mask) const {
  Tensor x = Add(tokens, attn_.Forward(ln1_.Forward(tokens), mask));
  return Add(x, ff2_.Forward(Gelu(ff1_.Forward(ln2_.Forward(x)))));
}

}  // namespace wbt::nn

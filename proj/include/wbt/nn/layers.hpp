#pragma once

#include <random>
#include <string>
#include <vector>

#include "wbt/nn/param_store.hpp"
#include "wbt/nn/tensor.hpp"

namespace wbt::nn {

enum class Activation { kElu, kRelu, kTanh, kGelu, kIdentity };

Activation ParseActivation(const std::string& name);
std::string ActivationName(Activation a);
Tensor Apply(Activation a, const Tensor& x);

/// y = x W + b, with W stored as in x out.
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore* store, const std::string& name, int in, int out, std::mt19937_64& rng, double gain = 1.0);

  Tensor Forward(const Tensor& x) const;
  int in() const { return in_; }
  int out() const { return out_; }

 private:
  Tensor w_;
  Tensor b_;
  int in_ = 0;
  int out_ = 0;
};

/// Affine + activation stack; the last layer has no activation.
class Mlp {
 public:
  Mlp() = default;
  /// `sizes` = {input, hidden..., output}.
  Mlp(ParamStore* store, const std::string& name, const std::vector<int>& sizes, Activation act,
      std::mt19937_64& rng, double output_gain = 1.0);

  Tensor Forward(const Tensor& x) const;
  /// Forward without building a graph.
  MatX Eval(const MatX& x) const;
  int in() const { return layers_.front().in(); }
  int out() const { return layers_.back().out(); }

 private:
  std::vector<Linear> layers_;
  Activation act_ = Activation::kElu;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore* store, const std::string& name, int dim);
  Tensor Forward(const Tensor& x) const { return LayerNormRows(x, gain_, bias_); }

 private:
  Tensor gain_;
  Tensor bias_;
};

enum class AttentionMask { kBidirectional, kCausal };

/// Multi-head scaled dot-product self-attention over a T x d token matrix.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore* store, const std::string& name, int dim, int heads, std::mt19937_64& rng);

  Tensor Forward(const Tensor& tokens, AttentionMask mask) const;
  /// Attention weights of head `h`, T x T.
  MatX Weights(const Tensor& tokens, AttentionMask mask, int head) const;

 private:
  Linear q_, k_, v_, o_;
  int dim_ = 0;
  int heads_ = 1;
};

/// Pre-norm block: x + Attn(LN(x)), then x + FFN(LN(x)) with a GELU FFN.
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(ParamStore* store, const std::string& name, int dim, int heads, int ffn_dim,
                   std::mt19937_64& rng);

  Tensor Forward(const Tensor& tokens, AttentionMask mask) const;

 private:
  LayerNorm ln1_, ln2_;
  MultiHeadAttention attn_;
  Linear ff1_, ff2_;
};

/// Additive mask: 0 on and below the diagonal, -inf above.
MatX CausalMask(int t);

}  // namespace wbt::nn

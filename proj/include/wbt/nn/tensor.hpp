#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "wbt/core/math.hpp"

namespace wbt::nn {

/// Graph node: a dense matrix value, its gradient, and how to push the
/// gradient back to the parents.
struct Node {
  MatX value;
  MatX grad;  // empty until something flows in
  bool requires_grad = false;
  bool backward_done = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  /// Adds `g` into this node's gradient.
  void Accumulate(const MatX& g);
};

/// Handle to a node of the reverse-mode graph. All tensors are 2-D; row
/// vectors serve as broadcastable biases and 1x1 tensors as scalars.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor Constant(MatX value);
  static Tensor Variable(MatX value);  // leaf that collects gradients

  const MatX& value() const { return node_->value; }
  const MatX& grad() const { return node_->grad; }
  MatX& mutable_value() { return node_->value; }
  MatX& mutable_grad() { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  int rows() const { return static_cast<int>(node_->value.rows()); }
  int cols() const { return static_cast<int>(node_->value.cols()); }
  double item() const;
  bool defined() const { return node_ != nullptr; }
  const std::shared_ptr<Node>& node() const { return node_; }

  /// Back-propagates from this 1x1 tensor. Gradients accumulate into every
  /// reachable leaf. Throws std::logic_error if called twice on the same graph.
  void Backward();

 private:
  std::shared_ptr<Node> node_;
};

// Arithmetic. For Add/Sub/Mul the second operand may also be a 1xN row
// (broadcast over rows) or a 1x1 scalar.
Tensor MatMul(const Tensor& a, const Tensor& b);
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double s);
Tensor AddScalar(const Tensor& a, double s);
Tensor Transpose(const Tensor& a);

// Element-wise functions.
Tensor Exp(const Tensor& a);
Tensor Log(const Tensor& a);
Tensor Tanh(const Tensor& a);
Tensor Elu(const Tensor& a);
Tensor Relu(const Tensor& a);
Tensor Gelu(const Tensor& a);  // tanh approximation
Tensor Square(const Tensor& a);
Tensor Clip(const Tensor& a, double lo, double hi);  // zero gradient outside [lo, hi]
Tensor Minimum(const Tensor& a, const Tensor& b);

// Reductions.
Tensor Sum(const Tensor& a);      // 1x1
Tensor Mean(const Tensor& a);     // 1x1
Tensor RowSum(const Tensor& a);   // Mx1, sums each row
Tensor ColMean(const Tensor& a);  // 1xN, averages each column

// Shape.
Tensor ConcatCols(const std::vector<Tensor>& parts);
Tensor ConcatRows(const std::vector<Tensor>& parts);
Tensor SliceCols(const Tensor& a, int start, int count);
Tensor SliceRows(const Tensor& a, int start, int count);

// Row-wise normalizations.
Tensor SoftmaxRows(const Tensor& a);
Tensor LayerNormRows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

}  // namespace wbt::nn

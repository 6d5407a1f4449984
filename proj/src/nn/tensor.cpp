#include "wbt/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace wbt::nn {
namespace {

enum class Broadcast { kSame, kRow, kScalar };

std::string Shape(const MatX& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

Broadcast CheckBroadcast(const MatX& a, const MatX& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kSame;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::kScalar;
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + Shape(a) + " vs " + Shape(b));
}

MatX Expand(const MatX& b, Broadcast mode, Eigen::Index rows, Eigen::Index cols) {
  switch (mode) {
    case Broadcast::kSame: return b;
    case Broadcast::kRow: return b.replicate(rows, 1);
    case Broadcast::kScalar: return MatX::Constant(rows, cols, b(0, 0));
  }
  return b;
}

MatX Reduce(const MatX& g, Broadcast mode) {
  switch (mode) {
    case Broadcast::kSame: return g;
    case Broadcast::kRow: return g.colwise().sum();
    case Broadcast::kScalar: return MatX::Constant(1, 1, g.sum());
  }
  return g;
}

Tensor MakeOp(MatX value, std::vector<Tensor> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const Tensor& p : parents) node->requires_grad = node->requires_grad || p.requires_grad();
  if (node->requires_grad) {
    for (const Tensor& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::move(backward);
  }
  return Tensor(std::move(node));
}

// Element-wise op with derivative computed from (input, output).
template <typename F, typename D>
Tensor Unary(const Tensor& a, F f, D df) {
  MatX out = a.value().unaryExpr(f);
  return MakeOp(out, {a}, [df](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    MatX g(self.grad.rows(), self.grad.cols());
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = self.grad(i) * df(p.value(i), self.value(i));
    p.Accumulate(g);
  });
}

}  // namespace

void Node::Accumulate(const MatX& g) {
  if (!requires_grad) return;
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Tensor Tensor::Constant(MatX value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Tensor Tensor::Variable(MatX value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

double Tensor::item() const {
  if (node_->value.size() != 1) throw std::invalid_argument("item() on a " + Shape(node_->value) + " tensor");
  return node_->value(0, 0);
}

void Tensor::Backward() {
  if (node_->value.size() != 1) throw std::invalid_argument("Backward() needs a scalar, got " + Shape(node_->value));
  if (node_->backward_done) throw std::logic_error("Backward() called twice on the same graph");
  node_->backward_done = true;
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack = {{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->Accumulate(MatX::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.size() > 0) n->backward_fn(*n);
  }
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("MatMul: shape mismatch " + Shape(a.value()) + " x " + Shape(b.value()));
  }
  MatX out;
  out.noalias() = a.value() * b.value();
  return MakeOp(std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) pa.Accumulate(self.grad * pb.value.transpose());
    if (pb.requires_grad) pb.Accumulate(pa.value.transpose() * self.grad);
  });
}

Tensor Add(const Tensor& a, const Tensor& b) {
  const Broadcast mode = CheckBroadcast(a.value(), b.value(), "Add");
  MatX out = a.value() + Expand(b.value(), mode, a.rows(), a.cols());
  return MakeOp(std::move(out), {a, b}, [mode](Node& self) {
    self.parents[0]->Accumulate(self.grad);
    if (self.parents[1]->requires_grad) self.parents[1]->Accumulate(Reduce(self.grad, mode));
  });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  const Broadcast mode = CheckBroadcast(a.value(), b.value(), "Sub");
  MatX out = a.value() - Expand(b.value(), mode, a.rows(), a.cols());
  return MakeOp(std::move(out), {a, b}, [mode](Node& self) {
    self.parents[0]->Accumulate(self.grad);
    if (self.parents[1]->requires_grad) self.parents[1]->Accumulate(-Reduce(self.grad, mode));
  });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  const Broadcast mode = CheckBroadcast(a.value(), b.value(), "Mul");
  MatX bb = Expand(b.value(), mode, a.rows(), a.cols());
  MatX out = a.value().cwiseProduct(bb);
  return MakeOp(std::move(out), {a, b}, [mode, bb = std::move(bb)](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) pa.Accumulate(self.grad.cwiseProduct(bb));
    if (pb.requires_grad) pb.Accumulate(Reduce(self.grad.cwiseProduct(pa.value), mode));
  });
}

Tensor Scale(const Tensor& a, double s) {
  return MakeOp(a.value() * s, {a}, [s](Node& self) { self.parents[0]->Accumulate(self.grad * s); });
}

Tensor AddScalar(const Tensor& a, double s) {
  return MakeOp(a.value().array() + s, {a}, [](Node& self) { self.parents[0]->Accumulate(self.grad); });
}

Tensor Transpose(const Tensor& a) {
  return MakeOp(a.value().transpose(), {a},
                [](Node& self) { self.parents[0]->Accumulate(self.grad.transpose()); });
}

Tensor Exp(const Tensor& a) {
  return Unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor Log(const Tensor& a) {
  return Unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor Tanh(const Tensor& a) {
  return Unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor Elu(const Tensor& a) {
  return Unary(
      a, [](double x) { return x > 0 ? x : std::expm1(x); }, [](double x, double y) { return x > 0 ? 1.0 : y + 1.0; });
}

Tensor Relu(const Tensor& a) {
  return Unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor Gelu(const Tensor& a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double k = 0.044715;
  return Unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x))); },
      [](double x, double) {
        const double t = std::tanh(c * (x + k * x * x * x));
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * k * x * x);
      });
}

Tensor Square(const Tensor& a) {
  return Unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor Clip(const Tensor& a, double lo, double hi) {
  return Unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor Minimum(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("Minimum: shape mismatch " + Shape(a.value()) + " vs " + Shape(b.value()));
  }
  // Ties go to the first operand.
  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> take_a = a.value().array() <= b.value().array();
  MatX out = take_a.select(a.value(), b.value());
  return MakeOp(std::move(out), {a, b}, [take_a](Node& self) {
    const MatX zero = MatX::Zero(self.grad.rows(), self.grad.cols());
    if (self.parents[0]->requires_grad) self.parents[0]->Accumulate(take_a.select(self.grad, zero));
    if (self.parents[1]->requires_grad) self.parents[1]->Accumulate(take_a.select(zero, self.grad));
  });
}

Tensor Sum(const Tensor& a) {
  return MakeOp(MatX::Constant(1, 1, a.value().sum()), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    p.Accumulate(MatX::Constant(p.value.rows(), p.value.cols(), self.grad(0, 0)));
  });
}

Tensor Mean(const Tensor& a) {
  const double n = static_cast<double>(a.value().size());
  return MakeOp(MatX::Constant(1, 1, a.value().sum() / n), {a}, [n](Node& self) {
    Node& p = *self.parents[0];
    p.Accumulate(MatX::Constant(p.value.rows(), p.value.cols(), self.grad(0, 0) / n));
  });
}

Tensor RowSum(const Tensor& a) {
  return MakeOp(a.value().rowwise().sum(), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    p.Accumulate(self.grad.replicate(1, p.value.cols()));
  });
}

Tensor ColMean(const Tensor& a) {
  const double n = static_cast<double>(a.rows());
  return MakeOp(a.value().colwise().mean(), {a}, [n](Node& self) {
    Node& p = *self.parents[0];
    p.Accumulate(self.grad.replicate(p.value.rows(), 1) / n);
  });
}

Tensor ConcatCols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols: no inputs");
  Eigen::Index cols = 0;
  for (const Tensor& t : parts) {
    if (t.rows() != parts[0].rows()) throw std::invalid_argument("ConcatCols: row count mismatch");
    cols += t.cols();
  }
  MatX out(parts[0].rows(), cols);
  Eigen::Index at = 0;
  for (const Tensor& t : parts) {
    out.middleCols(at, t.cols()) = t.value();
    at += t.cols();
  }
  return MakeOp(std::move(out), parts, [](Node& self) {
    Eigen::Index at = 0;
    for (auto& p : self.parents) {
      const Eigen::Index c = p->value.cols();
      if (p->requires_grad) p->Accumulate(self.grad.middleCols(at, c));
      at += c;
    }
  });
}

Tensor ConcatRows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatRows: no inputs");
  Eigen::Index rows = 0;
  for (const Tensor& t : parts) {
    if (t.cols() != parts[0].cols()) throw std::invalid_argument("ConcatRows: column count mismatch");
    rows += t.rows();
  }
  MatX out(rows, parts[0].cols());
  Eigen::Index at = 0;
  for (const Tensor& t : parts) {
    out.middleRows(at, t.rows()) = t.value();
    at += t.rows();
  }
  return MakeOp(std::move(out), parts, [](Node& self) {
    Eigen::Index at = 0;
    for (auto& p : self.parents) {
      const Eigen::Index r = p->value.rows();
      if (p->requires_grad) p->Accumulate(self.grad.middleRows(at, r));
      at += r;
    }
  });
}

Tensor SliceCols(const Tensor& a, int start, int count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::invalid_argument("SliceCols: out of range");
  return MakeOp(a.value().middleCols(start, count), {a}, [start, count](Node& self) {
    Node& p = *self.parents[0];
    MatX g = MatX::Zero(p.value.rows(), p.value.cols());
    g.middleCols(start, count) = self.grad;
    p.Accumulate(g);
  });
}

Tensor SliceRows(const Tensor& a, int start, int count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw std::invalid_argument("SliceRows: out of range");
  return MakeOp(a.value().middleRows(start, count), {a}, [start, count](Node& self) {
    Node& p = *self.parents[0];
    MatX g = MatX::Zero(p.value.rows(), p.value.cols());
    g.middleRows(start, count) = self.grad;
    p.Accumulate(g);
  });
}

Tensor SoftmaxRows(const Tensor& a) {
  MatX out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return MakeOp(std::move(out), {a}, [](Node& self) {
    const MatX& y = self.value;
    const VecX dot = self.grad.cwiseProduct(y).rowwise().sum();
    MatX g = y.cwiseProduct(self.grad - dot.replicate(1, y.cols()));
    self.parents[0]->Accumulate(g);
  });
}

Tensor LayerNormRows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d) {
    throw std::invalid_argument("LayerNormRows: gain/bias must be 1x" + std::to_string(d));
  }
  MatX xhat(n, d);
  VecX inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = x.value().row(r).mean();
    const double var = (x.value().row(r).array() - mean).square().mean();
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.value().row(r).array() - mean) * inv_std[r];
  }
  MatX out = xhat.cwiseProduct(gain.value().replicate(n, 1)) + bias.value().replicate(n, 1);
  return MakeOp(std::move(out), {x, gain, bias}, [xhat, inv_std](Node& self) {
    Node& px = *self.parents[0];
    Node& pg = *self.parents[1];
    Node& pb = *self.parents[2];
    const Eigen::Index d = xhat.cols();
    if (pg.requires_grad) pg.Accumulate(self.grad.cwiseProduct(xhat).colwise().sum());
    if (pb.requires_grad) pb.Accumulate(self.grad.colwise().sum());
    if (px.requires_grad) {
      const MatX gx = self.grad.cwiseProduct(pg.value.replicate(xhat.rows(), 1));
      MatX g(xhat.rows(), d);
      for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
        const double mean_g = gx.row(r).mean();
        const double mean_gx = gx.row(r).cwiseProduct(xhat.row(r)).mean();
        g.row(r) = inv_std[r] * (gx.row(r).array() - mean_g - xhat.row(r).array() * mean_gx);
      }
      px.Accumulate(g);
    }
  });
}

}  // namespace wbt::nn

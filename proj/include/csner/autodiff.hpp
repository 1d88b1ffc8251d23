#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "csner/tensor.hpp"

namespace csner {

/// A named trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void zero_grad() { grad = Tensor(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so replaying
/// them backwards visits every node after all of its consumers.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf that accumulates its gradient into `p.grad` on backward().
  Var param(Parameter& p);
  /// Leaf with a gradient slot readable through grad() after backward().
  Var leaf(Tensor value);

  /// Appends an op node. `backward` reads grad(out) and accumulates into
  /// the inputs' gradients.
  Var record(Tensor value, std::span<const Var> inputs, std::function<void(std::size_t)> backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, allocated (zeroed) on first access.
  Tensor& grad(std::size_t id);
  const Tensor& grad(Var v) { return grad(v.id()); }

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and runs all backward rules.
  void backward(Var out);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void(std::size_t)> backward;
  };
  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

namespace ad {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// a (m x n) + bias (1 x n) broadcast over rows.
Var add_bias(Var a, Var bias);
Var sigmoid(Var a);
Var tanh(Var a);
/// Column-wise concatenation.
Var concat(std::span<const Var> parts);
Var concat(Var a, Var b);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var slice_rows(Var a, std::size_t start, std::size_t count);
/// Row-wise concatenation.
Var stack_rows(std::span<const Var> parts);
/// Row i of the result is row index[i] of `table`, or zeros when index[i] < 0.
Var gather_rows(Var table, std::vector<int> index);
/// Pointwise multiply by a constant tensor of the same shape.
Var scale(Var a, Tensor factor);
/// Row r: mask[r] * a + (1 - mask[r]) * b, mask entries 0 or 1.
Var blend(Var a, Var b, std::vector<double> mask);
/// Sum of all entries, 1 x 1.
Var sum(Var a);
/// Row-wise softmax with max subtraction.
Var softmax(Var logits);
/// -sum_r mask[r] * log probs(r, target[r]) / sum_r mask[r]; masked rows are
/// skipped entirely.
Var masked_nll(Var probs, std::vector<int> targets, std::vector<double> mask);
/// Same loss computed from logits through log-softmax.
Var masked_softmax_cross_entropy(Var logits, std::vector<int> targets, std::vector<double> mask);

}  // namespace ad
}  // namespace csner

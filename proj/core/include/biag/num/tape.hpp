#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "biag/num/matrix.hpp"

namespace biag::num {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid as long as the
/// tape is alive.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recording of a computation over a fixed primitive set.
///
/// Nodes are appended in evaluation order, so every op's inputs precede it.
/// `backward` seeds d(loss)/d(loss) = 1 and walks the nodes once in reverse;
/// nodes with no path to the loss end up with an exact zero gradient.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records an input. Every leaf receives a gradient.
  Var leaf(Matrix value);

  /// Appends an op node. Inputs must already be on this tape.
  Var record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Matrix& value(Var v) const;
  /// Gradient of the last `backward` loss w.r.t. `v`.
  const Matrix& grad(Var v) const;

  /// Throws ContractError unless `loss` is a 1×1 node of this tape.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  /// Number of op backward functions run by the last `backward` call.
  std::size_t last_backward_visits() const noexcept { return visits_; }

  // Accessors for op implementations.
  const Matrix& value_at(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad_at(std::size_t id) const { return grads_[id]; }
  const std::vector<std::size_t>& inputs_at(std::size_t id) const { return nodes_[id].inputs; }
  /// Accumulates `g` into the gradient of node `id`.
  void accumulate(std::size_t id, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  void check_owned(Var v, const char* what) const;

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
  std::size_t visits_ = 0;
};

enum class Activation { kIdentity, kTanh };

/// Differentiable primitives. Each records one node on the operands' tape.
namespace ad {

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var hadamard(Var a, Var b);
Var add_row(Var m, Var bias);
Var concat_cols(Var a, Var b);
Var activate(Var a, Activation act);
Var softmax_rows(Var a);
Var row_normalize(Var a);
/// a / ‖a‖_F.
Var frobenius_normalize(Var a);
Var sum(Var a);
Var mean(Var a);
/// Per-row sums as an n×1 column.
Var row_sum(Var a);
/// Mean softmax cross-entropy of `logits` against integer class `labels`.
Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels);

/// softmax_rows(q·kᵀ / scale) · v, composed from the primitives above.
Var scaled_dot_attention(Var q, Var k, Var v, double scale);

}  // namespace ad

}  // namespace biag::num

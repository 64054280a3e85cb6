#include "biag/num/tape.hpp"

#include <cmath>
#include <string>

#include "biag/error.hpp"

namespace biag::num {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw ContractError("Var: unbound handle");
  return tape_->value(*this);
}

Var Tape::leaf(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward) {
  const std::size_t id = nodes_.size();
  for (std::size_t in : inputs) {
    if (in >= id) throw ContractError("Tape::record: input node does not precede op");
  }
  nodes_.push_back(Node{std::move(value), std::move(inputs), std::move(backward)});
  return Var(this, id);
}

void Tape::check_owned(Var v, const char* what) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractError(std::string(what) + ": variable does not belong to this tape");
  }
}

const Matrix& Tape::value(Var v) const {
  check_owned(v, "Tape::value");
  return nodes_[v.id()].value;
}

const Matrix& Tape::grad(Var v) const {
  check_owned(v, "Tape::grad");
  if (v.id() >= grads_.size()) {
    throw ContractError("Tape::grad: node was recorded after the last backward pass");
  }
  return grads_[v.id()];
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Matrix& dst = grads_[id];
  if (!dst.same_shape(g)) {
    throw ShapeError("Tape: gradient " + g.shape_str() + " does not match node " +
                     dst.shape_str());
  }
  auto d = dst.data();
  auto s = g.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void Tape::backward(Var loss) {
  check_owned(loss, "Tape::backward");
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("Tape::backward: loss must be scalar, got " + lv.shape_str());
  }
  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const Node& n : nodes_) grads_.emplace_back(n.value.rows(), n.value.cols());
  grads_[loss.id()](0, 0) = 1.0;
  visits_ = 0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    if (nodes_[id].backward) {
      nodes_[id].backward(*this, id);
      ++visits_;
    }
  }
}

namespace ad {

namespace {

Tape& common_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ContractError("ad: operands live on different tapes");
  }
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw ContractError("ad: unbound operand");
  return *a.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  return t.record(num::matmul(a.value(), b.value()), {a.id(), b.id()},
                  [](Tape& tp, std::size_t self) {
                    const auto& in = tp.inputs_at(self);
                    const Matrix& g = tp.grad_at(self);
                    tp.accumulate(in[0], num::matmul_nt(g, tp.value_at(in[1])));
                    tp.accumulate(in[1], num::matmul_tn(tp.value_at(in[0]), g));
                  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = common_tape(a, b);
  return t.record(num::matmul_nt(a.value(), b.value()), {a.id(), b.id()},
                  [](Tape& tp, std::size_t self) {
                    const auto& in = tp.inputs_at(self);
                    const Matrix& g = tp.grad_at(self);
                    tp.accumulate(in[0], num::matmul(g, tp.value_at(in[1])));
                    tp.accumulate(in[1], num::matmul_tn(g, tp.value_at(in[0])));
                  });
}

Var add(Var a, Var b) {
  Tape& t = common_tape(a, b);
  return t.record(num::add(a.value(), b.value()), {a.id(), b.id()},
                  [](Tape& tp, std::size_t self) {
                    const auto& in = tp.inputs_at(self);
                    tp.accumulate(in[0], tp.grad_at(self));
                    tp.accumulate(in[1], tp.grad_at(self));
                  });
}

Var sub(Var a, Var b) {
  Tape& t = common_tape(a, b);
  return t.record(num::sub(a.value(), b.value()), {a.id(), b.id()},
                  [](Tape& tp, std::size_t self) {
                    const auto& in = tp.inputs_at(self);
                    tp.accumulate(in[0], tp.grad_at(self));
                    tp.accumulate(in[1], num::scale(tp.grad_at(self), -1.0));
                  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  return t.record(num::scale(a.value(), s), {a.id()}, [s](Tape& tp, std::size_t self) {
    tp.accumulate(tp.inputs_at(self)[0], num::scale(tp.grad_at(self), s));
  });
}

Var add_scalar(Var a, double s) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (double& x : out.data()) x += s;
  return t.record(std::move(out), {a.id()}, [](Tape& tp, std::size_t self) {
    tp.accumulate(tp.inputs_at(self)[0], tp.grad_at(self));
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = common_tape(a, b);
  return t.record(num::hadamard(a.value(), b.value()), {a.id(), b.id()},
                  [](Tape& tp, std::size_t self) {
                    const auto& in = tp.inputs_at(self);
                    const Matrix& g = tp.grad_at(self);
                    tp.accumulate(in[0], num::hadamard(g, tp.value_at(in[1])));
                    tp.accumulate(in[1], num::hadamard(g, tp.value_at(in[0])));
                  });
}

Var add_row(Var m, Var bias) {
  Tape& t = common_tape(m, bias);
  return t.record(num::add_row(m.value(), bias.value()), {m.id(), bias.id()},
                  [](Tape& tp, std::size_t self) {
                    const auto& in = tp.inputs_at(self);
                    const Matrix& g = tp.grad_at(self);
                    tp.accumulate(in[0], g);
                    Matrix gb(1, g.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i)
                      for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
                    tp.accumulate(in[1], gb);
                  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = common_tape(a, b);
  const std::size_t split = a.cols();
  return t.record(num::concat_cols(a.value(), b.value()), {a.id(), b.id()},
                  [split](Tape& tp, std::size_t self) {
                    const auto& in = tp.inputs_at(self);
                    const Matrix& g = tp.grad_at(self);
                    Matrix ga(g.rows(), split);
                    Matrix gb(g.rows(), g.cols() - split);
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      for (std::size_t j = 0; j < split; ++j) ga(i, j) = g(i, j);
                      for (std::size_t j = split; j < g.cols(); ++j) gb(i, j - split) = g(i, j);
                    }
                    tp.accumulate(in[0], ga);
                    tp.accumulate(in[1], gb);
                  });
}

Var activate(Var a, Activation act) {
  Tape& t = tape_of(a);
  if (act == Activation::kIdentity) {
    return t.record(a.value(), {a.id()}, [](Tape& tp, std::size_t self) {
      tp.accumulate(tp.inputs_at(self)[0], tp.grad_at(self));
    });
  }
  Matrix out = a.value();
  for (double& x : out.data()) x = std::tanh(x);
  return t.record(std::move(out), {a.id()}, [](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value_at(self);
    Matrix g = tp.grad_at(self);
    auto gd = g.data();
    auto yd = y.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= 1.0 - yd[i] * yd[i];
    tp.accumulate(tp.inputs_at(self)[0], g);
  });
}

Var softmax_rows(Var a) {
  Tape& t = tape_of(a);
  return t.record(num::softmax_rows(a.value()), {a.id()}, [](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value_at(self);
    const Matrix& g = tp.grad_at(self);
    Matrix gx(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.rows(); ++i) {
      const double inner = num::dot(g.row(i), y.row(i));
      for (std::size_t j = 0; j < y.cols(); ++j) gx(i, j) = y(i, j) * (g(i, j) - inner);
    }
    tp.accumulate(tp.inputs_at(self)[0], gx);
  });
}

Var row_normalize(Var a) {
  Tape& t = tape_of(a);
  return t.record(num::row_normalize(a.value()), {a.id()}, [](Tape& tp, std::size_t self) {
    const std::size_t in = tp.inputs_at(self)[0];
    const Matrix& y = tp.value_at(self);
    const Matrix& g = tp.grad_at(self);
    const auto norms = num::row_norms(tp.value_at(in));
    Matrix gx(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.rows(); ++i) {
      const double inner = num::dot(g.row(i), y.row(i));
      for (std::size_t j = 0; j < y.cols(); ++j) gx(i, j) = (g(i, j) - y(i, j) * inner) / norms[i];
    }
    tp.accumulate(in, gx);
  });
}

Var frobenius_normalize(Var a) {
  Tape& t = tape_of(a);
  const double n = num::frobenius_norm(a.value());
  if (n == 0.0) throw DegenerateInputError("frobenius_normalize: zero matrix");
  return t.record(num::scale(a.value(), 1.0 / n), {a.id()}, [n](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value_at(self);
    const Matrix& g = tp.grad_at(self);
    const double inner = num::dot(g.data(), y.data());
    Matrix gx(y.rows(), y.cols());
    for (std::size_t i = 0; i < gx.size(); ++i)
      gx.data()[i] = (g.data()[i] - y.data()[i] * inner) / n;
    tp.accumulate(tp.inputs_at(self)[0], gx);
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  return t.record(Matrix::scalar(s), {a.id()}, [](Tape& tp, std::size_t self) {
    const std::size_t in = tp.inputs_at(self)[0];
    const Matrix& x = tp.value_at(in);
    tp.accumulate(in, Matrix(x.rows(), x.cols(), tp.grad_at(self).item()));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0.0) throw ShapeError("mean: empty input");
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix out(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (double v : x.row(i)) out(i, 0) += v;
  return t.record(std::move(out), {a.id()}, [](Tape& tp, std::size_t self) {
    const std::size_t in = tp.inputs_at(self)[0];
    const Matrix& g = tp.grad_at(self);
    const Matrix& xv = tp.value_at(in);
    Matrix gx(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < gx.rows(); ++i)
      for (double& v : gx.row(i)) v = g(i, 0);
    tp.accumulate(in, gx);
  });
}

Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels) {
  Tape& t = tape_of(logits);
  const Matrix& z = logits.value();
  if (labels.size() != z.rows()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for logits " + z.shape_str());
  }
  if (z.rows() == 0) throw ShapeError("softmax_cross_entropy: empty batch");
  Matrix probs = num::softmax_rows(z);
  double loss = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (labels[i] >= z.cols()) throw ShapeError("softmax_cross_entropy: label out of range");
    // log-sum-exp form keeps the loss finite when a probability underflows.
    double mx = z(i, 0);
    for (double v : z.row(i)) mx = std::max(mx, v);
    double se = 0.0;
    for (double v : z.row(i)) se += std::exp(v - mx);
    loss += mx + std::log(se) - z(i, labels[i]);
  }
  loss /= static_cast<double>(z.rows());
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return t.record(Matrix::scalar(loss), {logits.id()},
                  [probs = std::move(probs), lab = std::move(lab)](Tape& tp, std::size_t self) {
                    const double g = tp.grad_at(self).item() / static_cast<double>(probs.rows());
                    Matrix gz = num::scale(probs, g);
                    for (std::size_t i = 0; i < lab.size(); ++i) gz(i, lab[i]) -= g;
                    tp.accumulate(tp.inputs_at(self)[0], gz);
                  });
}

Var scaled_dot_attention(Var q, Var k, Var v, double scale_factor) {
  if (q.cols() != k.cols()) {
    throw ShapeError("attention: query " + q.value().shape_str() + " and key " +
                     k.value().shape_str() + " widths differ");
  }
  if (k.rows() != v.rows()) {
    throw ShapeError("attention: key " + k.value().shape_str() + " and value " +
                     v.value().shape_str() + " row counts differ");
  }
  if (!(scale_factor > 0.0)) throw ContractError("attention: scale must be positive");
  Var logits = scale(matmul_nt(q, k), 1.0 / scale_factor);
  return matmul(softmax_rows(logits), v);
}

}  // namespace ad

}  // namespace biag::num

#include "biag/num/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "biag/error.hpp"

namespace biag::num {

std::vector<Matrix> finite_diff_grad(const ScalarFn& f, std::vector<Matrix> params, double eps) {
  if (!(eps > 0.0)) throw ContractError("finite_diff_grad: eps must be positive");
  std::vector<Matrix> grads;
  grads.reserve(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix g(params[p].rows(), params[p].cols());
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      double& x = params[p].data()[i];
      const double orig = x;
      x = orig + eps;
      const double fp = f(params);
      x = orig - eps;
      const double fm = f(params);
      x = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw NumericError("finite_diff_grad: non-finite objective probing tensor " +
                           std::to_string(p) + " coordinate " + std::to_string(i));
      }
      g.data()[i] = (fp - fm) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double gradient_relative_error(const Matrix& analytic, const Matrix& numeric, std::size_t* worst) {
  if (!analytic.same_shape(numeric)) {
    throw ShapeError("gradient_relative_error: " + analytic.shape_str() + " vs " +
                     numeric.shape_str());
  }
  double scale = 1e-12;
  double max_diff = 0.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i];
    const double n = numeric.data()[i];
    scale = std::max({scale, std::abs(a), std::abs(n)});
    const double d = std::abs(a - n);
    if (d > max_diff) {
      max_diff = d;
      arg = i;
    }
  }
  if (worst != nullptr) *worst = arg;
  return max_diff / scale;
}

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double GradCheckReport::worst_error() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.rel_error);
  return w;
}

GradCheckReport check_gradients(const TapeLossFn& loss, const std::vector<NamedMatrix>& params,
                                const GradCheckOptions& options) {
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) leaves.push_back(tape.leaf(p.value));
    Var l = loss(tape, leaves);
    tape.backward(l);
    for (Var v : leaves) analytic.push_back(tape.grad(v));
  }

  ScalarFn forward = [&loss](std::span<const Matrix> values) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(values.size());
    for (const auto& v : values) leaves.push_back(tape.leaf(v));
    return loss(tape, leaves).value().item();
  };
  std::vector<Matrix> start;
  start.reserve(params.size());
  for (const auto& p : params) start.push_back(p.value);
  const auto numeric = finite_diff_grad(forward, std::move(start), options.eps);

  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix a = analytic[i];
    if (!options.corrupt.empty() && params[i].name == options.corrupt && a.size() > 0) {
      double mag = 1.0;
      for (double x : a.data()) mag = std::max(mag, std::abs(x));
      a.data()[0] += mag;
    }
    GradCheckEntry e;
    e.name = params[i].name;
    e.rel_error = gradient_relative_error(a, numeric[i], &e.worst_index);
    if (a.size() > 0) {
      e.analytic_at_worst = a.data()[e.worst_index];
      e.numeric_at_worst = numeric[i].data()[e.worst_index];
    }
    e.passed = e.rel_error < options.tolerance;
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace biag::num

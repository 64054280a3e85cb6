#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "biag/num/matrix.hpp"
#include "biag/num/tape.hpp"

namespace biag::num {

/// Scalar objective evaluated on plain matrices (no tape).
using ScalarFn = std::function<double(std::span<const Matrix>)>;

/// Central differences (f(θ+εe_i) − f(θ−εe_i)) / 2ε for every coordinate of
/// every parameter. Throws NumericError naming the tensor and coordinate if f
/// is not finite at a probe.
std::vector<Matrix> finite_diff_grad(const ScalarFn& f, std::vector<Matrix> params, double eps);

/// max_i |a_i − n_i| / max(‖a‖∞, ‖n‖∞, 1e-12). `worst` receives the flat index
/// of the largest absolute discrepancy.
double gradient_relative_error(const Matrix& analytic, const Matrix& numeric,
                               std::size_t* worst = nullptr);

struct NamedMatrix {
  std::string name;
  Matrix value;
};

struct GradCheckEntry {
  std::string name;
  double rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool passed() const;
  double worst_error() const;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-4;
  /// Test hook: if non-empty, the analytic gradient of the tensor with this
  /// name is perturbed before comparison so the check must fail.
  std::string corrupt;
};

/// Builds a scalar loss on `tape` from one leaf per parameter (same order).
using TapeLossFn = std::function<Var(Tape&, std::span<const Var>)>;

/// Compares reverse-mode gradients of `loss` against central differences of
/// the same function's forward value.
GradCheckReport check_gradients(const TapeLossFn& loss, const std::vector<NamedMatrix>& params,
                                const GradCheckOptions& options = {});

}  // namespace biag::num

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "biag/num/matrix.hpp"

namespace biag::num {

/// Step-decay schedule: base_lr · gamma^(number of milestones ≤ epoch).
double lr_schedule(double base_lr, std::size_t epoch,
                   std::span<const std::size_t> milestones, double gamma = 0.1);
/// Default milestones at epochs 100 and 150.
double lr_schedule(double base_lr, std::size_t epoch);

/// SGD with heavy-ball momentum and L2 weight decay folded into the gradient.
class OptimState {
 public:
  OptimState(double learning_rate, double momentum, double weight_decay);

  double learning_rate() const noexcept { return learning_rate_; }
  void set_learning_rate(double lr);
  double momentum() const noexcept { return momentum_; }
  double weight_decay() const noexcept { return weight_decay_; }
  std::size_t epoch() const noexcept { return epoch_; }
  void set_epoch(std::size_t e) noexcept { epoch_ = e; }

  /// Empty until the first step; afterwards one buffer per parameter.
  const std::vector<Matrix>& velocity() const noexcept { return velocity_; }

 private:
  friend void sgd_step(std::span<Matrix* const>, std::span<const Matrix>, OptimState&);

  double learning_rate_;
  double momentum_;
  double weight_decay_;
  std::size_t epoch_ = 0;
  std::vector<Matrix> velocity_;
};

/// v ← momentum·v + grad + weight_decay·param; param ← param − lr·v.
void sgd_step(std::span<Matrix* const> params, std::span<const Matrix> grads, OptimState& state);

}  // namespace biag::num

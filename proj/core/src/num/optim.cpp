#include "biag/num/optim.hpp"

#include <array>
#include <cmath>
#include <string>

#include "biag/error.hpp"

namespace biag::num {

double lr_schedule(double base_lr, std::size_t epoch, std::span<const std::size_t> milestones,
                   double gamma) {
  double lr = base_lr;
  for (std::size_t m : milestones) {
    if (epoch >= m) lr *= gamma;
  }
  return lr;
}

double lr_schedule(double base_lr, std::size_t epoch) {
  static constexpr std::array<std::size_t, 2> kMilestones{100, 150};
  return lr_schedule(base_lr, epoch, kMilestones);
}

OptimState::OptimState(double learning_rate, double momentum, double weight_decay)
    : learning_rate_(learning_rate), momentum_(momentum), weight_decay_(weight_decay) {
  set_learning_rate(learning_rate);
  if (momentum < 0.0 || weight_decay < 0.0) {
    throw ConfigError("OptimState: momentum and weight decay must be non-negative", "momentum");
  }
}

void OptimState::set_learning_rate(double lr) {
  // Zero is accepted so a run can be frozen for reproducibility checks.
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ConfigError("OptimState: learning rate must be finite and >= 0", "lr");
  }
  learning_rate_ = lr;
}

void sgd_step(std::span<Matrix* const> params, std::span<const Matrix> grads, OptimState& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("sgd_step: " + std::to_string(params.size()) + " params but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.velocity_.empty()) {
    for (const Matrix* p : params) state.velocity_.emplace_back(p->rows(), p->cols());
  }
  if (state.velocity_.size() != params.size()) {
    throw ShapeError("sgd_step: optimizer state tracks " +
                     std::to_string(state.velocity_.size()) + " tensors, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    Matrix& v = state.velocity_[i];
    if (!p.same_shape(grads[i]) || !p.same_shape(v)) {
      throw ShapeError("sgd_step: tensor " + std::to_string(i) + " param " + p.shape_str() +
                       ", grad " + grads[i].shape_str() + ", velocity " + v.shape_str());
    }
    auto pd = p.data();
    auto gd = grads[i].data();
    auto vd = v.data();
    for (std::size_t j = 0; j < pd.size(); ++j) {
      vd[j] = state.momentum_ * vd[j] + gd[j] + state.weight_decay_ * pd[j];
      pd[j] -= state.learning_rate_ * vd[j];
    }
  }
}

}  // namespace biag::num

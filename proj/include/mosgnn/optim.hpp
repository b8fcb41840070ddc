#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mosgnn/tensor.hpp"

namespace mosgnn {

enum class OptimizerKind { adam, sgd_warmup };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // sgd_warmup
  double momentum = 0.9;
  int warmup_epochs = 5;
  double base_lr = 0.1;

  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;   // adam m, or sgd velocity
  std::vector<std::vector<double>> second_moment;  // adam v
};

OptimizerState make_adam(double learning_rate = 1e-3);
OptimizerState make_sgd_warmup(double base_lr = 0.1, int warmup_epochs = 5, double momentum = 0.9);

/// Bias-corrected Adam update of every parameter from its grad slot.
/// Parameters without a grad slot are treated as having zero gradient.
void adam_step(OptimizerState& state, std::span<Tensor* const> params);

/// SGD with momentum at state.learning_rate (set it per epoch with
/// sgd_warmup_lr).
void sgd_step(OptimizerState& state, std::span<Tensor* const> params);

/// Dispatches on state.kind.
void optimizer_step(OptimizerState& state, std::span<Tensor* const> params);

/// Linear warmup: base_lr * (epoch + 1) / warmup_epochs for the first
/// warmup_epochs epochs, base_lr afterwards. Epochs are 0-based.
double sgd_warmup_lr(int epoch, int warmup_epochs, double base_lr);

/// Sets the learning rate for `epoch` (no-op for adam).
void begin_epoch(OptimizerState& state, int epoch);

}  // namespace mosgnn

#include "mosgnn/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "mosgnn/errors.hpp"

namespace mosgnn {

namespace {

void ensure_buffers(std::vector<std::vector<double>>& buffers, std::span<Tensor* const> params) {
  if (buffers.empty()) {
    buffers.reserve(params.size());
    for (const Tensor* p : params) buffers.emplace_back(p->size(), 0.0);
    return;
  }
  if (buffers.size() != params.size()) throw ShapeError("optimizer: parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (buffers[i].size() != params[i]->size()) throw ShapeError("optimizer: moment buffer shape mismatch");
  }
}

}  // namespace

OptimizerState make_adam(double learning_rate) {
  OptimizerState s;
  s.kind = OptimizerKind::adam;
  s.learning_rate = learning_rate;
  return s;
}

OptimizerState make_sgd_warmup(double base_lr, int warmup_epochs, double momentum) {
  if (warmup_epochs < 1) throw std::invalid_argument("warmup_epochs must be >= 1");
  OptimizerState s;
  s.kind = OptimizerKind::sgd_warmup;
  s.base_lr = base_lr;
  s.warmup_epochs = warmup_epochs;
  s.momentum = momentum;
  s.learning_rate = sgd_warmup_lr(0, warmup_epochs, base_lr);
  return s;
}

void adam_step(OptimizerState& state, std::span<Tensor* const> params) {
  if (state.kind != OptimizerKind::adam) throw std::invalid_argument("adam_step: state is not adam");
  ensure_buffers(state.first_moment, params);
  ensure_buffers(state.second_moment, params);
  ++state.step;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (!p.has_grad()) continue;
    if (p.grad.size() != p.size()) throw ShapeError("adam_step: gradient shape mismatch");
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = p.grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p.values[j] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

void sgd_step(OptimizerState& state, std::span<Tensor* const> params) {
  if (state.kind != OptimizerKind::sgd_warmup) throw std::invalid_argument("sgd_step: state is not sgd");
  ensure_buffers(state.first_moment, params);
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (!p.has_grad()) continue;
    if (p.grad.size() != p.size()) throw ShapeError("sgd_step: gradient shape mismatch");
    auto& vel = state.first_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      vel[j] = state.momentum * vel[j] + p.grad[j];
      p.values[j] -= state.learning_rate * vel[j];
    }
  }
}

void optimizer_step(OptimizerState& state, std::span<Tensor* const> params) {
  if (state.kind == OptimizerKind::adam) {
    adam_step(state, params);
  } else {
    sgd_step(state, params);
  }
}

double sgd_warmup_lr(int epoch, int warmup_epochs, double base_lr) {
  if (warmup_epochs < 1) throw std::invalid_argument("warmup_epochs must be >= 1");
  if (epoch < warmup_epochs) return base_lr * double(epoch + 1) / double(warmup_epochs);
  return base_lr;
}

void begin_epoch(OptimizerState& state, int epoch) {
  if (state.kind == OptimizerKind::sgd_warmup) {
    state.learning_rate = sgd_warmup_lr(epoch, state.warmup_epochs, state.base_lr);
  }
}

}  // namespace mosgnn

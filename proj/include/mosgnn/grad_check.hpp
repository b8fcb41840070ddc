#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mosgnn/tape.hpp"

namespace mosgnn {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-5;
  /// Denominator floor: error = |analytic - numeric| / max(|analytic|, |numeric|, abs_floor).
  double abs_floor = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool passed = true;
};

/// `fn` builds a scalar on the given tape, binding each tensor in `params`
/// through Tape::parameter. Analytic gradients come from one backward pass,
/// numeric ones from central differences on every entry.
GradCheckReport grad_check(const std::function<Var(Tape&)>& fn, std::span<Tensor* const> params,
                           const GradCheckOptions& options = {});

/// Convenience form over plain input tensors; fn receives one leaf per input.
GradCheckReport grad_check(const std::function<Var(Tape&, std::span<const Var>)>& fn,
                           std::vector<Tensor> inputs, const GradCheckOptions& options = {});

}  // namespace mosgnn

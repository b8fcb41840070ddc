#include "mosgnn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "mosgnn/errors.hpp"

namespace mosgnn {

namespace {

double evaluate(const std::function<Var(Tape&)>& fn) {
  Tape tape;
  const Var out = fn(tape);
  if (out.rows() != 1 || out.cols() != 1) throw ShapeError("grad_check: function output is not scalar");
  return out.item();
}

}  // namespace

GradCheckReport grad_check(const std::function<Var(Tape&)>& fn, std::span<Tensor* const> params,
                           const GradCheckOptions& options) {
  for (Tensor* p : params) {
    p->ensure_grad();
    p->zero_grad();
  }
  {
    Tape tape;
    const Var out = fn(tape);
    if (out.rows() != 1 || out.cols() != 1) throw ShapeError("grad_check: function output is not scalar");
    tape.backward(out);
  }
  GradCheckReport report;
  const double h = options.step;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    const std::vector<double> analytic = p.grad;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double saved = p.values[j];
      p.values[j] = saved + h;
      const double up = evaluate(fn);
      p.values[j] = saved - h;
      const double down = evaluate(fn);
      p.values[j] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double abs_err = std::abs(analytic[j] - numeric);
      const double denom = std::max({std::abs(analytic[j]), std::abs(numeric), options.abs_floor});
      const double rel = abs_err / denom;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = pi;
        report.worst_index = j;
      }
      ++report.checked;
    }
    p.grad = analytic;
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

GradCheckReport grad_check(const std::function<Var(Tape&, std::span<const Var>)>& fn, std::vector<Tensor> inputs,
                           const GradCheckOptions& options) {
  std::vector<Tensor*> ptrs;
  for (Tensor& t : inputs) ptrs.push_back(&t);
  auto wrapped = [&](Tape& tape) {
    std::vector<Var> leaves;
    for (Tensor& t : inputs) leaves.push_back(tape.parameter(t));
    return fn(tape, leaves);
  };
  return grad_check(wrapped, ptrs, options);
}

}  // namespace mosgnn

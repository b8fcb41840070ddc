#pragma once

// Reverse-mode differentiation over a tape of primitive ops.
//
// Every op evaluates its forward value eagerly, pushes a node onto the tape
// and records a closure holding its vector-Jacobian product. Tape::backward
// replays the closures in reverse creation order. Leaves created with
// Tape::parameter forward their accumulated gradient into the parameter
// tensor's grad slot.

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "mosgnn/tensor.hpp"

namespace mosgnn {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  [[nodiscard]] const Tensor& value() const;
  [[nodiscard]] std::size_t rows() const { return value().rows; }
  [[nodiscard]] std::size_t cols() const { return value().cols; }
  [[nodiscard]] double item() const { return value().item(); }
  [[nodiscard]] Tape* tape() const noexcept { return tape_; }
  [[nodiscard]] std::size_t id() const noexcept { return id_; }
  [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient.
  Var constant(Tensor value);
  /// Leaf bound to a trainable tensor; backward() adds into param.grad.
  Var parameter(Tensor& param);
  /// Records an op result. `parents` decide whether the node needs a gradient.
  /// Throws NumericError if `value` holds a non-finite entry.
  Var record(std::string_view op, Tensor value, std::span<const Var> parents, Backward backward);

  [[nodiscard]] const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  [[nodiscard]] bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, allocated (zeroed) on first access.
  std::vector<double>& grad(std::size_t id);

  /// Seeds d(root)/d(root) = 1 and propagates. Root must be 1x1.
  void backward(Var root);

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    Backward backward;
    Tensor* param = nullptr;
    bool requires_grad = false;
  };
  std::deque<Node> nodes_;
};

enum class Reduce { mean, sum };

// ---- dense algebra --------------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// a (n x c) + bias (1 x c), broadcast over rows.
Var add_row(Var a, Var bias);
Var relu(Var a);
Var concat_cols(Var a, Var b);
/// Stacks tensors with equal column counts vertically.
Var concat_rows(std::span<const Var> parts);
/// Rows of `x` at `indices` (repeats allowed); backward scatter-adds.
Var gather_rows(Var x, std::vector<std::size_t> indices);
Var sum_all(Var a);
Var mean_all(Var a);

/// Constant sparse operator times dense x.
Var spmm(std::shared_ptr<const CsrMatrix> op, Var x);
/// Column-wise reduction per row segment [offsets[s], offsets[s+1]); returns
/// (segments x cols). Every segment must be nonempty.
Var segment_reduce(Var x, std::vector<std::size_t> offsets, Reduce mode);

// ---- losses ---------------------------------------------------------------

/// Mean over rows of -log softmax(logits)[label]. Optional per-sample
/// weights multiply each term before averaging over the row count.
Var softmax_cross_entropy(Var logits, std::span<const int> labels,
                          std::span<const double> weights = {});
/// Mean over rows of -alpha_y (1 - p_y)^gamma log p_y.
Var focal_loss(Var logits, std::span<const int> labels, double gamma,
               std::span<const double> alpha);
/// Mean stable binary cross-entropy; `logits` is (n x 1) or (1 x n).
Var bce_with_logits(Var logits, std::span<const int> targets);

// ---- top-k ----------------------------------------------------------------

/// Indices of the k largest entries, ordered by descending value; ties go to
/// the lowest index.
std::vector<std::size_t> topk_indices(std::span<const double> scores, std::size_t k);
/// Mean of the k largest entries of a vector-shaped tensor.
Var topk_mean(Var scores, std::size_t k);
/// Mean of the k largest row L2 norms.
Var row_l2_topk_mean(Var x, std::size_t k);

}  // namespace mosgnn

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace mosgnn {

/// Dense row-major 2-D array of doubles with an optional gradient slot.
///
/// `grad` is empty until a gradient is attached with ensure_grad(); when
/// present it always has the same length as `values`.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}
  Tensor(std::size_t r, std::size_t c, std::vector<double> v);

  static Tensor zeros(std::size_t r, std::size_t c) { return {r, c}; }
  static Tensor identity(std::size_t n);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor scalar(double v) { return {1, 1, v}; }

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  [[nodiscard]] bool has_grad() const noexcept { return !grad.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  [[nodiscard]] std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }

  /// Scalar value of a 1x1 tensor.
  [[nodiscard]] double item() const;

  void ensure_grad();
  void zero_grad();

  [[nodiscard]] bool all_finite() const noexcept;
};

/// Compressed sparse row matrix used as a constant propagation operator
/// (normalized adjacency of one graph or a block-diagonal batch of graphs).
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1 entries
  std::vector<std::uint32_t> col_idx;
  std::vector<double> vals;

  [[nodiscard]] std::size_t nnz() const noexcept { return vals.size(); }
  [[nodiscard]] Tensor to_dense() const;
};

}  // namespace mosgnn

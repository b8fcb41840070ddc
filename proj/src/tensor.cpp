#include "mosgnn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mosgnn/errors.hpp"

namespace mosgnn {

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
  if (values.size() != rows * cols) {
    throw ShapeError("tensor value count does not match shape");
  }
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Tensor t;
  t.rows = rows.size();
  t.cols = rows.size() == 0 ? 0 : rows.begin()->size();
  t.values.reserve(t.rows * t.cols);
  for (const auto& r : rows) {
    if (r.size() != t.cols) throw ShapeError("ragged rows");
    t.values.insert(t.values.end(), r.begin(), r.end());
  }
  return t;
}

double Tensor::item() const {
  if (rows != 1 || cols != 1) throw ShapeError("item() requires a 1x1 tensor");
  return values[0];
}

void Tensor::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Tensor CsrMatrix::to_dense() const {
  Tensor t(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) t(r, col_idx[p]) += vals[p];
  }
  return t;
}

}  // namespace mosgnn

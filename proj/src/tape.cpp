#include "mosgnn/tape.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mosgnn/errors.hpp"

namespace mosgnn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

ConstMap view(const Tensor& t) { return {t.values.data(), Eigen::Index(t.rows), Eigen::Index(t.cols)}; }
ConstMap view(const std::vector<double>& v, std::size_t r, std::size_t c) {
  return {v.data(), Eigen::Index(r), Eigen::Index(c)};
}
Map view_mut(std::vector<double>& v, std::size_t r, std::size_t c) {
  return {v.data(), Eigen::Index(r), Eigen::Index(c)};
}

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || a.tape() != b.tape()) throw std::invalid_argument("vars belong to different tapes");
  return *a.tape();
}

void require_shape(bool ok, const char* op, const char* what) {
  if (!ok) throw ShapeError(std::string(op) + ": " + what);
}

double log_sum_exp(std::span<const double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  return mx + std::log(s);
}

bool is_vector(const Tensor& t) { return t.rows == 1 || t.cols == 1; }

}  // namespace

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite input");
  value.grad.clear();
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Tensor& param) {
  if (!param.all_finite()) throw NumericError("parameter: non-finite value");
  Tensor copy(param.rows, param.cols, param.values);
  nodes_.push_back(Node{std::move(copy), {}, {}, &param, true});
  return {this, nodes_.size() - 1};
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> parents, Backward backward) {
  if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite output");
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw std::invalid_argument(std::string(op) + ": var from another tape");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return {this, nodes_.size() - 1};
}

std::vector<double>& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw std::invalid_argument("backward: root from another tape");
  if (root.rows() != 1 || root.cols() != 1) throw ShapeError("backward: root must be 1x1");
  if (!nodes_[root.id()].requires_grad) return;
  grad(root.id())[0] += 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      n.param->ensure_grad();
      for (std::size_t j = 0; j < n.grad.size(); ++j) n.param->grad[j] += n.grad[j];
    }
  }
}

// ---- dense algebra --------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_shape(av.cols == bv.rows, "matmul", "inner dimensions differ");
  Tensor out(av.rows, bv.cols);
  if (av.cols > 0) view_mut(out.values, out.rows, out.cols).noalias() = view(av) * view(bv);
  const Var parents[] = {a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return t.record("matmul", std::move(out), parents, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& A = tp.value(ia);
    const Tensor& B = tp.value(ib);
    const auto G = view(tp.grad(self), A.rows, B.cols);
    if (tp.requires_grad(ia)) view_mut(tp.grad(ia), A.rows, A.cols).noalias() += G * view(B).transpose();
    if (tp.requires_grad(ib)) view_mut(tp.grad(ib), B.rows, B.cols).noalias() += view(A).transpose() * G;
  });
}

namespace {

Var elementwise_pair(const char* op, Var a, Var b, double sign_b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_shape(av.rows == bv.rows && av.cols == bv.cols, op, "shape mismatch");
  Tensor out(av.rows, av.cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = av.values[i] + sign_b * bv.values[i];
  const Var parents[] = {a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(op, std::move(out), parents, [ia, ib, sign_b](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    if (tp.requires_grad(ia)) {
      auto& ga = tp.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.requires_grad(ib)) {
      auto& gb = tp.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign_b * g[i];
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return elementwise_pair("add", a, b, 1.0); }
Var sub(Var a, Var b) { return elementwise_pair("sub", a, b, -1.0); }

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.values) v *= s;
  const Var parents[] = {a};
  const std::size_t ia = a.id();
  return a.tape()->record("scale", std::move(out), parents, [ia, s](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    auto& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var add_scalar(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.values) v += s;
  const Var parents[] = {a};
  const std::size_t ia = a.id();
  return a.tape()->record("add_scalar", std::move(out), parents, [ia](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    auto& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var add_row(Var a, Var bias) {
  Tape& t = same_tape(a, bias);
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  require_shape(bv.rows == 1 && bv.cols == av.cols, "add_row", "bias must be 1 x cols");
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) += bv.values[c];
  }
  const Var parents[] = {a, bias};
  const std::size_t ia = a.id(), ib = bias.id();
  const std::size_t rows = av.rows, cols = av.cols;
  return t.record("add_row", std::move(out), parents, [ia, ib, rows, cols](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    if (tp.requires_grad(ia)) {
      auto& ga = tp.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.requires_grad(ib)) {
      auto& gb = tp.grad(ib);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
      }
    }
  });
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& v : out.values) v = v > 0.0 ? v : 0.0;
  const Var parents[] = {a};
  const std::size_t ia = a.id();
  return a.tape()->record("relu", std::move(out), parents, [ia](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    const auto& x = tp.value(ia).values;
    auto& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_shape(av.rows == bv.rows, "concat_cols", "row counts differ");
  Tensor out(av.rows, av.cols + bv.cols);
  for (std::size_t r = 0; r < out.rows; ++r) {
    std::copy(av.row(r).begin(), av.row(r).end(), out.row(r).begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), out.row(r).begin() + av.cols);
  }
  const Var parents[] = {a, b};
  const std::size_t ia = a.id(), ib = b.id();
  const std::size_t ca = av.cols, cb = bv.cols, rows = av.rows;
  return t.record("concat_cols", std::move(out), parents, [=](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    const std::size_t w = ca + cb;
    if (tp.requires_grad(ia)) {
      auto& ga = tp.grad(ia);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < ca; ++c) ga[r * ca + c] += g[r * w + c];
      }
    }
    if (tp.requires_grad(ib)) {
      auto& gb = tp.grad(ib);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cb; ++c) gb[r * cb + c] += g[r * w + ca + c];
      }
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Tape& t = *parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets{0};
  for (const Var& p : parts) {
    require_shape(p.cols() == cols, "concat_rows", "column counts differ");
    rows += p.rows();
    ids.push_back(p.id());
    offsets.push_back(rows * cols);
  }
  Tensor out(rows, cols);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& v = parts[i].value().values;
    std::copy(v.begin(), v.end(), out.values.begin() + std::ptrdiff_t(offsets[i]));
  }
  return t.record("concat_rows", std::move(out), parts,
                  [ids = std::move(ids), offsets = std::move(offsets)](Tape& tp, std::size_t self) {
                    const auto& g = tp.grad(self);
                    for (std::size_t i = 0; i < ids.size(); ++i) {
                      if (!tp.requires_grad(ids[i])) continue;
                      auto& gi = tp.grad(ids[i]);
                      for (std::size_t j = 0; j < gi.size(); ++j) gi[j] += g[offsets[i] + j];
                    }
                  });
}

Var gather_rows(Var x, std::vector<std::size_t> indices) {
  const Tensor& xv = x.value();
  Tensor out(indices.size(), xv.cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= xv.rows) throw std::out_of_range("gather_rows: index out of range");
    std::copy(xv.row(indices[i]).begin(), xv.row(indices[i]).end(), out.row(i).begin());
  }
  const Var parents[] = {x};
  const std::size_t ix = x.id();
  const std::size_t cols = xv.cols;
  return x.tape()->record("gather_rows", std::move(out), parents,
                          [ix, cols, idx = std::move(indices)](Tape& tp, std::size_t self) {
                            const auto& g = tp.grad(self);
                            auto& gx = tp.grad(ix);
                            for (std::size_t i = 0; i < idx.size(); ++i) {
                              for (std::size_t c = 0; c < cols; ++c) gx[idx[i] * cols + c] += g[i * cols + c];
                            }
                          });
}

Var sum_all(Var a) {
  const auto& v = a.value().values;
  double s = 0.0;
  for (double x : v) s += x;
  const Var parents[] = {a};
  const std::size_t ia = a.id();
  return a.tape()->record("sum_all", Tensor::scalar(s), parents, [ia](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0];
    for (double& x : tp.grad(ia)) x += g;
  });
}

Var mean_all(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean_all: empty tensor");
  return scale(sum_all(a), 1.0 / double(n));
}

Var spmm(std::shared_ptr<const CsrMatrix> op, Var x) {
  const Tensor& xv = x.value();
  require_shape(op->cols == xv.rows, "spmm", "operator columns differ from input rows");
  const std::size_t d = xv.cols;
  Tensor out(op->rows, d);
  for (std::size_t r = 0; r < op->rows; ++r) {
    double* o = out.values.data() + r * d;
    for (std::size_t p = op->row_ptr[r]; p < op->row_ptr[r + 1]; ++p) {
      const double w = op->vals[p];
      const double* in = xv.values.data() + std::size_t(op->col_idx[p]) * d;
      for (std::size_t c = 0; c < d; ++c) o[c] += w * in[c];
    }
  }
  const Var parents[] = {x};
  const std::size_t ix = x.id();
  return x.tape()->record("spmm", std::move(out), parents, [ix, d, op = std::move(op)](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    auto& gx = tp.grad(ix);
    for (std::size_t r = 0; r < op->rows; ++r) {
      const double* gr = g.data() + r * d;
      for (std::size_t p = op->row_ptr[r]; p < op->row_ptr[r + 1]; ++p) {
        const double w = op->vals[p];
        double* dst = gx.data() + std::size_t(op->col_idx[p]) * d;
        for (std::size_t c = 0; c < d; ++c) dst[c] += w * gr[c];
      }
    }
  });
}

Var segment_reduce(Var x, std::vector<std::size_t> offsets, Reduce mode) {
  const Tensor& xv = x.value();
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != xv.rows) {
    throw ShapeError("segment_reduce: offsets must span all rows");
  }
  const std::size_t segs = offsets.size() - 1;
  const std::size_t d = xv.cols;
  Tensor out(segs, d);
  for (std::size_t s = 0; s < segs; ++s) {
    if (offsets[s + 1] <= offsets[s]) throw ShapeError("segment_reduce: empty segment");
    double* o = out.values.data() + s * d;
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) {
      for (std::size_t c = 0; c < d; ++c) o[c] += xv(r, c);
    }
    if (mode == Reduce::mean) {
      const double inv = 1.0 / double(offsets[s + 1] - offsets[s]);
      for (std::size_t c = 0; c < d; ++c) o[c] *= inv;
    }
  }
  const Var parents[] = {x};
  const std::size_t ix = x.id();
  return x.tape()->record("segment_reduce", std::move(out), parents,
                          [ix, d, mode, off = std::move(offsets)](Tape& tp, std::size_t self) {
                            const auto& g = tp.grad(self);
                            auto& gx = tp.grad(ix);
                            for (std::size_t s = 0; s + 1 < off.size(); ++s) {
                              const double w = mode == Reduce::mean ? 1.0 / double(off[s + 1] - off[s]) : 1.0;
                              for (std::size_t r = off[s]; r < off[s + 1]; ++r) {
                                for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += w * g[s * d + c];
                              }
                            }
                          });
}

// ---- losses ---------------------------------------------------------------

Var softmax_cross_entropy(Var logits, std::span<const int> labels, std::span<const double> weights) {
  const Tensor& z = logits.value();
  require_shape(z.cols >= 2, "softmax_cross_entropy", "need at least two classes");
  require_shape(labels.size() == z.rows, "softmax_cross_entropy", "one label per row");
  require_shape(weights.empty() || weights.size() == z.rows, "softmax_cross_entropy", "one weight per row");
  if (z.rows == 0) throw ShapeError("softmax_cross_entropy: empty batch");
  const std::size_t n = z.rows, c = z.cols;
  std::vector<double> probs(n * c);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || std::size_t(labels[i]) >= c) {
      throw std::out_of_range("softmax_cross_entropy: label out of range");
    }
    const double lse = log_sum_exp(z.row(i));
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(z(i, j) - lse);
    const double w = weights.empty() ? 1.0 : weights[i];
    total += w * (lse - z(i, std::size_t(labels[i])));
  }
  const Var parents[] = {logits};
  const std::size_t iz = logits.id();
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<double> wts(weights.begin(), weights.end());
  return logits.tape()->record(
      "softmax_cross_entropy", Tensor::scalar(total / double(n)), parents,
      [=, probs = std::move(probs), lab = std::move(lab), wts = std::move(wts)](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0] / double(n);
        auto& gz = tp.grad(iz);
        for (std::size_t i = 0; i < n; ++i) {
          const double w = wts.empty() ? 1.0 : wts[i];
          for (std::size_t j = 0; j < c; ++j) {
            const double target = std::size_t(lab[i]) == j ? 1.0 : 0.0;
            gz[i * c + j] += g * w * (probs[i * c + j] - target);
          }
        }
      });
}

Var focal_loss(Var logits, std::span<const int> labels, double gamma, std::span<const double> alpha) {
  const Tensor& z = logits.value();
  require_shape(z.cols >= 2, "focal_loss", "need at least two classes");
  require_shape(labels.size() == z.rows, "focal_loss", "one label per row");
  require_shape(alpha.size() == z.cols, "focal_loss", "one alpha per class");
  if (gamma < 0.0) throw std::invalid_argument("focal_loss: gamma must be >= 0");
  if (z.rows == 0) throw ShapeError("focal_loss: empty batch");
  const std::size_t n = z.rows, c = z.cols;
  std::vector<double> probs(n * c);
  // Per-row factor multiplying (p_j - delta_yj) in the gradient.
  std::vector<double> factor(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || std::size_t(labels[i]) >= c) throw std::out_of_range("focal_loss: label out of range");
    const std::size_t y = std::size_t(labels[i]);
    const double lse = log_sum_exp(z.row(i));
    double rest = 0.0;  // 1 - p_y, summed from the other classes for accuracy
    for (std::size_t j = 0; j < c; ++j) {
      probs[i * c + j] = std::exp(z(i, j) - lse);
      if (j != y) rest += probs[i * c + j];
    }
    const double log_py = z(i, y) - lse;
    const double py = probs[i * c + y];
    const double mod = std::pow(rest, gamma);
    total += -alpha[y] * mod * log_py;
    double f = mod;
    if (gamma != 0.0 && rest > 0.0) f -= gamma * std::pow(rest, gamma - 1.0) * py * log_py;
    factor[i] = alpha[y] * f;
  }
  const Var parents[] = {logits};
  const std::size_t iz = logits.id();
  std::vector<int> lab(labels.begin(), labels.end());
  return logits.tape()->record(
      "focal_loss", Tensor::scalar(total / double(n)), parents,
      [=, probs = std::move(probs), factor = std::move(factor), lab = std::move(lab)](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0] / double(n);
        auto& gz = tp.grad(iz);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            const double target = std::size_t(lab[i]) == j ? 1.0 : 0.0;
            gz[i * c + j] += g * factor[i] * (probs[i * c + j] - target);
          }
        }
      });
}

Var bce_with_logits(Var logits, std::span<const int> targets) {
  const Tensor& z = logits.value();
  require_shape(is_vector(z), "bce_with_logits", "logits must be a vector");
  require_shape(targets.size() == z.size(), "bce_with_logits", "one target per logit");
  if (z.size() == 0) throw ShapeError("bce_with_logits: empty input");
  const std::size_t n = z.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = z.values[i];
    const double t = targets[i] != 0 ? 1.0 : 0.0;
    total += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
  }
  const Var parents[] = {logits};
  const std::size_t iz = logits.id();
  std::vector<int> tg(targets.begin(), targets.end());
  return logits.tape()->record("bce_with_logits", Tensor::scalar(total / double(n)), parents,
                               [iz, n, tg = std::move(tg)](Tape& tp, std::size_t self) {
                                 const double g = tp.grad(self)[0] / double(n);
                                 const auto& x = tp.value(iz).values;
                                 auto& gz = tp.grad(iz);
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double s = x[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-x[i]))
                                                                : std::exp(x[i]) / (1.0 + std::exp(x[i]));
                                   gz[i] += g * (s - (tg[i] != 0 ? 1.0 : 0.0));
                                 }
                               });
}

// ---- top-k ----------------------------------------------------------------

std::vector<std::size_t> topk_indices(std::span<const double> scores, std::size_t k) {
  if (k < 1 || k > scores.size()) throw std::out_of_range("topk: k out of range");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + std::ptrdiff_t(k), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  idx.resize(k);
  return idx;
}

Var topk_mean(Var scores, std::size_t k) {
  const Tensor& s = scores.value();
  require_shape(is_vector(s), "topk_mean", "scores must be a vector");
  auto sel = topk_indices(s.values, k);
  double total = 0.0;
  for (std::size_t i : sel) total += s.values[i];
  const Var parents[] = {scores};
  const std::size_t is = scores.id();
  return scores.tape()->record("topk_mean", Tensor::scalar(total / double(k)), parents,
                               [is, k, sel = std::move(sel)](Tape& tp, std::size_t self) {
                                 const double g = tp.grad(self)[0] / double(k);
                                 auto& gs = tp.grad(is);
                                 for (std::size_t i : sel) gs[i] += g;
                               });
}

Var row_l2_topk_mean(Var x, std::size_t k) {
  const Tensor& xv = x.value();
  std::vector<double> norms(xv.rows);
  for (std::size_t r = 0; r < xv.rows; ++r) {
    double s = 0.0;
    for (double v : xv.row(r)) s += v * v;
    norms[r] = std::sqrt(s);
  }
  auto sel = topk_indices(norms, k);
  double total = 0.0;
  for (std::size_t i : sel) total += norms[i];
  const Var parents[] = {x};
  const std::size_t ix = x.id();
  const std::size_t d = xv.cols;
  return x.tape()->record("row_l2_topk_mean", Tensor::scalar(total / double(k)), parents,
                          [ix, k, d, sel = std::move(sel), norms = std::move(norms)](Tape& tp, std::size_t self) {
                            const double g = tp.grad(self)[0] / double(k);
                            const auto& xvals = tp.value(ix).values;
                            auto& gx = tp.grad(ix);
                            for (std::size_t r : sel) {
                              if (norms[r] == 0.0) continue;
                              for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += g * xvals[r * d + c] / norms[r];
                            }
                          });
}

}  // namespace mosgnn

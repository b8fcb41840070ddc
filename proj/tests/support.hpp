#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "mosgnn/dataset_io.hpp"
#include "mosgnn/grad_check.hpp"
#include "mosgnn/graph.hpp"
#include "mosgnn/objectives.hpp"
#include "mosgnn/rng.hpp"
#include "mosgnn/tape.hpp"

namespace support {

using namespace mosgnn;

inline Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (double& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

/// Erdos-Renyi graph with uniform random features.
inline Graph random_graph(std::size_t n, double p, std::size_t feat, Rng& rng, int label = kMajority,
                          std::int64_t id = 0) {
  std::vector<Edge> edges;
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) edges.push_back({u, v});
    }
  }
  return make_graph(random_tensor(n, feat, rng, 0.0, 1.0), std::move(edges), label, id);
}

/// Sort-based top-k: indices ordered by value descending, ties to the lower index.
inline std::vector<std::size_t> topk_oracle(const std::vector<double>& x, std::size_t k) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });
  idx.resize(k);
  return idx;
}

inline std::vector<std::vector<bool>> adjacency(const Graph& g) {
  std::vector<std::vector<bool>> a(g.num_nodes(), std::vector<bool>(g.num_nodes(), false));
  for (const Edge& e : g.edges) a[e.u][e.v] = a[e.v][e.u] = true;
  return a;
}

inline bool has_triangle(const Graph& g) {
  const auto a = adjacency(g);
  const std::size_t n = g.num_nodes();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        if (a[i][j] && a[j][k] && a[i][k]) return true;
  return false;
}

/// Enumerates every 5-node subset; an induced subgraph with 5 edges and all
/// degrees 2 on 5 nodes is exactly a 5-cycle.
inline bool has_induced_c5(const Graph& g) {
  const auto a = adjacency(g);
  const std::size_t n = g.num_nodes();
  if (n < 5) return false;
  std::vector<std::size_t> s(5);
  std::vector<bool> pick(n, false);
  std::fill(pick.end() - 5, pick.end(), true);
  do {
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) s[m++] = i;
    int edges = 0;
    bool two_regular = true;
    for (std::size_t i = 0; i < 5; ++i) {
      int deg = 0;
      for (std::size_t j = 0; j < 5; ++j) deg += (i != j && a[s[i]][s[j]]) ? 1 : 0;
      edges += deg;
      two_regular = two_regular && deg == 2;
    }
    if (two_regular && edges == 10) return true;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return false;
}

/// -log softmax(logits)[y] by direct evaluation.
inline double direct_ce(const std::vector<double>& logits, int y) {
  double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  return -(logits[std::size_t(y)] - mx - std::log(z));
}

inline double direct_bce(double z, int t) {
  const double s = 1.0 / (1.0 + std::exp(-z));
  return -(t * std::log(s) + (1 - t) * std::log(1.0 - s));
}

/// Gradient checks of every differentiable primitive on random inputs.
inline std::vector<std::pair<std::string, GradCheckReport>> primitive_grad_checks(std::uint64_t seed,
                                                                                  const GradCheckOptions& opt) {
  Rng rng(seed);
  std::vector<std::pair<std::string, GradCheckReport>> out;
  auto check = [&](const std::string& name, std::vector<Tensor> inputs,
                   const std::function<Var(Tape&, std::span<const Var>)>& fn) {
    out.emplace_back(name, grad_check(fn, std::move(inputs), opt));
  };
  // Fixed random linear functional l^T x r; the weights depend only on the
  // shape so every evaluation inside grad_check sees the same function.
  auto functional = [seed](Var x) {
    Tape& t = *x.tape();
    Rng rng(derive_seed(seed, {x.rows(), x.cols()}));
    Tensor r(x.cols(), 1);
    for (double& v : r.values) v = rng.uniform(-1.0, 1.0);
    Tensor l(1, x.rows());
    for (double& v : l.values) v = rng.uniform(-1.0, 1.0);
    return matmul(t.constant(std::move(l)), matmul(x, t.constant(std::move(r))));
  };

  check("matmul", {random_tensor(3, 4, rng), random_tensor(4, 2, rng)},
        [&](Tape&, std::span<const Var> v) { return functional(matmul(v[0], v[1])); });
  check("add", {random_tensor(3, 2, rng), random_tensor(3, 2, rng)},
        [&](Tape&, std::span<const Var> v) { return functional(add(v[0], v[1])); });
  check("sub", {random_tensor(3, 2, rng), random_tensor(3, 2, rng)},
        [&](Tape&, std::span<const Var> v) { return functional(sub(v[0], v[1])); });
  check("scale", {random_tensor(2, 3, rng)},
        [&](Tape&, std::span<const Var> v) { return functional(scale(v[0], -1.7)); });
  check("add_scalar", {random_tensor(2, 3, rng)},
        [&](Tape&, std::span<const Var> v) { return functional(add_scalar(v[0], 0.3)); });
  check("add_row", {random_tensor(4, 3, rng), random_tensor(1, 3, rng)},
        [&](Tape&, std::span<const Var> v) { return functional(add_row(v[0], v[1])); });
  {
    // keep entries away from the kink at 0
    Tensor x = random_tensor(3, 3, rng);
    for (double& e : x.values) e = (e < 0 ? -0.2 : 0.2) + e;
    check("relu", {x}, [&](Tape&, std::span<const Var> v) { return functional(relu(v[0])); });
  }
  check("concat_cols", {random_tensor(3, 2, rng), random_tensor(3, 1, rng)},
        [&](Tape&, std::span<const Var> v) { return functional(concat_cols(v[0], v[1])); });
  check("concat_rows", {random_tensor(2, 3, rng), random_tensor(1, 3, rng), random_tensor(3, 3, rng)},
        [&](Tape&, std::span<const Var> v) { return functional(concat_rows(v)); });
  check("gather_rows", {random_tensor(4, 2, rng)}, [&](Tape&, std::span<const Var> v) {
    return functional(gather_rows(v[0], {3, 0, 3, 1}));
  });
  check("sum_all", {random_tensor(3, 2, rng)}, [](Tape&, std::span<const Var> v) { return sum_all(v[0]); });
  check("mean_all", {random_tensor(3, 2, rng)}, [](Tape&, std::span<const Var> v) { return mean_all(v[0]); });
  {
    auto op = std::make_shared<CsrMatrix>();
    op->rows = 3;
    op->cols = 4;
    op->row_ptr = {0, 2, 3, 5};
    op->col_idx = {0, 3, 1, 2, 3};
    op->vals = {0.5, -1.0, 2.0, 0.25, 1.5};
    check("spmm", {random_tensor(4, 2, rng)},
          [&, op](Tape&, std::span<const Var> v) { return functional(spmm(op, v[0])); });
  }
  check("segment_reduce(mean)", {random_tensor(5, 2, rng)}, [&](Tape&, std::span<const Var> v) {
    return functional(segment_reduce(v[0], {0, 2, 5}, Reduce::mean));
  });
  check("segment_reduce(sum)", {random_tensor(5, 2, rng)}, [&](Tape&, std::span<const Var> v) {
    return functional(segment_reduce(v[0], {0, 3, 5}, Reduce::sum));
  });
  {
    const std::vector<int> labels{0, 1, 1, 0};
    const std::vector<double> weights{1.0, 2.5, 0.5, 1.0};
    check("softmax_cross_entropy", {random_tensor(4, 2, rng, -2, 2)}, [labels, weights](Tape&, std::span<const Var> v) {
      return softmax_cross_entropy(v[0], labels, weights);
    });
    const std::vector<double> alpha{0.4, 1.6};
    check("focal_loss(gamma=2)", {random_tensor(4, 2, rng, -2, 2)}, [labels, alpha](Tape&, std::span<const Var> v) {
      return focal_loss(v[0], labels, 2.0, alpha);
    });
    check("focal_loss(gamma=0.5)", {random_tensor(4, 2, rng, -2, 2)},
          [labels, alpha](Tape&, std::span<const Var> v) { return focal_loss(v[0], labels, 0.5, alpha); });
    check("bce_with_logits", {random_tensor(4, 1, rng, -3, 3)},
          [labels](Tape&, std::span<const Var> v) { return bce_with_logits(v[0], labels); });
  }
  {
    // distinct, well-separated values so the selection is stable under +-h
    Tensor s(7, 1);
    std::vector<double> base{0.9, -0.4, 0.35, 1.3, -1.1, 0.05, 0.6};
    s.values = base;
    check("topk_mean", {s}, [](Tape&, std::span<const Var> v) { return topk_mean(v[0], 3); });
    check("row_l2_topk_mean", {random_tensor(5, 3, rng)},
          [](Tape&, std::span<const Var> v) { return row_l2_topk_mean(v[0], 2); });
  }
  return out;
}

/// A 4-graph micro-batch (2 majority, 2 minority) and everything sampled
/// for one step of the full objective.
struct MicroBatch {
  GraphDataset ds;
  ModelConfig model;
  LossConfig loss;
  BatchData batch;
};

inline MicroBatch make_micro_batch(std::uint64_t seed, std::size_t hidden = 6, std::size_t head_hidden = 5) {
  Rng rng(seed);
  std::vector<Graph> graphs;
  const int labels[] = {kMajority, kMinority, kMajority, kMinority};
  for (int i = 0; i < 4; ++i) graphs.push_back(random_graph(5 + std::size_t(i), 0.5, 3, rng, labels[i]));
  MicroBatch mb{make_dataset("micro", std::move(graphs)), {}, {}, {}};
  mb.model.encoder.hidden_dim = hidden;
  mb.model.head_hidden = head_hidden;
  mb.model.q = 4;
  mb.loss.k = 2;
  std::vector<Member> members;
  for (const Graph& g : mb.ds.graphs) members.push_back({g.graph_id, g.label});
  mb.batch = prepare_batch(mb.ds, members, mb.model, mb.loss, derive_seed(seed, {7}));
  return mb;
}

}  // namespace support

#include "mosgnn/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mosgnn/errors.hpp"

namespace mosgnn {

std::string to_string(Backbone b) { return b == Backbone::gcn ? "gcn" : "gin"; }

Backbone backbone_from_string(const std::string& s) {
  if (s == "gcn") return Backbone::gcn;
  if (s == "gin") return Backbone::gin;
  throw std::invalid_argument("unknown backbone '" + s + "'");
}

std::string to_string(Reduce r) { return r == Reduce::mean ? "mean" : "sum"; }

Reduce readout_from_string(const std::string& s) {
  if (s == "mean") return Reduce::mean;
  if (s == "sum") return Reduce::sum;
  throw std::invalid_argument("unknown readout '" + s + "'");
}

std::size_t EncoderParams::input_dim() const {
  if (backbone == Backbone::gcn) return gcn.empty() ? 0 : gcn.front().weight.rows;
  return gin.empty() ? 0 : gin.front().layers.front().weight.rows;
}

std::size_t EncoderParams::output_dim() const {
  if (backbone == Backbone::gcn) return gcn.empty() ? 0 : gcn.back().weight.cols;
  return gin.empty() ? 0 : gin.back().layers.back().weight.cols;
}

Linear init_linear(std::size_t in, std::size_t out, Rng& rng) {
  Linear l{Tensor(in, out), Tensor(1, out)};
  const double bound = std::sqrt(6.0 / double(in + out));
  for (double& w : l.weight.values) w = rng.uniform(-bound, bound);
  return l;
}

Mlp init_mlp(std::span<const std::size_t> widths, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("init_mlp: need at least input and output widths");
  Mlp m;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) m.layers.push_back(init_linear(widths[i], widths[i + 1], rng));
  return m;
}

EncoderParams init_encoder(const EncoderConfig& cfg, std::size_t input_dim, Rng& rng) {
  if (cfg.n_layers < 1) throw std::invalid_argument("encoder: n_layers must be >= 1");
  if (cfg.hidden_dim < 1) throw std::invalid_argument("encoder: hidden_dim must be >= 1");
  if (input_dim < 1) throw std::invalid_argument("encoder: input_dim must be >= 1");
  EncoderParams p;
  p.backbone = cfg.backbone;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::size_t in = l == 0 ? input_dim : cfg.hidden_dim;
    if (cfg.backbone == Backbone::gcn) {
      p.gcn.push_back(init_linear(in, cfg.hidden_dim, rng));
    } else {
      const std::size_t widths[] = {in, cfg.hidden_dim, cfg.hidden_dim};
      p.gin.push_back(init_mlp(widths, rng));
    }
  }
  return p;
}

void named_tensors(Linear& l, const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out) {
  out.emplace_back(prefix + ".weight", &l.weight);
  out.emplace_back(prefix + ".bias", &l.bias);
}

void named_tensors(Mlp& m, const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out) {
  for (std::size_t i = 0; i < m.layers.size(); ++i) named_tensors(m.layers[i], prefix + "." + std::to_string(i), out);
}

void named_tensors(EncoderParams& p, const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out) {
  for (std::size_t i = 0; i < p.gcn.size(); ++i) named_tensors(p.gcn[i], prefix + ".gcn" + std::to_string(i), out);
  for (std::size_t i = 0; i < p.gin.size(); ++i) named_tensors(p.gin[i], prefix + ".gin" + std::to_string(i), out);
}

Tensor normalize_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  Tensor a = Tensor::identity(n);
  for (const Edge& e : g.edges) {
    a(e.u, e.v) = 1.0;
    a(e.v, e.u) = 1.0;
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += a(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) *= inv_sqrt[i] * inv_sqrt[j];
  }
  return a;
}

CsrMatrix batch_operator(std::span<const Graph* const> graphs, Backbone backbone, double gin_epsilon) {
  std::size_t total = 0, nnz = 0;
  for (const Graph* g : graphs) {
    total += g->num_nodes();
    nnz += g->num_nodes() + 2 * g->edges.size();
  }
  CsrMatrix op;
  op.rows = op.cols = total;
  op.row_ptr.assign(total + 1, 0);
  op.col_idx.reserve(nnz);
  op.vals.reserve(nnz);

  std::size_t base = 0;
  for (const Graph* g : graphs) {
    const std::size_t n = g->num_nodes();
    std::vector<std::vector<std::uint32_t>> nbrs(n);
    for (const Edge& e : g->edges) {
      nbrs[e.u].push_back(e.v);
      nbrs[e.v].push_back(e.u);
    }
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(double(nbrs[i].size() + 1));
    for (std::size_t i = 0; i < n; ++i) {
      auto& row = nbrs[i];
      row.push_back(std::uint32_t(i));
      std::sort(row.begin(), row.end());
      for (std::uint32_t j : row) {
        double w;
        if (backbone == Backbone::gcn) {
          w = inv_sqrt[i] * inv_sqrt[j];
        } else {
          w = j == i ? 1.0 + gin_epsilon : 1.0;
        }
        op.col_idx.push_back(std::uint32_t(base + j));
        op.vals.push_back(w);
      }
      op.row_ptr[base + i + 1] = op.vals.size();
    }
    base += n;
  }
  return op;
}

Var linear(Tape& tape, Linear& l, Var x) {
  return add_row(matmul(x, tape.parameter(l.weight)), tape.parameter(l.bias));
}

Var mlp_forward(Tape& tape, Mlp& m, Var x) {
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    x = linear(tape, m.layers[i], x);
    if (i + 1 < m.layers.size()) x = relu(x);
  }
  return x;
}

Var gcn_layer(Var adj, Var h, Var w, Var b) { return relu(add_row(matmul(matmul(adj, h), w), b)); }

Var gcn_layer(std::shared_ptr<const CsrMatrix> adj, Var h, Var w, Var b) {
  return relu(add_row(matmul(spmm(std::move(adj), h), w), b));
}

Var gin_layer(Tape& tape, Var adj, Var h, Mlp& mlp, double epsilon) {
  return mlp_forward(tape, mlp, add(scale(h, 1.0 + epsilon), matmul(adj, h)));
}

Var readout(Var h, Reduce mode) { return segment_reduce(h, {0, h.rows()}, mode); }

Var encode_batch(Tape& tape, std::span<const Graph* const> graphs, const EncoderConfig& cfg, EncoderParams& params) {
  if (graphs.empty()) throw std::invalid_argument("encode_batch: no graphs");
  if (params.backbone != cfg.backbone) throw std::invalid_argument("encode_batch: backbone mismatch");
  const std::size_t d = params.input_dim();
  std::size_t total = 0;
  std::vector<std::size_t> offsets{0};
  for (const Graph* g : graphs) {
    if (g->feature_dim() != d) {
      throw ShapeError("encode_batch: graph feature width " + std::to_string(g->feature_dim()) +
                       " differs from encoder input width " + std::to_string(d));
    }
    total += g->num_nodes();
    offsets.push_back(total);
  }
  Tensor x(total, d);
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto& v = graphs[gi]->node_features.values;
    std::copy(v.begin(), v.end(), x.values.begin() + std::ptrdiff_t(offsets[gi] * d));
  }
  auto op = std::make_shared<const CsrMatrix>(batch_operator(graphs, cfg.backbone, cfg.gin_epsilon));
  Var h = tape.constant(std::move(x));
  if (cfg.backbone == Backbone::gcn) {
    for (Linear& l : params.gcn) h = gcn_layer(op, h, tape.parameter(l.weight), tape.parameter(l.bias));
  } else {
    for (Mlp& m : params.gin) h = relu(mlp_forward(tape, m, spmm(op, h)));
  }
  return segment_reduce(h, std::move(offsets), cfg.readout);
}

Var encode_graph(Tape& tape, const Graph& g, const EncoderConfig& cfg, EncoderParams& params) {
  const Graph* one[] = {&g};
  return encode_batch(tape, one, cfg, params);
}

}  // namespace mosgnn

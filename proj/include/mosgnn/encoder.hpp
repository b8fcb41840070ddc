#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mosgnn/graph.hpp"
#include "mosgnn/rng.hpp"
#include "mosgnn/tape.hpp"

namespace mosgnn {

enum class Backbone { gcn, gin };

std::string to_string(Backbone b);
Backbone backbone_from_string(const std::string& s);
std::string to_string(Reduce r);
Reduce readout_from_string(const std::string& s);

struct EncoderConfig {
  Backbone backbone = Backbone::gcn;
  std::size_t n_layers = 3;
  std::size_t hidden_dim = 128;
  Reduce readout = Reduce::mean;
  double gin_epsilon = 0.0;
};

/// Affine map x W + b with W (in x out) and b (1 x out).
struct Linear {
  Tensor weight;
  Tensor bias;
};

/// Linear layers with ReLU between consecutive layers (none after the last).
struct Mlp {
  std::vector<Linear> layers;
};

/// GCN: one Linear per layer. GIN: one two-layer Mlp per layer.
struct EncoderParams {
  Backbone backbone = Backbone::gcn;
  std::vector<Linear> gcn;
  std::vector<Mlp> gin;

  [[nodiscard]] std::size_t input_dim() const;
  [[nodiscard]] std::size_t output_dim() const;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)); zero bias.
Linear init_linear(std::size_t in, std::size_t out, Rng& rng);
Mlp init_mlp(std::span<const std::size_t> widths, Rng& rng);
EncoderParams init_encoder(const EncoderConfig& cfg, std::size_t input_dim, Rng& rng);

/// Named views of every trainable tensor, in a stable order.
void named_tensors(Linear& l, const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out);
void named_tensors(Mlp& m, const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out);
void named_tensors(EncoderParams& p, const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out);

/// Dense D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
Tensor normalize_adjacency(const Graph& g);

/// Block-diagonal propagation operator over a batch of graphs: the
/// normalized adjacency for GCN, A + (1 + eps) I for GIN.
CsrMatrix batch_operator(std::span<const Graph* const> graphs, Backbone backbone, double gin_epsilon);

/// Applies a Linear on the tape.
Var linear(Tape& tape, Linear& l, Var x);
/// Applies an Mlp on the tape (ReLU between layers).
Var mlp_forward(Tape& tape, Mlp& m, Var x);

/// ReLU(adj H W + b) with a dense normalized adjacency.
Var gcn_layer(Var adj, Var h, Var w, Var b);
/// Same with a constant sparse operator.
Var gcn_layer(std::shared_ptr<const CsrMatrix> adj, Var h, Var w, Var b);

/// MLP((1 + eps) H + A H) with a dense adjacency (no self-loops). The
/// encoder applies a ReLU after each GIN layer.
Var gin_layer(Tape& tape, Var adj, Var h, Mlp& mlp, double epsilon);

/// Column-wise mean or sum over rows (1 x d).
Var readout(Var h, Reduce mode);

/// Embeddings of each graph as rows of a (graphs x hidden_dim) tensor.
Var encode_batch(Tape& tape, std::span<const Graph* const> graphs, const EncoderConfig& cfg, EncoderParams& params);
/// Embedding of one graph (1 x hidden_dim).
Var encode_graph(Tape& tape, const Graph& g, const EncoderConfig& cfg, EncoderParams& params);

}  // namespace mosgnn

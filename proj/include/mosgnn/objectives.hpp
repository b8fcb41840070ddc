#pragma once

// Branch losses of the multi-scale oversampling model, their weighted sum,
// the pluggable imbalanced base losses and combined inference.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mosgnn/encoder.hpp"
#include "mosgnn/sampling.hpp"

namespace mosgnn {

enum class BaseLoss { cross_entropy, focal, logit_adjusted };

std::string to_string(BaseLoss b);
BaseLoss base_loss_from_string(const std::string& s);

struct LossConfig {
  BaseLoss base_loss = BaseLoss::cross_entropy;
  /// Weight of the graph-level loss; 0 switches the graph branch off.
  double graph_weight = 1.0;
  double lambda = 1.0;
  double beta = 1.0;
  std::size_t k = 3;
  double margin = 100.0;
  double eta = 1e-4;
  double focal_gamma = 2.0;
  std::array<double, 2> focal_alpha{1.0, 1.0};
  double la_tau = 1.0;
  std::array<double, 2> class_priors{0.5, 0.5};
};

/// Throws std::invalid_argument on an inconsistent LossConfig.
void validate(const LossConfig& cfg);

/// Inverse class frequency normalized to mean 1.
std::array<double, 2> inverse_frequency_alpha(std::size_t majority, std::size_t minority);
std::array<double, 2> empirical_priors(std::size_t majority, std::size_t minority);

struct ModelConfig {
  EncoderConfig encoder;
  std::size_t head_hidden = 64;
  /// Use the graph encoder for subgraphs too.
  bool share_encoders = false;
  std::size_t q = 10;
  double node_drop = 0.2;
  double edge_drop = 0.2;
};

struct ModelParams {
  EncoderParams encoder_graph;
  EncoderParams encoder_subgraph;
  Mlp head_g;
  Mlp head_p;
  Mlp head_s;

  [[nodiscard]] std::vector<std::pair<std::string, Tensor*>> named();
  [[nodiscard]] std::vector<Tensor*> tensors();
  void zero_grad();
};

ModelParams init_model(const ModelConfig& cfg, std::size_t input_dim, std::uint64_t seed);

/// The configured base loss (cross-entropy, focal or logit-adjusted) over
/// 2-class logits.
Var base_loss(Var logits, std::span<const int> labels, const LossConfig& cfg);

struct BranchOutput {
  Var logits;
  Var loss;
};

/// 2-class logits of every embedding row and the mean base loss.
BranchOutput graph_branch(Tape& tape, Var embeddings, std::span<const int> labels, Mlp& head_g,
                          const LossConfig& cfg);

/// Logits of head_p over [h_left, h_right] per pair and the mean base loss.
BranchOutput pair_branch(Tape& tape, Var embeddings, std::span<const PairSample> pairs, Mlp& head_p,
                         const LossConfig& cfg);

/// Mean of the top-k head_s scores over the union of two bags' subgraph
/// embeddings (each q x d).
Var mil_score(Tape& tape, Var left_bag, Var right_bag, Mlp& head_s, std::size_t k);

/// Batched form: `instance_scores` holds one head_s score per subgraph, bag b
/// owning rows [bag_offsets[b], bag_offsets[b+1]). Returns (pairs x 1).
Var mil_scores(Var instance_scores, std::span<const std::size_t> bag_offsets, std::span<const BagPair> pairs,
               std::size_t k);

/// Mean binary cross-entropy of pair scores (as logits) against their labels.
Var mil_loss(Var pair_scores, std::span<const BagPair> pairs);

/// Mean over (minority bag, majority bag) pairs of
/// max(0, margin - g_k(minority) + g_k(majority)), g_k = row_l2_topk_mean.
/// An empty pair list yields a constant 0 and a warning.
Var magnitude_reg(Tape& tape, std::span<const std::pair<Var, Var>> minority_majority, std::size_t k, double margin);

struct SubgraphBranchOutput {
  Var mil;
  Var reg;
  Var loss;
};

/// Encodes every bag, scores the bag pairs and returns L_mil + eta L_reg.
SubgraphBranchOutput subgraph_branch(Tape& tape, std::span<const SubgraphBag> bags, std::span<const BagPair> pairs,
                                     ModelParams& params, const ModelConfig& model, const LossConfig& cfg);

/// graph_weight * L_g + lambda * L_p + beta * L_s; branches passed as
/// invalid Vars are skipped.
Var total_loss(Var graph_loss, Var pair_loss, Var subgraph_loss, const LossConfig& cfg);

/// Everything sampled for one training step.
struct BatchData {
  std::vector<Member> members;
  std::vector<const Graph*> graphs;
  std::vector<PairSample> pairs;
  std::vector<SubgraphBag> bags;
  std::vector<BagPair> bag_pairs;
};

/// Samples pairs (n_pairs = batch size), one subgraph bag per slot and bag
/// pairs. Branches with zero weight are not sampled.
BatchData prepare_batch(const GraphDataset& ds, std::span<const Member> members, const ModelConfig& model,
                        const LossConfig& cfg, std::uint64_t seed);

struct LossBreakdown {
  Var total;
  Var graph;
  Var pair;
  Var subgraph;
  Var mil;
  Var reg;
};

LossBreakdown mosgnn_loss(Tape& tape, const BatchData& batch, ModelParams& params, const ModelConfig& model,
                          const LossConfig& cfg);

struct Prediction {
  int label = kMajority;
  double score = 0.0;  // combined minority probability r
  double p_graph = 0.0;
  double p_pair = 0.0;
  double p_subgraph = 0.0;
};

/// Seed of the inference-time bag of a graph.
std::uint64_t inference_bag_seed(std::int64_t graph_id);

/// Combined prediction for each graph:
/// r = (w_g p_g + lambda p_p + beta p_s) / (w_g + lambda + beta), where the
/// pair branch scores the self-pair [h, h] and the subgraph branch the graph's
/// own bag with k' = min(k, q). The bag comes from
/// sample_subgraph_bag_invariant, so r does not depend on node order.
/// Label is minority iff r >= threshold.
std::vector<Prediction> predict_batch(std::span<const Graph* const> graphs, const ModelParams& params,
                                      const ModelConfig& model, const LossConfig& cfg, double threshold);
Prediction predict(const Graph& g, const ModelParams& params, const ModelConfig& model, const LossConfig& cfg,
                   double threshold);

}  // namespace mosgnn

#include "mosgnn/objectives.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "mosgnn/errors.hpp"
#include "mosgnn/rng.hpp"

namespace mosgnn {

std::string to_string(BaseLoss b) {
  switch (b) {
    case BaseLoss::cross_entropy:
      return "ce";
    case BaseLoss::focal:
      return "focal";
    case BaseLoss::logit_adjusted:
      return "la";
  }
  return "?";
}

BaseLoss base_loss_from_string(const std::string& s) {
  if (s == "ce" || s == "cross_entropy") return BaseLoss::cross_entropy;
  if (s == "focal") return BaseLoss::focal;
  if (s == "la" || s == "logit_adjusted") return BaseLoss::logit_adjusted;
  throw std::invalid_argument("unknown loss '" + s + "'");
}

void validate(const LossConfig& cfg) {
  if (cfg.k < 1) throw std::invalid_argument("loss config: k must be >= 1");
  if (cfg.margin < 0.0) throw std::invalid_argument("loss config: margin must be >= 0");
  if (cfg.eta < 0.0) throw std::invalid_argument("loss config: eta must be >= 0");
  if (cfg.lambda < 0.0 || cfg.beta < 0.0 || cfg.graph_weight < 0.0) {
    throw std::invalid_argument("loss config: branch weights must be >= 0");
  }
  if (cfg.graph_weight + cfg.lambda + cfg.beta <= 0.0) {
    throw std::invalid_argument("loss config: every branch is switched off");
  }
  if (cfg.focal_gamma < 0.0) throw std::invalid_argument("loss config: focal gamma must be >= 0");
  const auto& p = cfg.class_priors;
  if (p[0] <= 0.0 || p[1] <= 0.0) throw std::invalid_argument("loss config: priors must be positive");
  if (std::abs(p[0] + p[1] - 1.0) > 1e-9) throw std::invalid_argument("loss config: priors must sum to 1");
}

std::array<double, 2> inverse_frequency_alpha(std::size_t majority, std::size_t minority) {
  if (majority == 0 || minority == 0) throw std::invalid_argument("alpha: both classes required");
  const double total = double(majority + minority);
  const double inv0 = total / double(majority), inv1 = total / double(minority);
  const double mean = 0.5 * (inv0 + inv1);
  return {inv0 / mean, inv1 / mean};
}

std::array<double, 2> empirical_priors(std::size_t majority, std::size_t minority) {
  if (majority == 0 || minority == 0) throw std::invalid_argument("priors: both classes required");
  const double total = double(majority + minority);
  return {double(majority) / total, double(minority) / total};
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  named_tensors(encoder_graph, "encoder_graph", out);
  named_tensors(encoder_subgraph, "encoder_subgraph", out);
  named_tensors(head_g, "head_g", out);
  named_tensors(head_p, "head_p", out);
  named_tensors(head_s, "head_s", out);
  return out;
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

void ModelParams::zero_grad() {
  for (Tensor* t : tensors()) {
    t->ensure_grad();
    t->zero_grad();
  }
}

ModelParams init_model(const ModelConfig& cfg, std::size_t input_dim, std::uint64_t seed) {
  ModelParams p;
  Rng enc_rng(derive_seed(seed, {0x656e63}));
  p.encoder_graph = init_encoder(cfg.encoder, input_dim, enc_rng);
  Rng sub_rng(derive_seed(seed, {0x737562}));
  p.encoder_subgraph = init_encoder(cfg.encoder, input_dim, sub_rng);
  const std::size_t d = cfg.encoder.hidden_dim;
  Rng head_rng(derive_seed(seed, {0x68656164}));
  const std::size_t g_widths[] = {d, cfg.head_hidden, 2};
  const std::size_t p_widths[] = {2 * d, cfg.head_hidden, 2};
  const std::size_t s_widths[] = {d, cfg.head_hidden, 1};
  p.head_g = init_mlp(g_widths, head_rng);
  p.head_p = init_mlp(p_widths, head_rng);
  p.head_s = init_mlp(s_widths, head_rng);
  return p;
}

Var base_loss(Var logits, std::span<const int> labels, const LossConfig& cfg) {
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("base_loss: label outside {0,1}");
  }
  switch (cfg.base_loss) {
    case BaseLoss::cross_entropy:
      return softmax_cross_entropy(logits, labels);
    case BaseLoss::focal:
      return focal_loss(logits, labels, cfg.focal_gamma, cfg.focal_alpha);
    case BaseLoss::logit_adjusted: {
      const auto& p = cfg.class_priors;
      if (p[0] <= 0.0 || p[1] <= 0.0) throw std::invalid_argument("la_loss: non-positive prior");
      Tensor shift(1, 2);
      shift.values = {cfg.la_tau * std::log(p[0]), cfg.la_tau * std::log(p[1])};
      return softmax_cross_entropy(add_row(logits, logits.tape()->constant(std::move(shift))), labels);
    }
  }
  throw std::logic_error("unreachable");
}

BranchOutput graph_branch(Tape& tape, Var embeddings, std::span<const int> labels, Mlp& head_g,
                          const LossConfig& cfg) {
  Var logits = mlp_forward(tape, head_g, embeddings);
  return {logits, base_loss(logits, labels, cfg)};
}

BranchOutput pair_branch(Tape& tape, Var embeddings, std::span<const PairSample> pairs, Mlp& head_p,
                         const LossConfig& cfg) {
  if (pairs.empty()) throw std::invalid_argument("pair_branch: no pairs");
  const std::size_t in = head_p.layers.front().weight.rows;
  if (in != 2 * embeddings.cols()) throw ShapeError("pair_branch: head input width must be twice the embedding width");
  std::vector<std::size_t> left, right;
  std::vector<int> labels;
  for (const PairSample& p : pairs) {
    left.push_back(p.left_pos);
    right.push_back(p.right_pos);
    labels.push_back(p.label);
  }
  Var joined = concat_cols(gather_rows(embeddings, std::move(left)), gather_rows(embeddings, std::move(right)));
  Var logits = mlp_forward(tape, head_p, joined);
  return {logits, base_loss(logits, labels, cfg)};
}

Var mil_score(Tape& tape, Var left_bag, Var right_bag, Mlp& head_s, std::size_t k) {
  const Var bags[] = {left_bag, right_bag};
  Var scores = mlp_forward(tape, head_s, concat_rows(bags));
  if (k > scores.rows()) throw std::out_of_range("mil_score: k exceeds 2q");
  return topk_mean(scores, k);
}

Var mil_scores(Var instance_scores, std::span<const std::size_t> bag_offsets, std::span<const BagPair> pairs,
               std::size_t k) {
  if (pairs.empty()) throw std::invalid_argument("mil_scores: no bag pairs");
  std::vector<Var> per_pair;
  per_pair.reserve(pairs.size());
  for (const BagPair& p : pairs) {
    std::vector<std::size_t> rows;
    for (std::size_t b : {p.left, p.right}) {
      for (std::size_t r = bag_offsets[b]; r < bag_offsets[b + 1]; ++r) rows.push_back(r);
    }
    if (k > rows.size()) throw std::out_of_range("mil_scores: k exceeds 2q");
    per_pair.push_back(topk_mean(gather_rows(instance_scores, std::move(rows)), k));
  }
  return concat_rows(per_pair);
}

Var mil_loss(Var pair_scores, std::span<const BagPair> pairs) {
  std::vector<int> labels;
  labels.reserve(pairs.size());
  for (const BagPair& p : pairs) labels.push_back(p.label);
  return bce_with_logits(pair_scores, labels);
}

Var magnitude_reg(Tape& tape, std::span<const std::pair<Var, Var>> minority_majority, std::size_t k,
                  double margin) {
  if (minority_majority.empty()) {
    std::clog << "warning: magnitude_reg has no (minority, majority) bag pairs; contributing 0\n";
    return tape.constant(Tensor::scalar(0.0));
  }
  std::vector<Var> hinges;
  hinges.reserve(minority_majority.size());
  for (const auto& [minority, majority] : minority_majority) {
    Var gap = sub(row_l2_topk_mean(majority, k), row_l2_topk_mean(minority, k));
    hinges.push_back(relu(add_scalar(gap, margin)));
  }
  return mean_all(concat_rows(hinges));
}

SubgraphBranchOutput subgraph_branch(Tape& tape, std::span<const SubgraphBag> bags, std::span<const BagPair> pairs,
                                     ModelParams& params, const ModelConfig& model, const LossConfig& cfg) {
  if (bags.empty() || pairs.empty()) throw std::invalid_argument("subgraph_branch: no bags");
  std::vector<const Graph*> subgraphs;
  std::vector<std::size_t> offsets{0};
  for (const SubgraphBag& b : bags) {
    for (const Graph& g : b.subgraphs) subgraphs.push_back(&g);
    offsets.push_back(subgraphs.size());
  }
  EncoderParams& enc = model.share_encoders ? params.encoder_graph : params.encoder_subgraph;
  Var emb = encode_batch(tape, subgraphs, model.encoder, enc);
  Var scores = mlp_forward(tape, params.head_s, emb);
  Var pair_scores = mil_scores(scores, offsets, pairs, cfg.k);
  Var mil = mil_loss(pair_scores, pairs);

  auto bag_rows = [&](std::size_t b) {
    std::vector<std::size_t> rows;
    for (std::size_t r = offsets[b]; r < offsets[b + 1]; ++r) rows.push_back(r);
    return gather_rows(emb, std::move(rows));
  };
  std::vector<std::pair<Var, Var>> min_maj;
  for (const BagPair& p : pairs) {
    const int ll = bags[p.left].label, rl = bags[p.right].label;
    if (ll == kMinority && rl == kMajority) min_maj.emplace_back(bag_rows(p.left), bag_rows(p.right));
    if (ll == kMajority && rl == kMinority) min_maj.emplace_back(bag_rows(p.right), bag_rows(p.left));
  }
  std::size_t k_reg = cfg.k;
  for (const SubgraphBag& b : bags) k_reg = std::min(k_reg, b.subgraphs.size());
  Var reg = magnitude_reg(tape, min_maj, k_reg, cfg.margin);
  return {mil, reg, add(mil, scale(reg, cfg.eta))};
}

Var total_loss(Var graph_loss, Var pair_loss, Var subgraph_loss, const LossConfig& cfg) {
  Var total;
  auto accumulate = [&total](Var term, double weight) {
    if (!term.valid()) return;
    Var w = scale(term, weight);
    total = total.valid() ? add(total, w) : w;
  };
  accumulate(graph_loss, cfg.graph_weight);
  accumulate(pair_loss, cfg.lambda);
  accumulate(subgraph_loss, cfg.beta);
  if (!total.valid()) throw std::invalid_argument("total_loss: no active branch");
  return total;
}

BatchData prepare_batch(const GraphDataset& ds, std::span<const Member> members, const ModelConfig& model,
                        const LossConfig& cfg, std::uint64_t seed) {
  BatchData batch;
  batch.members.assign(members.begin(), members.end());
  for (const Member& m : members) batch.graphs.push_back(&ds.at(m.graph_id));
  if (cfg.lambda > 0.0) batch.pairs = make_pairs(members, members.size(), derive_seed(seed, {1}));
  if (cfg.beta > 0.0) {
    batch.bags.reserve(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      batch.bags.push_back(sample_subgraph_bag(*batch.graphs[i], model.q, model.node_drop, model.edge_drop,
                                               derive_seed(seed, {2, i})));
    }
    batch.bag_pairs = make_bag_pairs(batch.bags, members.size(), derive_seed(seed, {3}));
  }
  return batch;
}

LossBreakdown mosgnn_loss(Tape& tape, const BatchData& batch, ModelParams& params, const ModelConfig& model,
                          const LossConfig& cfg) {
  validate(cfg);
  LossBreakdown out;
  if (cfg.graph_weight > 0.0 || cfg.lambda > 0.0) {
    Var h = encode_batch(tape, batch.graphs, model.encoder, params.encoder_graph);
    if (cfg.graph_weight > 0.0) {
      std::vector<int> labels;
      for (const Member& m : batch.members) labels.push_back(m.label);
      out.graph = graph_branch(tape, h, labels, params.head_g, cfg).loss;
    }
    if (cfg.lambda > 0.0) out.pair = pair_branch(tape, h, batch.pairs, params.head_p, cfg).loss;
  }
  if (cfg.beta > 0.0) {
    auto sub = subgraph_branch(tape, batch.bags, batch.bag_pairs, params, model, cfg);
    out.subgraph = sub.loss;
    out.mil = sub.mil;
    out.reg = sub.reg;
  }
  out.total = total_loss(out.graph, out.pair, out.subgraph, cfg);
  return out;
}

std::uint64_t inference_bag_seed(std::int64_t graph_id) {
  return derive_seed(std::uint64_t(graph_id), {0x696e666572ULL});
}

namespace {

double softmax_minority(std::span<const double> logits) {
  const double mx = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - mx), e1 = std::exp(logits[1] - mx);
  return e1 / (e0 + e1);
}

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

std::vector<Prediction> predict_batch(std::span<const Graph* const> graphs, const ModelParams& params,
                                      const ModelConfig& model, const LossConfig& cfg, double threshold) {
  validate(cfg);
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("predict: threshold outside [0, 1]");
  std::vector<Prediction> out(graphs.size());
  if (graphs.empty()) return out;
  ModelParams local = params;  // parameter leaves need mutable tensors; the copy keeps `params` read-only
  Tape tape;
  const double wg = cfg.graph_weight, wp = cfg.lambda, ws = cfg.beta;
  if (wg > 0.0 || wp > 0.0) {
    Var h = encode_batch(tape, graphs, model.encoder, local.encoder_graph);
    if (wg > 0.0) {
      const Tensor& logits = mlp_forward(tape, local.head_g, h).value();
      for (std::size_t i = 0; i < graphs.size(); ++i) out[i].p_graph = softmax_minority(logits.row(i));
    }
    if (wp > 0.0) {
      const Tensor& logits = mlp_forward(tape, local.head_p, concat_cols(h, h)).value();
      for (std::size_t i = 0; i < graphs.size(); ++i) out[i].p_pair = softmax_minority(logits.row(i));
    }
  }
  if (ws > 0.0) {
    std::vector<SubgraphBag> bags;
    std::vector<const Graph*> subgraphs;
    std::vector<std::size_t> offsets{0};
    bags.reserve(graphs.size());
    for (const Graph* g : graphs) {
      bags.push_back(
          sample_subgraph_bag_invariant(*g, model.q, model.node_drop, model.edge_drop, inference_bag_seed(g->graph_id)));
      for (const Graph& s : bags.back().subgraphs) subgraphs.push_back(&s);
      offsets.push_back(subgraphs.size());
    }
    EncoderParams& enc = model.share_encoders ? local.encoder_graph : local.encoder_subgraph;
    Var emb = encode_batch(tape, subgraphs, model.encoder, enc);
    const Tensor& scores = mlp_forward(tape, local.head_s, emb).value();
    const std::size_t k = std::min(cfg.k, model.q);
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      std::span<const double> own(scores.values.data() + offsets[i], offsets[i + 1] - offsets[i]);
      double total = 0.0;
      for (std::size_t j : topk_indices(own, k)) total += own[j];
      out[i].p_subgraph = sigmoid(total / double(k));
    }
  }
  for (Prediction& p : out) {
    p.score = (wg * p.p_graph + wp * p.p_pair + ws * p.p_subgraph) / (wg + wp + ws);
    p.label = p.score >= threshold ? kMinority : kMajority;
  }
  return out;
}

Prediction predict(const Graph& g, const ModelParams& params, const ModelConfig& model, const LossConfig& cfg,
                   double threshold) {
  const Graph* one[] = {&g};
  return predict_batch(one, params, model, cfg, threshold).front();
}

}  // namespace mosgnn

#include "mosgnn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "mosgnn/errors.hpp"
#include "mosgnn/rng.hpp"

namespace mosgnn {

std::string to_string(OptimizerChoice c) {
  switch (c) {
    case OptimizerChoice::auto_select:
      return "auto";
    case OptimizerChoice::adam:
      return "adam";
    case OptimizerChoice::sgd_warmup:
      return "sgd";
  }
  return "?";
}

OptimizerChoice optimizer_from_string(const std::string& s) {
  if (s == "auto") return OptimizerChoice::auto_select;
  if (s == "adam") return OptimizerChoice::adam;
  if (s == "sgd" || s == "sgd_warmup") return OptimizerChoice::sgd_warmup;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (cfg.batch_size != 0 && cfg.batch_size < 4) throw std::invalid_argument("train config: batch_size must be >= 4");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train config: learning_rate must be > 0");
  if (cfg.folds < 2) throw std::invalid_argument("train config: folds must be >= 2");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) {
    throw std::invalid_argument("train config: val_fraction must be in (0, 1)");
  }
  if (cfg.sgd_warmup_epochs < 1) throw std::invalid_argument("train config: warmup epochs must be >= 1");
  if (cfg.parallel_folds < 1) throw std::invalid_argument("train config: parallel_folds must be >= 1");
  if (cfg.fixed_threshold && !(*cfg.fixed_threshold >= 0.0 && *cfg.fixed_threshold <= 1.0)) {
    throw std::invalid_argument("train config: threshold must be in [0, 1]");
  }
}

std::size_t resolve_batch_size(const TrainConfig& cfg, std::size_t dataset_size) {
  if (cfg.batch_size != 0) return cfg.batch_size;
  return dataset_size < 1000 ? 64 : 256;
}

OptimizerKind resolve_optimizer(const TrainConfig& cfg, BaseLoss loss) {
  switch (cfg.optimizer) {
    case OptimizerChoice::adam:
      return OptimizerKind::adam;
    case OptimizerChoice::sgd_warmup:
      return OptimizerKind::sgd_warmup;
    case OptimizerChoice::auto_select:
      break;
  }
  return loss == BaseLoss::logit_adjusted ? OptimizerKind::sgd_warmup : OptimizerKind::adam;
}

OptimizerState make_optimizer(const TrainConfig& cfg, BaseLoss loss) {
  if (resolve_optimizer(cfg, loss) == OptimizerKind::sgd_warmup) {
    return make_sgd_warmup(cfg.sgd_base_lr, cfg.sgd_warmup_epochs, cfg.sgd_momentum);
  }
  return make_adam(cfg.learning_rate);
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  using nlohmann::json;
  const auto& m = cfg.model;
  const auto& l = cfg.loss;
  const auto& t = cfg.train;
  json j;
  j["model"] = {{"backbone", to_string(m.encoder.backbone)},
                {"n_layers", m.encoder.n_layers},
                {"hidden_dim", m.encoder.hidden_dim},
                {"readout", to_string(m.encoder.readout)},
                {"gin_epsilon", m.encoder.gin_epsilon},
                {"head_hidden", m.head_hidden},
                {"share_encoders", m.share_encoders},
                {"q", m.q},
                {"node_drop", m.node_drop},
                {"edge_drop", m.edge_drop}};
  j["loss"] = {{"base_loss", to_string(l.base_loss)},
               {"graph_weight", l.graph_weight},
               {"lambda", l.lambda},
               {"beta", l.beta},
               {"k", l.k},
               {"margin", l.margin},
               {"eta", l.eta},
               {"focal_gamma", l.focal_gamma},
               {"focal_alpha", l.focal_alpha},
               {"la_tau", l.la_tau},
               {"class_priors", l.class_priors}};
  j["train"] = {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"optimizer", to_string(t.optimizer)},
                {"sgd_base_lr", t.sgd_base_lr},
                {"sgd_warmup_epochs", t.sgd_warmup_epochs},
                {"sgd_momentum", t.sgd_momentum},
                {"seed", t.seed},
                {"folds", t.folds},
                {"val_fraction", t.val_fraction},
                {"class_stats_from_data", t.class_stats_from_data},
                {"record_wall_time", t.record_wall_time},
                {"parallel_folds", t.parallel_folds},
                {"threshold", t.fixed_threshold ? json(*t.fixed_threshold) : json(nullptr)}};
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    const auto& m = j.at("model");
    cfg.model.encoder.backbone = backbone_from_string(m.at("backbone").get<std::string>());
    cfg.model.encoder.n_layers = m.at("n_layers").get<std::size_t>();
    cfg.model.encoder.hidden_dim = m.at("hidden_dim").get<std::size_t>();
    cfg.model.encoder.readout = readout_from_string(m.at("readout").get<std::string>());
    cfg.model.encoder.gin_epsilon = m.at("gin_epsilon").get<double>();
    cfg.model.head_hidden = m.at("head_hidden").get<std::size_t>();
    cfg.model.share_encoders = m.at("share_encoders").get<bool>();
    cfg.model.q = m.at("q").get<std::size_t>();
    cfg.model.node_drop = m.at("node_drop").get<double>();
    cfg.model.edge_drop = m.at("edge_drop").get<double>();
    const auto& l = j.at("loss");
    cfg.loss.base_loss = base_loss_from_string(l.at("base_loss").get<std::string>());
    cfg.loss.graph_weight = l.at("graph_weight").get<double>();
    cfg.loss.lambda = l.at("lambda").get<double>();
    cfg.loss.beta = l.at("beta").get<double>();
    cfg.loss.k = l.at("k").get<std::size_t>();
    cfg.loss.margin = l.at("margin").get<double>();
    cfg.loss.eta = l.at("eta").get<double>();
    cfg.loss.focal_gamma = l.at("focal_gamma").get<double>();
    cfg.loss.focal_alpha = l.at("focal_alpha").get<std::array<double, 2>>();
    cfg.loss.la_tau = l.at("la_tau").get<double>();
    cfg.loss.class_priors = l.at("class_priors").get<std::array<double, 2>>();
    const auto& t = j.at("train");
    cfg.train.epochs = t.at("epochs").get<int>();
    cfg.train.batch_size = t.at("batch_size").get<std::size_t>();
    cfg.train.learning_rate = t.at("learning_rate").get<double>();
    cfg.train.optimizer = optimizer_from_string(t.at("optimizer").get<std::string>());
    cfg.train.sgd_base_lr = t.at("sgd_base_lr").get<double>();
    cfg.train.sgd_warmup_epochs = t.at("sgd_warmup_epochs").get<int>();
    cfg.train.sgd_momentum = t.at("sgd_momentum").get<double>();
    cfg.train.seed = t.at("seed").get<std::uint64_t>();
    cfg.train.folds = t.at("folds").get<std::size_t>();
    cfg.train.val_fraction = t.at("val_fraction").get<double>();
    cfg.train.class_stats_from_data = t.at("class_stats_from_data").get<bool>();
    cfg.train.record_wall_time = t.at("record_wall_time").get<bool>();
    cfg.train.parallel_folds = t.at("parallel_folds").get<std::size_t>();
    if (!t.at("threshold").is_null()) cfg.train.fixed_threshold = t.at("threshold").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("experiment config: ") + e.what());
  }
  return cfg;
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
  // execution settings that cannot change any metric are left out
  nlohmann::json j = to_json(cfg);
  j["train"].erase("parallel_folds");
  j["train"].erase("record_wall_time");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::array<double, 7> threshold_grid() {
  std::array<double, 7> grid{};
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = double(3 + i) / 10.0;
  return grid;
}

Confusion confusion(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("metrics: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == kMinority, truth = labels[i] == kMinority;
    if (pred && truth) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double precision_minority(std::span<const int> predictions, std::span<const int> labels) {
  const Confusion c = confusion(predictions, labels);
  return c.tp + c.fp == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fp);
}

double recall_minority(std::span<const int> predictions, std::span<const int> labels) {
  const Confusion c = confusion(predictions, labels);
  return c.tp + c.fn == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fn);
}

double f1_minority(std::span<const int> predictions, std::span<const int> labels) {
  const double p = precision_minority(predictions, labels);
  const double r = recall_minority(predictions, labels);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double select_threshold(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("select_threshold: length mismatch");
  const bool has_min = std::count(labels.begin(), labels.end(), kMinority) > 0;
  const bool has_maj = std::count(labels.begin(), labels.end(), kMajority) > 0;
  if (!has_min || !has_maj) throw std::invalid_argument("select_threshold: validation set needs both classes");
  double best_t = 0.0, best_f1 = -1.0;
  std::vector<int> preds(scores.size());
  for (double t : threshold_grid()) {
    for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] >= t ? kMinority : kMajority;
    const double f1 = f1_minority(preds, labels);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return best_t;
}

LossConfig resolve_loss(const ExperimentConfig& cfg, std::size_t train_majority, std::size_t train_minority) {
  LossConfig loss = cfg.loss;
  if (cfg.train.class_stats_from_data) {
    loss.focal_alpha = inverse_frequency_alpha(train_majority, train_minority);
    loss.class_priors = empirical_priors(train_majority, train_minority);
  }
  return loss;
}

std::vector<Prediction> predict_ids(const GraphDataset& ds, std::span<const std::int64_t> ids,
                                    const ModelParams& params, const ModelConfig& model, const LossConfig& loss,
                                    double threshold) {
  constexpr std::size_t kChunk = 64;
  std::vector<Prediction> out;
  out.reserve(ids.size());
  for (std::size_t start = 0; start < ids.size(); start += kChunk) {
    std::vector<const Graph*> chunk;
    for (std::size_t i = start; i < std::min(ids.size(), start + kChunk); ++i) chunk.push_back(&ds.at(ids[i]));
    auto preds = predict_batch(chunk, params, model, loss, threshold);
    out.insert(out.end(), preds.begin(), preds.end());
  }
  return out;
}

RunMetrics evaluate(const GraphDataset& ds, std::span<const std::int64_t> ids, std::span<const Prediction> preds,
                    double threshold) {
  if (ids.size() != preds.size()) throw std::invalid_argument("evaluate: length mismatch");
  std::vector<int> labels, predicted;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    labels.push_back(ds.at(ids[i]).label);
    predicted.push_back(preds[i].label);
  }
  RunMetrics m;
  m.dataset = ds.name;
  m.threshold = threshold;
  m.precision = precision_minority(predicted, labels);
  m.recall = recall_minority(predicted, labels);
  m.f1 = f1_minority(predicted, labels);
  return m;
}

namespace {

void check_isolation(const FoldSplit& split) {
  std::vector<std::int64_t> test = split.test_ids;
  std::sort(test.begin(), test.end());
  for (const auto* ids : {&split.train_ids, &split.val_ids}) {
    for (std::int64_t id : *ids) {
      if (std::binary_search(test.begin(), test.end(), id)) {
        throw LeakageError("test graph " + std::to_string(id) + " appears in the training or validation ids");
      }
    }
  }
}

/// Zips the majority and minority halves of an oversampled stream into
/// class-balanced batches. A tail batch with fewer than two graphs per class
/// is merged into its predecessor.
std::vector<std::vector<Member>> balanced_batches(std::span<const Member> stream, std::size_t batch_size) {
  std::vector<Member> maj, min;
  for (const Member& m : stream) (m.label == kMinority ? min : maj).push_back(m);
  const std::size_t half = batch_size / 2;
  std::vector<std::vector<Member>> batches;
  for (std::size_t start = 0; start < maj.size(); start += half) {
    const std::size_t end = std::min(maj.size(), start + half);
    std::vector<Member> batch;
    for (std::size_t i = start; i < end; ++i) {
      batch.push_back(maj[i]);
      if (i < min.size()) batch.push_back(min[i]);
    }
    if (end - start < 2 && !batches.empty()) {
      batches.back().insert(batches.back().end(), batch.begin(), batch.end());
    } else {
      batches.push_back(std::move(batch));
    }
  }
  return batches;
}

}  // namespace

std::uint64_t fold_seed(std::uint64_t master, int fold) {
  return derive_seed(master, {0x666f6c64ULL, std::uint64_t(fold)});
}

FoldResult train_one_fold(const GraphDataset& ds, const FoldSplit& split, const ExperimentConfig& cfg,
                          int fold_index) {
  validate(cfg.train);
  validate(cfg.loss);
  check_isolation(split);
  const auto started = std::chrono::steady_clock::now();

  std::vector<Member> pool;
  std::size_t n_maj = 0, n_min = 0;
  for (std::int64_t id : split.train_ids) {
    const int label = ds.at(id).label;
    pool.push_back({id, label});
    (label == kMinority ? n_min : n_maj)++;
  }
  std::vector<std::int64_t> train_sorted = split.train_ids;
  std::sort(train_sorted.begin(), train_sorted.end());

  FoldResult result;
  result.resolved = cfg;
  result.resolved.loss = resolve_loss(cfg, n_maj, n_min);
  result.resolved.train.batch_size = resolve_batch_size(cfg.train, ds.size());
  result.resolved.train.optimizer = resolve_optimizer(cfg.train, cfg.loss.base_loss) == OptimizerKind::sgd_warmup
                                        ? OptimizerChoice::sgd_warmup
                                        : OptimizerChoice::adam;
  const LossConfig& loss = result.resolved.loss;
  const ModelConfig& model = cfg.model;
  const std::size_t batch_size = result.resolved.train.batch_size;

  const std::uint64_t seed = fold_seed(cfg.train.seed, fold_index);
  result.params = init_model(model, ds.feature_dim(), derive_seed(seed, {0x696e6974ULL}));
  OptimizerState opt = make_optimizer(cfg.train, loss.base_loss);
  const std::vector<Tensor*> tensors = result.params.tensors();

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    begin_epoch(opt, epoch);
    const auto stream = oversample_epoch(pool, derive_seed(seed, {0x65706f6368ULL, std::uint64_t(epoch)}));
    const auto batches = balanced_batches(stream, batch_size);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      for (const Member& m : batches[b]) {
        if (!std::binary_search(train_sorted.begin(), train_sorted.end(), m.graph_id)) {
          throw LeakageError("batch graph " + std::to_string(m.graph_id) + " is not a training graph");
        }
      }
      const BatchData batch = prepare_batch(
          ds, batches[b], model, loss, derive_seed(seed, {0x6261746368ULL, std::uint64_t(epoch), b}));
      result.params.zero_grad();
      Tape tape;
      const LossBreakdown out = mosgnn_loss(tape, batch, result.params, model, loss);
      tape.backward(out.total);
      result.step_losses.push_back(out.total.item());
      optimizer_step(opt, tensors);
    }
  }

  double threshold;
  if (cfg.train.fixed_threshold) {
    threshold = *cfg.train.fixed_threshold;
  } else {
    const auto val = predict_ids(ds, split.val_ids, result.params, model, loss, 0.5);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < val.size(); ++i) {
      scores.push_back(val[i].score);
      labels.push_back(ds.at(split.val_ids[i]).label);
    }
    threshold = select_threshold(scores, labels);
  }
  result.test_predictions = predict_ids(ds, split.test_ids, result.params, model, loss, threshold);
  result.metrics = evaluate(ds, split.test_ids, result.test_predictions, threshold);
  result.metrics.config = "MOSGNN";
  result.metrics.fingerprint = config_fingerprint(cfg);
  result.metrics.fold = fold_index;
  if (cfg.train.record_wall_time) {
    result.metrics.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  return result;
}

CvResult aggregate(std::vector<RunMetrics> folds) {
  CvResult r;
  r.folds = std::move(folds);
  if (r.folds.empty()) return r;
  const double n = double(r.folds.size());
  for (const RunMetrics& m : r.folds) {
    r.mean_f1 += m.f1;
    r.mean_precision += m.precision;
    r.mean_recall += m.recall;
  }
  r.mean_f1 /= n;
  r.mean_precision /= n;
  r.mean_recall /= n;
  // pairwise form: exactly 0 when every fold agrees
  double var = 0.0;
  for (std::size_t i = 0; i < r.folds.size(); ++i) {
    for (std::size_t j = i + 1; j < r.folds.size(); ++j) {
      const double d = r.folds[i].f1 - r.folds[j].f1;
      var += d * d;
    }
  }
  r.std_f1 = std::sqrt(var) / n;
  return r;
}

std::vector<FoldSplit> make_splits(const GraphDataset& ds, const TrainConfig& cfg) {
  validate(cfg);
  return stratified_kfold(ds, cfg.folds, cfg.val_fraction, derive_seed(cfg.seed, {0x73706c6974ULL}));
}

CvResult run_cv(const GraphDataset& ds, std::span<const FoldSplit> splits, const ExperimentConfig& cfg,
                const std::string& label, std::vector<FoldResult>* fold_results) {
  validate(cfg.train);
  if (splits.size() < 2) throw std::invalid_argument("run_cv: need at least two folds");
  std::vector<std::optional<FoldResult>> results(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());
  auto work = [&](std::size_t f) {
    try {
      results[f] = train_one_fold(ds, splits[f], cfg, int(f));
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(cfg.train.parallel_folds, splits.size());
  if (workers <= 1) {
    for (std::size_t f = 0; f < splits.size(); ++f) work(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t f = next++; f < splits.size(); f = next++) work(f);
      });
    }
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<RunMetrics> metrics;
  for (auto& r : results) {
    r->metrics.config = label;
    metrics.push_back(r->metrics);
    if (fold_results) fold_results->push_back(std::move(*r));
  }
  return aggregate(std::move(metrics));
}

CvResult run_cv(const GraphDataset& ds, const ExperimentConfig& cfg) {
  const auto splits = make_splits(ds, cfg.train);
  return run_cv(ds, splits, cfg);
}

std::vector<AblationVariant> ablation_variants() {
  return {{"Lg", true, false, false},   {"Lp", false, true, false},  {"Ls", false, false, true},
          {"Lg+Lp", true, true, false}, {"Lg+Ls", true, false, true}, {"Lp+Ls", false, true, true},
          {"MOSGNN", true, true, true}};
}

ExperimentConfig apply_variant(const ExperimentConfig& cfg, const AblationVariant& v) {
  ExperimentConfig out = cfg;
  if (!v.graph) out.loss.graph_weight = 0.0;
  if (!v.pair) out.loss.lambda = 0.0;
  if (!v.subgraph) out.loss.beta = 0.0;
  return out;
}

std::vector<ExperimentRow> run_ablation(const GraphDataset& ds, const ExperimentConfig& cfg) {
  const auto splits = make_splits(ds, cfg.train);
  std::vector<ExperimentRow> rows;
  for (const AblationVariant& v : ablation_variants()) {
    rows.push_back({v.name, run_cv(ds, splits, apply_variant(cfg, v), v.name)});
  }
  return rows;
}

std::vector<double> default_fractions() { return {0.01, 0.05, 0.10, 0.25, 0.50, 1.0}; }

std::size_t subsample_count(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("subsample: fraction must be in (0, 1]");
  if (n == 0) throw std::invalid_argument("subsample: no minority graphs to subsample");
  // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
  const auto count = std::size_t(std::floor(fraction * double(n) + 1e-9));
  return std::max<std::size_t>(1, count);
}

FoldSplit subsample_minority(const GraphDataset& ds, const FoldSplit& split, double fraction, std::uint64_t seed) {
  std::vector<std::int64_t> majority, minority;
  for (std::int64_t id : split.train_ids) (ds.at(id).label == kMinority ? minority : majority).push_back(id);
  const std::size_t keep = subsample_count(minority.size(), fraction);
  if (keep == minority.size()) return split;
  Rng rng(seed);
  rng.shuffle(minority);
  minority.resize(keep);
  FoldSplit out = split;
  out.train_ids = majority;
  out.train_ids.insert(out.train_ids.end(), minority.begin(), minority.end());
  std::sort(out.train_ids.begin(), out.train_ids.end());
  return out;
}

std::vector<ExperimentRow> run_sample_efficiency(const GraphDataset& ds, const ExperimentConfig& cfg,
                                                 std::span<const double> fractions) {
  if (fractions.empty()) throw std::invalid_argument("sample efficiency: no fractions");
  const auto splits = make_splits(ds, cfg.train);
  std::vector<ExperimentRow> rows;
  for (double fraction : fractions) {
    std::vector<FoldSplit> sub;
    for (std::size_t f = 0; f < splits.size(); ++f) {
      sub.push_back(subsample_minority(ds, splits[f], fraction,
                                       derive_seed(cfg.train.seed, {0x73756273ULL, std::uint64_t(f)})));
    }
    char x[32];
    std::snprintf(x, sizeof(x), "%g", fraction);
    rows.push_back({x, run_cv(ds, sub, cfg, std::string("fraction=") + x)});
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_metrics_csv(std::span<const RunMetrics> rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "dataset,config,fingerprint,fold,threshold,precision,recall,f1,seconds\n";
  for (const RunMetrics& m : rows) {
    out << m.dataset << ',' << m.config << ',' << m.fingerprint << ',' << m.fold << ',' << fmt(m.threshold) << ','
        << fmt(m.precision) << ',' << fmt(m.recall) << ',' << fmt(m.f1) << ',' << fmt(m.seconds) << '\n';
  }
}

void write_metrics_json(std::span<const RunMetrics> rows, const std::filesystem::path& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const RunMetrics& m : rows) {
    arr.push_back({{"dataset", m.dataset},
                   {"config", m.config},
                   {"fingerprint", m.fingerprint},
                   {"fold", m.fold},
                   {"threshold", m.threshold},
                   {"precision", m.precision},
                   {"recall", m.recall},
                   {"f1", m.f1},
                   {"seconds", m.seconds}});
  }
  auto out = open_out(path);
  out << nlohmann::json{{"rows", arr}}.dump(2) << '\n';
}

void write_plot_csv(std::span<const ExperimentRow> rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "x,mean,std\n";
  for (const ExperimentRow& r : rows) out << r.x << ',' << fmt(r.result.mean_f1) << ',' << fmt(r.result.std_f1) << '\n';
}

}  // namespace mosgnn

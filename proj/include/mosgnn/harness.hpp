#pragma once

// Training loop, evaluation metrics, threshold selection and the
// cross-validation, ablation and sample-efficiency experiments.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mosgnn/dataset_io.hpp"
#include "mosgnn/objectives.hpp"
#include "mosgnn/optim.hpp"

namespace mosgnn {

/// auto_select picks sgd_warmup for the logit-adjusted loss and adam otherwise.
enum class OptimizerChoice { auto_select, adam, sgd_warmup };

std::string to_string(OptimizerChoice c);
OptimizerChoice optimizer_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 200;
  /// 0 resolves to 64 for datasets under 1000 graphs and 256 otherwise.
  std::size_t batch_size = 0;
  double learning_rate = 1e-3;
  OptimizerChoice optimizer = OptimizerChoice::auto_select;
  double sgd_base_lr = 0.1;
  int sgd_warmup_epochs = 5;
  double sgd_momentum = 0.9;
  std::uint64_t seed = 0;
  std::size_t folds = 3;
  /// Stratified share of each fold's training portion held out for
  /// threshold selection.
  double val_fraction = 0.1;
  /// Fill focal alpha and logit-adjustment priors from the training split.
  bool class_stats_from_data = true;
  /// When false the seconds column is written as 0 so reruns are byte-identical.
  bool record_wall_time = true;
  std::size_t parallel_folds = 1;
  /// Skips grid selection when set.
  std::optional<double> fixed_threshold;
};

void validate(const TrainConfig& cfg);

struct ExperimentConfig {
  ModelConfig model;
  LossConfig loss;
  TrainConfig train;
};

std::size_t resolve_batch_size(const TrainConfig& cfg, std::size_t dataset_size);
OptimizerKind resolve_optimizer(const TrainConfig& cfg, BaseLoss loss);
OptimizerState make_optimizer(const TrainConfig& cfg, BaseLoss loss);

/// Every resolved hyperparameter as JSON. The fingerprint hashes its dump
/// without parallel_folds and record_wall_time, which never change metrics.
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
std::string config_fingerprint(const ExperimentConfig& cfg);

/// The threshold grid 0.3, 0.4, ..., 0.9.
std::array<double, 7> threshold_grid();

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

Confusion confusion(std::span<const int> predictions, std::span<const int> labels);
double precision_minority(std::span<const int> predictions, std::span<const int> labels);
double recall_minority(std::span<const int> predictions, std::span<const int> labels);
/// 2PR/(P+R) for class 1, 0 when P+R = 0.
double f1_minority(std::span<const int> predictions, std::span<const int> labels);

/// Grid threshold with the best validation minority F1, ties to the lowest.
double select_threshold(std::span<const double> scores, std::span<const int> labels);

struct RunMetrics {
  std::string dataset;
  std::string config;  // experiment row label, e.g. an ablation variant
  std::string fingerprint;
  int fold = 0;
  double threshold = 0.5;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double seconds = 0.0;
};

struct FoldResult {
  ModelParams params;
  RunMetrics metrics;
  ExperimentConfig resolved;  // class statistics and batch size filled in
  std::vector<double> step_losses;
  std::vector<Prediction> test_predictions;
};

/// Loss config with focal alpha and priors taken from the training split
/// when cfg.train.class_stats_from_data is set.
LossConfig resolve_loss(const ExperimentConfig& cfg, std::size_t train_majority, std::size_t train_minority);

/// Predictions for `ids` in chunks of 64 taken in the given order, so the
/// same ids always see the same floating-point evaluation.
std::vector<Prediction> predict_ids(const GraphDataset& ds, std::span<const std::int64_t> ids,
                                    const ModelParams& params, const ModelConfig& model, const LossConfig& loss,
                                    double threshold);

/// Metrics of predictions (already thresholded) against the graphs' labels.
RunMetrics evaluate(const GraphDataset& ds, std::span<const std::int64_t> ids, std::span<const Prediction> preds,
                    double threshold);

/// Trains one fold and reports test metrics. Throws LeakageError if any test
/// id reaches training or validation.
FoldResult train_one_fold(const GraphDataset& ds, const FoldSplit& split, const ExperimentConfig& cfg,
                          int fold_index = 0);

struct CvResult {
  std::vector<RunMetrics> folds;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;  // population
  double mean_precision = 0.0;
  double mean_recall = 0.0;
};

CvResult aggregate(std::vector<RunMetrics> folds);

std::vector<FoldSplit> make_splits(const GraphDataset& ds, const TrainConfig& cfg);
std::uint64_t fold_seed(std::uint64_t master, int fold);

/// Trains every split (in parallel when cfg.train.parallel_folds > 1); the
/// result does not depend on the degree of parallelism.
CvResult run_cv(const GraphDataset& ds, std::span<const FoldSplit> splits, const ExperimentConfig& cfg,
                const std::string& label = "MOSGNN", std::vector<FoldResult>* fold_results = nullptr);
CvResult run_cv(const GraphDataset& ds, const ExperimentConfig& cfg);

struct AblationVariant {
  std::string name;
  bool graph = false, pair = false, subgraph = false;
};

/// The seven branch combinations, ending with the full model.
std::vector<AblationVariant> ablation_variants();
ExperimentConfig apply_variant(const ExperimentConfig& cfg, const AblationVariant& v);

struct ExperimentRow {
  std::string x;
  CvResult result;
};

std::vector<ExperimentRow> run_ablation(const GraphDataset& ds, const ExperimentConfig& cfg);

std::vector<double> default_fractions();
/// floor(fraction * n) with a minimum of 1.
std::size_t subsample_count(std::size_t n, double fraction);
/// Keeps a seeded subset of the split's minority training ids; fraction 1
/// returns the split unchanged.
FoldSplit subsample_minority(const GraphDataset& ds, const FoldSplit& split, double fraction, std::uint64_t seed);
std::vector<ExperimentRow> run_sample_efficiency(const GraphDataset& ds, const ExperimentConfig& cfg,
                                                 std::span<const double> fractions);

/// One row per fold/configuration: dataset, config, fingerprint, fold,
/// threshold, precision, recall, f1, seconds.
void write_metrics_csv(std::span<const RunMetrics> rows, const std::filesystem::path& path);
void write_metrics_json(std::span<const RunMetrics> rows, const std::filesystem::path& path);
/// x, mean, std of minority F1 per experiment row.
void write_plot_csv(std::span<const ExperimentRow> rows, const std::filesystem::path& path);

}  // namespace mosgnn

#include "mosgnn/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mosgnn/checkpoint.hpp"
#include "mosgnn/dataset_io.hpp"
#include "mosgnn/errors.hpp"
#include "mosgnn/harness.hpp"

namespace mosgnn {

namespace fs = std::filesystem;

namespace {

/// Thrown for bad flag values and inconsistent configurations.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::set<std::string> kFlagOptions = {"share-encoders", "no-timing"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Options {
  std::string dataset_dir;
  std::string dataset_name;
  std::string output_dir = "runs";
  std::string config_file;
  // string-typed enums, converted after parsing
  std::string backbone = "gcn", readout = "mean", loss = "ce", optimizer = "auto";
  bool share_encoders = false;
  bool no_timing = false;
  double threshold = -1.0;
  std::vector<double> fractions = default_fractions();
  // eval / inspect
  std::string checkpoint;
  std::string split;
  // convert
  std::string format = "synthetic";
  std::string input;
  std::size_t syn_majority = 100, syn_minority = 10, syn_min_nodes = 12, syn_max_nodes = 20;
  std::string syn_motif = "triangle_rich";
  double syn_noise = 0.02;
  ExperimentConfig cfg;
};

void add_experiment_options(CLI::App* cmd, Options& o) {
  auto& m = o.cfg.model;
  auto& l = o.cfg.loss;
  auto& t = o.cfg.train;
  cmd->add_option("--dataset-dir", o.dataset_dir, "Dataset root (falls back to $MOSGNN_DATA_DIR)");
  cmd->add_option("--dataset-name", o.dataset_name, "TUDataset name, e.g. BZR")->required();
  cmd->add_option("--output-dir", o.output_dir, "Directory for metrics, manifest and checkpoints");
  cmd->add_option("--config", o.config_file, "key=value config file; flags win");
  cmd->add_option("--seed", t.seed, "Master seed");
  cmd->add_option("--backbone", o.backbone, "gcn or gin");
  cmd->add_option("--layers", m.encoder.n_layers, "Encoder layers");
  cmd->add_option("--hidden", m.encoder.hidden_dim, "Encoder width");
  cmd->add_option("--readout", o.readout, "mean or sum");
  cmd->add_option("--gin-eps", m.encoder.gin_epsilon, "GIN epsilon");
  cmd->add_option("--head-hidden", m.head_hidden, "Prediction head hidden width");
  cmd->add_flag("--share-encoders", o.share_encoders, "Use the graph encoder for subgraphs too");
  cmd->add_option("--q", m.q, "Subgraphs per bag");
  cmd->add_option("--node-drop", m.node_drop, "Node drop rate");
  cmd->add_option("--edge-drop", m.edge_drop, "Edge drop rate");
  cmd->add_option("--loss", o.loss, "ce, focal or la");
  cmd->add_option("--graph-weight", l.graph_weight, "Weight of the graph-level loss");
  cmd->add_option("--lambda", l.lambda, "Weight of the pair loss");
  cmd->add_option("--beta", l.beta, "Weight of the subgraph loss");
  cmd->add_option("--k", l.k, "Top-k size");
  cmd->add_option("--margin", l.margin, "Magnitude margin");
  cmd->add_option("--eta", l.eta, "Magnitude regularizer weight");
  cmd->add_option("--focal-gamma", l.focal_gamma, "Focal gamma");
  cmd->add_option("--la-tau", l.la_tau, "Logit adjustment tau");
  cmd->add_option("--epochs", t.epochs, "Training epochs");
  cmd->add_option("--batch-size", t.batch_size, "Batch size (0 = automatic)");
  cmd->add_option("--lr", t.learning_rate, "Adam learning rate");
  cmd->add_option("--optimizer", o.optimizer, "auto, adam or sgd");
  cmd->add_option("--sgd-lr", t.sgd_base_lr, "SGD base learning rate");
  cmd->add_option("--warmup-epochs", t.sgd_warmup_epochs, "SGD warmup epochs");
  cmd->add_option("--folds", t.folds, "Cross-validation folds");
  cmd->add_option("--val-fraction", t.val_fraction, "Validation share of each training fold");
  cmd->add_option("--parallel-folds", t.parallel_folds, "Folds trained concurrently");
  cmd->add_option("--threshold", o.threshold, "Fixed decision threshold (skips grid selection)");
  cmd->add_flag("--no-timing", o.no_timing, "Write 0 in the seconds column");
}

void finalize(Options& o, bool threshold_given) {
  try {
    o.cfg.model.encoder.backbone = backbone_from_string(o.backbone);
    o.cfg.model.encoder.readout = readout_from_string(o.readout);
    o.cfg.loss.base_loss = base_loss_from_string(o.loss);
    o.cfg.train.optimizer = optimizer_from_string(o.optimizer);
    o.cfg.model.share_encoders = o.share_encoders;
    o.cfg.train.record_wall_time = !o.no_timing;
    if (threshold_given) o.cfg.train.fixed_threshold = o.threshold;
    validate(o.cfg.train);
    validate(o.cfg.loss);
    if (o.cfg.model.q < 1) throw std::invalid_argument("q must be >= 1");
    if (o.cfg.loss.k > 2 * o.cfg.model.q) throw std::invalid_argument("k must be <= 2q");
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

fs::path resolve_dataset_dir(const Options& o) {
  std::string root = o.dataset_dir;
  if (root.empty()) {
    if (const char* env = std::getenv("MOSGNN_DATA_DIR")) root = env;
  }
  if (root.empty()) throw UsageError("no dataset directory: pass --dataset-dir or set MOSGNN_DATA_DIR");
  const fs::path nested = fs::path(root) / o.dataset_name;
  if (fs::exists(nested / (o.dataset_name + "_A.txt"))) return nested;
  return root;
}

GraphDataset load_dataset(const Options& o) { return parse_tudataset(resolve_dataset_dir(o), o.dataset_name); }

nlohmann::json manifest(const std::string& command, const std::vector<std::string>& args, const Options& o,
                        const GraphDataset& ds) {
  return {{"command", command},
          {"args", args},
          {"config", to_json(o.cfg)},
          {"config_fingerprint", config_fingerprint(o.cfg)},
          {"resolved",
           {{"optimizer", resolve_optimizer(o.cfg.train, o.cfg.loss.base_loss) == OptimizerKind::sgd_warmup ? "sgd" : "adam"},
            {"batch_size", resolve_batch_size(o.cfg.train, ds.size())}}},
          {"seed", o.cfg.train.seed},
          {"dataset",
           {{"name", ds.name},
            {"graphs", ds.size()},
            {"minority", ds.minority_count},
            {"fingerprint", hex64(dataset_fingerprint(ds))}}}};
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void print_summary(std::ostream& out, const std::string& label, const CvResult& r) {
  for (const RunMetrics& m : r.folds) {
    out << label << " fold " << m.fold << ": f1=" << m.f1 << " precision=" << m.precision << " recall=" << m.recall
        << " threshold=" << m.threshold << '\n';
  }
  out << label << " minority F1 " << r.mean_f1 << " +- " << r.std_f1 << '\n';
}

int cmd_train(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const GraphDataset ds = load_dataset(o);
  const fs::path dir = o.output_dir;
  const auto splits = make_splits(ds, o.cfg.train);
  std::vector<FoldResult> folds;
  const CvResult r = run_cv(ds, splits, o.cfg, "MOSGNN", &folds);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::string stem = "fold" + std::to_string(f);
    write_split_json(splits[f], dir / (stem + ".split.json"));
    const nlohmann::json meta = {{"config", to_json(folds[f].resolved)},
                                 {"fingerprint", folds[f].metrics.fingerprint},
                                 {"threshold", folds[f].metrics.threshold},
                                 {"feature_dim", ds.feature_dim()},
                                 {"dataset", ds.name},
                                 {"dataset_fingerprint", hex64(dataset_fingerprint(ds))},
                                 {"fold", f}};
    write_checkpoint(dir / (stem + ".ckpt"), folds[f].params, meta);
  }
  write_metrics_csv(r.folds, dir / "metrics.csv");
  write_metrics_json(r.folds, dir / "metrics.json");
  write_json(manifest("train", args, o, ds), dir / "manifest.json");
  print_summary(out, ds.name, r);
  return kExitOk;
}

int cmd_eval(const Options& o, const std::vector<std::string>& args, std::ostream& out, bool threshold_given) {
  if (o.checkpoint.empty() || o.split.empty()) throw UsageError("eval needs --checkpoint and --split");
  const GraphDataset ds = load_dataset(o);
  const Checkpoint ck = read_checkpoint(o.checkpoint);
  ExperimentConfig stored;
  std::size_t feature_dim = 0;
  double threshold = 0.0;
  std::string fingerprint;
  try {
    stored = experiment_config_from_json(ck.metadata.at("config"));
    feature_dim = ck.metadata.at("feature_dim").get<std::size_t>();
    threshold = ck.metadata.at("threshold").get<double>();
    fingerprint = ck.metadata.at("fingerprint").get<std::string>();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint metadata: ") + e.what());
  }
  if (feature_dim != ds.feature_dim()) {
    throw CheckpointError("checkpoint expects feature width " + std::to_string(feature_dim) + ", dataset has " +
                          std::to_string(ds.feature_dim()));
  }
  ModelParams params = init_model(stored.model, ds.feature_dim(), 0);
  load_parameters(ck, params);
  if (threshold_given) threshold = o.threshold;
  const FoldSplit split = read_split_json(o.split);
  const auto preds = predict_ids(ds, split.test_ids, params, stored.model, stored.loss, threshold);
  RunMetrics m = evaluate(ds, split.test_ids, preds, threshold);
  m.config = "eval";
  m.fingerprint = fingerprint;
  if (ck.metadata.contains("fold")) m.fold = ck.metadata["fold"].get<int>();
  const fs::path dir = o.output_dir;
  const std::vector<RunMetrics> rows{m};
  write_metrics_csv(rows, dir / "metrics.csv");
  write_metrics_json(rows, dir / "metrics.json");
  auto man = manifest("eval", args, o, ds);
  man["config"] = to_json(stored);
  man["checkpoint"] = o.checkpoint;
  man["threshold"] = threshold;
  write_json(man, dir / "manifest.json");
  out << ds.name << " eval: f1=" << m.f1 << " precision=" << m.precision << " recall=" << m.recall
      << " threshold=" << m.threshold << '\n';
  return kExitOk;
}

int cmd_experiment(const std::string& which, const Options& o, const std::vector<std::string>& args,
                   std::ostream& out) {
  const GraphDataset ds = load_dataset(o);
  const auto rows =
      which == "ablation" ? run_ablation(ds, o.cfg) : run_sample_efficiency(ds, o.cfg, o.fractions);
  std::vector<RunMetrics> all;
  for (const auto& row : rows) {
    all.insert(all.end(), row.result.folds.begin(), row.result.folds.end());
    out << ds.name << ' ' << row.x << ": minority F1 " << row.result.mean_f1 << " +- " << row.result.std_f1 << '\n';
  }
  const fs::path dir = o.output_dir;
  write_metrics_csv(all, dir / "metrics.csv");
  write_metrics_json(all, dir / "metrics.json");
  write_plot_csv(rows, dir / "plot.csv");
  auto man = manifest(which, args, o, ds);
  if (which != "ablation") man["fractions"] = o.fractions;
  write_json(man, dir / "manifest.json");
  return kExitOk;
}

int cmd_convert(const Options& o, std::ostream& out) {
  if (o.dataset_name.empty()) throw UsageError("convert needs --dataset-name");
  const fs::path dir = o.output_dir;
  if (o.format == "gspan") {
    if (o.input.empty()) throw UsageError("convert --format gspan needs --input");
    const std::size_t n = convert_gspan_to_tudataset(o.input, dir, o.dataset_name);
    out << "converted " << n << " graphs into " << dir.string() << '\n';
  } else if (o.format == "synthetic") {
    SyntheticSpec spec;
    spec.n_majority = o.syn_majority;
    spec.n_minority = o.syn_minority;
    spec.min_nodes = o.syn_min_nodes;
    spec.max_nodes = o.syn_max_nodes;
    spec.noise_edge_prob = o.syn_noise;
    spec.seed = o.cfg.train.seed;
    try {
      spec.motif = motif_from_string(o.syn_motif);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    GraphDataset ds = generate_synthetic(spec);
    ds.name = o.dataset_name;
    write_tudataset(ds, dir, o.dataset_name);
    out << "wrote " << ds.size() << " graphs (" << ds.minority_count << " minority) into " << dir.string() << '\n';
  } else {
    throw UsageError("unknown --format '" + o.format + "' (expected gspan or synthetic)");
  }
  return kExitOk;
}

int cmd_inspect(const Options& o, std::ostream& out) {
  if (!o.checkpoint.empty()) {
    const Checkpoint ck = read_checkpoint(o.checkpoint);
    out << ck.metadata.dump(2) << '\n';
    for (const auto& [name, t] : ck.tensors) out << name << ' ' << t.rows << 'x' << t.cols << '\n';
    return kExitOk;
  }
  if (o.dataset_name.empty()) throw UsageError("inspect needs --checkpoint or --dataset-name");
  const GraphDataset ds = load_dataset(o);
  std::size_t nodes = 0, edges = 0;
  for (const Graph& g : ds.graphs) {
    nodes += g.num_nodes();
    edges += g.edges.size();
  }
  out << "dataset " << ds.name << "\n"
      << "graphs " << ds.size() << "\n"
      << "majority " << ds.majority_count << "\n"
      << "minority " << ds.minority_count << "\n"
      << "ratio " << ds.ratio() << "\n"
      << "feature_dim " << ds.feature_dim() << "\n"
      << "mean_nodes " << double(nodes) / double(ds.size()) << "\n"
      << "mean_edges " << double(edges) / double(ds.size()) << "\n"
      << "labels_swapped " << (ds.labels_swapped ? "true" : "false") << "\n"
      << "fingerprint " << hex64(dataset_fingerprint(ds)) << '\n';
  return kExitOk;
}

/// Splices `--key value` tokens from a --config file in right after the
/// command name so that later command-line flags override them.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path || args.empty()) return args;
  std::vector<std::string> tokens;
  for (const auto& [key, value] : read_config_file(*path)) {
    if (kFlagOptions.count(key)) {
      if (value == "true" || value == "1" || value == "yes") tokens.push_back("--" + key);
      continue;
    }
    tokens.push_back("--" + key);
    tokens.push_back(value);
  }
  std::vector<std::string> out{args.front()};
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-scale oversampling GNN for imbalanced graph classification", "mosgnn"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.failure_message(CLI::FailureMessage::help);
  Options o;

  auto* train = app.add_subcommand("train", "Cross-validated training; writes metrics, manifest and checkpoints");
  add_experiment_options(train, o);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split file");
  add_experiment_options(eval, o);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint written by train")->required();
  eval->add_option("--split", o.split, "Split JSON written by train")->required();

  auto* ablation = app.add_subcommand("ablation", "Seven-way branch ablation");
  add_experiment_options(ablation, o);

  auto* efficiency = app.add_subcommand("sample-efficiency", "Subsample minority training graphs");
  add_experiment_options(efficiency, o);
  efficiency->add_option("--fractions", o.fractions, "Comma-separated minority fractions")->delimiter(',');

  auto* convert = app.add_subcommand("convert", "Write a dataset in TUDataset format");
  convert->add_option("--format", o.format, "gspan or synthetic");
  convert->add_option("--input", o.input, "gSpan input file");
  convert->add_option("--output-dir", o.output_dir, "Destination directory");
  convert->add_option("--dataset-name", o.dataset_name, "Name used for the output files")->required();
  convert->add_option("--seed", o.cfg.train.seed, "Generator seed");
  convert->add_option("--syn-majority", o.syn_majority, "Synthetic majority graphs");
  convert->add_option("--syn-minority", o.syn_minority, "Synthetic minority graphs");
  convert->add_option("--syn-min-nodes", o.syn_min_nodes, "Synthetic minimum nodes per graph");
  convert->add_option("--syn-max-nodes", o.syn_max_nodes, "Synthetic maximum nodes per graph");
  convert->add_option("--syn-motif", o.syn_motif, "triangle_rich or five_cycle");
  convert->add_option("--syn-noise", o.syn_noise, "Synthetic noise edge probability");

  auto* inspect = app.add_subcommand("inspect", "Describe a dataset or a checkpoint");
  inspect->add_option("--checkpoint", o.checkpoint, "Checkpoint to describe");
  inspect->add_option("--dataset-dir", o.dataset_dir, "Dataset root (falls back to $MOSGNN_DATA_DIR)");
  inspect->add_option("--dataset-name", o.dataset_name, "Dataset to describe");

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const bool threshold_given = std::find(args.begin(), args.end(), "--threshold") != args.end();
    if (train->parsed()) {
      finalize(o, threshold_given);
      return cmd_train(o, raw_args, out);
    }
    if (eval->parsed()) {
      finalize(o, false);
      return cmd_eval(o, raw_args, out, threshold_given);
    }
    if (ablation->parsed()) {
      finalize(o, threshold_given);
      return cmd_experiment("ablation", o, raw_args, out);
    }
    if (efficiency->parsed()) {
      finalize(o, threshold_given);
      return cmd_experiment("sample-efficiency", o, raw_args, out);
    }
    if (convert->parsed()) return cmd_convert(o, out);
    return cmd_inspect(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace mosgnn

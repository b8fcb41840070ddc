// Acceptance driver: one PASS/FAIL/BLOCKED line per criterion.
//
//   acceptance              criteria 1, 2, 3, 4a, 5, 6, 8, 9
//   acceptance --real-data  criteria 4b and 7 against $MOSGNN_DATA_DIR
//                           (exit 77 when the TU files are absent)

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mosgnn/cli.hpp"
#include "mosgnn/errors.hpp"
#include "mosgnn/harness.hpp"
#include "mosgnn/sampling.hpp"
#include "support.hpp"

using namespace mosgnn;
namespace fs = std::filesystem;

namespace {

constexpr int kSkip = 77;

struct Report {
  int failures = 0;
  void line(const std::string& status, const std::string& id, const std::string& detail) {
    std::printf("%s criterion %s: %s\n", status.c_str(), id.c_str(), detail.c_str());
    std::fflush(stdout);
    if (status == "FAIL") ++failures;
  }
  void verdict(bool ok, const std::string& id, const std::string& detail) { line(ok ? "PASS" : "FAIL", id, detail); }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch_root() { return fs::temp_directory_path() / ("mosgnn_acceptance_" + std::to_string(::getpid())); }

// removes every scratch directory of this process at exit
struct ScratchCleanup {
  ~ScratchCleanup() {
    std::error_code ec;
    fs::remove_all(scratch_root(), ec);
  }
} scratch_cleanup;

fs::path scratch(const std::string& name) {
  const fs::path p = scratch_root() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<Member> pool(std::size_t maj, std::size_t min) {
  std::vector<Member> p;
  for (std::size_t i = 0; i < maj + min; ++i) p.push_back({std::int64_t(i), i < maj ? kMajority : kMinority});
  return p;
}

// ---------------------------------------------------------------------------

void criterion1(Report& rep) {
  const auto t0 = std::chrono::steady_clock::now();
  GradCheckOptions opt;
  opt.tolerance = 1e-4;
  bool ok = true;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, r] : support::primitive_grad_checks(2024, opt)) {
    ok = ok && r.passed && r.max_rel_error <= 1e-4;
    if (r.max_rel_error >= worst) worst = r.max_rel_error, worst_name = name;
  }

  support::MicroBatch mb = support::make_micro_batch(21);
  ModelParams params = init_model(mb.model, mb.ds.feature_dim(), 4);
  // nonzero biases keep ReLU pre-activations away from the kink at 0
  for (auto& [n, t] : params.named())
    if (n.find("bias") != std::string::npos)
      for (double& v : t->values) v = 0.05;
  auto tensors = params.tensors();
  const GradCheckReport full = grad_check(
      [&](Tape& t) { return mosgnn_loss(t, mb.batch, params, mb.model, mb.loss).total; }, tensors, opt);
  std::size_t n_maj = 0, n_min = 0;
  for (const Graph& g : mb.ds.graphs) (g.label == kMinority ? n_min : n_maj) += 1;
  const bool shape_ok = n_maj == 2 && n_min == 2 && mb.model.q == 4 && mb.loss.k == 2;
  const double secs = seconds_since(t0);
  ok = ok && full.passed && full.max_rel_error <= 1e-4 && shape_ok && secs < 60.0;
  rep.verdict(ok, "1",
              fmt("primitives max rel err %.2e (%s); full objective rel err %.2e over %zu entries "
                  "(2 maj / 2 min, q=4, k=2); %.1fs",
                  worst, worst_name.c_str(), full.max_rel_error, full.checked, secs));
}

void criterion2(Report& rep) {
  Rng rng(1000);
  std::size_t topk_bad = 0, l2_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    const std::size_t k = 1 + rng.below(n);
    std::vector<double> x(n);
    for (double& v : x) v = double(rng.below(8)) / 4.0;  // coarse values force ties
    const auto want = support::topk_oracle(x, k);
    double mean = 0;
    for (std::size_t i : want) mean += x[i];
    mean /= double(k);
    Tape t;
    Tensor col(n, 1);
    col.values = x;
    const bool same = topk_indices(x, k) == want && std::abs(topk_mean(t.constant(col), k).item() - mean) <= 1e-12;
    topk_bad += same ? 0 : 1;
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(20), d = 1 + rng.below(5);
    const std::size_t k = 1 + rng.below(n);
    Tensor x = support::random_tensor(n, d, rng);
    std::vector<double> norms(n);
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0;
      for (double v : x.row(r)) s += v * v;
      norms[r] = std::sqrt(s);
    }
    auto want = support::topk_oracle(norms, k);
    double mean = 0;
    for (std::size_t i : want) mean += norms[i];
    mean /= double(k);
    // the selected index set is read off the gradient support
    Tape t;
    Var v = t.parameter(x);
    Var out = row_l2_topk_mean(v, k);
    t.backward(out);
    std::vector<std::size_t> touched;
    for (std::size_t r = 0; r < n; ++r) {
      bool any = false;
      for (std::size_t c = 0; c < d; ++c) any = any || t.grad(v.id())[r * d + c] != 0.0;
      if (any) touched.push_back(r);
    }
    std::sort(want.begin(), want.end());
    const bool same = touched == want && std::abs(out.item() - mean) <= 1e-12;
    l2_bad += same ? 0 : 1;
  }

  // balancing rule: ceil(n/2) label-0 pairs; the label-1 half splits into
  // floor(half/2) minority-minority and the rest mixed
  std::size_t pair_bad = 0;
  const std::size_t n_pairs = 10000;
  auto batch = pool(40, 12);
  {
    const auto pairs = make_pairs(batch, n_pairs, 99);
    std::size_t y0 = 0, mn = 0, nn = 0;
    for (const PairSample& p : pairs) {
      const int a = batch[p.left_pos].label, b = batch[p.right_pos].label;
      pair_bad += p.label == pair_label(a, b) ? 0 : 1;
      y0 += a + b == 0;
      mn += a != b;
      nn += a + b == 2;
    }
    pair_bad += (pairs.size() == n_pairs && y0 == 5000 && mn == 2500 && nn == 2500) ? 0 : 1;
  }
  {
    std::vector<SubgraphBag> bags;
    for (const Member& m : batch) {
      SubgraphBag b;
      b.source_id = m.graph_id;
      b.label = m.label;
      bags.push_back(std::move(b));
    }
    const auto pairs = make_bag_pairs(bags, n_pairs, 7);
    std::size_t y0 = 0, mn = 0, nn = 0;
    for (const BagPair& p : pairs) {
      const int a = bags[p.left].label, b = bags[p.right].label;
      pair_bad += p.label == pair_label(a, b) ? 0 : 1;
      y0 += a + b == 0;
      mn += a != b;
      nn += a + b == 2;
    }
    pair_bad += (pairs.size() == n_pairs && y0 == 5000 && mn == 2500 && nn == 2500) ? 0 : 1;
  }
  rep.verdict(topk_bad == 0 && l2_bad == 0 && pair_bad == 0, "2",
              fmt("topk_mean mismatches %zu/1000, row_l2_topk_mean mismatches %zu/1000, "
                  "pair + bag-pair composition errors %zu on 10000 pairs each",
                  topk_bad, l2_bad, pair_bad));
}

std::string serialize(const SubgraphBag& bag) {
  std::ostringstream os;
  os.precision(17);
  os << bag.source_id << ' ' << bag.label << ' ' << bag.seed << '\n';
  for (const Graph& g : bag.subgraphs) {
    os << g.num_nodes() << ':';
    for (const Edge& e : g.edges) os << e.u << '-' << e.v << ',';
    for (double v : g.node_features.values) os << v << ',';
    os << '\n';
  }
  return os.str();
}

void criterion3(Report& rep) {
  Rng rng(3);
  std::size_t balance_bad = 0, floor_bad = 0, determinism_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    const std::size_t m = n + rng.below(200);
    const std::uint64_t seed = rng.next();
    const auto s = oversample_epoch(pool(m, n), seed);
    std::size_t maj = 0, min = 0;
    for (const Member& x : s) (x.label == kMinority ? min : maj) += 1;
    balance_bad += (maj == m && min == m) ? 0 : 1;
    determinism_bad += s == oversample_epoch(pool(m, n), seed) ? 0 : 1;
  }
  for (int trial = 0; trial < 200; ++trial) {
    Graph g = support::random_graph(1 + rng.below(20), 0.3, 2, rng);
    const double nd = rng.uniform(0.0, 0.99), ed = rng.uniform(0.0, 0.99);
    const std::uint64_t seed = rng.next();
    const std::size_t floor = std::min<std::size_t>(2, g.num_nodes());
    const SubgraphBag a = sample_subgraph_bag(g, 10, nd, ed, seed);
    const SubgraphBag b = sample_subgraph_bag_invariant(g, 10, nd, ed, seed);
    for (const SubgraphBag* bag : {&a, &b})
      for (const Graph& s : bag->subgraphs) floor_bad += s.num_nodes() >= floor ? 0 : 1;
    determinism_bad += serialize(a) == serialize(sample_subgraph_bag(g, 10, nd, ed, seed)) ? 0 : 1;
    determinism_bad += serialize(b) == serialize(sample_subgraph_bag_invariant(g, 10, nd, ed, seed)) ? 0 : 1;
  }
  auto batch = pool(9, 4);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto x = make_pairs(batch, 33, seed), y = make_pairs(batch, 33, seed);
    for (std::size_t i = 0; i < x.size(); ++i)
      determinism_bad += (x[i].left_pos == y[i].left_pos && x[i].right_pos == y[i].right_pos) ? 0 : 1;
  }
  rep.verdict(balance_bad == 0 && floor_bad == 0 && determinism_bad == 0, "3",
              fmt("class-balance violations %zu/100 (M,N) settings, node-floor violations %zu, "
                  "nondeterministic sampler outputs %zu",
                  balance_bad, floor_bad, determinism_bad));
}

bool same_structure(const GraphDataset& a, const GraphDataset& b) {
  if (a.size() != b.size() || a.minority_count != b.minority_count) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Graph &x = a.graphs[i], &y = b.graphs[i];
    if (x.num_nodes() != y.num_nodes() || x.label != y.label || degrees(x) != degrees(y)) return false;
  }
  return true;
}

void criterion4_local(Report& rep) {
  bool ok = true;
  std::string detail;
  try {
    const GraphDataset fx = parse_tudataset(MOSGNN_TEST_DATA "/fixture", "fixture");
    const bool fixture_ok = fx.size() == 2 && fx.minority_count == 1 && fx.graphs[0].num_nodes() == 2 &&
                            fx.graphs[1].num_nodes() == 2 && fx.graphs[0].edges.size() == 1 &&
                            fx.graphs[1].edges.size() == 1;
    ok = ok && fixture_ok;
    detail += fmt("fixture %zu graphs / %zu minority", fx.size(), fx.minority_count);

    std::size_t round_trips = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      SyntheticSpec spec;
      spec.seed = seed;
      spec.motif = seed == 1 ? Motif::five_cycle : Motif::triangle_rich;
      const GraphDataset ds = generate_synthetic(spec);
      const fs::path dir = scratch("roundtrip" + std::to_string(seed));
      write_tudataset(ds, dir, "RT");
      const GraphDataset back = parse_tudataset(dir, "RT");
      const bool same = same_structure(ds, back);
      ok = ok && same;
      round_trips += same ? 1 : 0;
    }
    ok = ok && parse_tudataset(MOSGNN_TEST_DATA "/fixture", "fixture").size() == 2;
    detail += fmt("; write-parse round trips preserving nodes, degrees and labels: %zu/3", round_trips);
  } catch (const std::exception& e) {
    ok = false;
    detail += std::string("; exception: ") + e.what();
  }
  rep.verdict(ok, "4a", detail + " (BZR/COX2 counts are criterion 4b, run by acceptance --real-data)");
}

// Synthetic learnability protocol: dataset seed s = training seed s for
// s in {0,1,2}; 100/10 planted triangles, 12-20 nodes, 50 epochs, 3-fold CV,
// defaults otherwise.
struct SeedRuns {
  std::vector<double> full, graph_only, subgraph_only;
  double full_seconds = 0.0;
  std::size_t fold_runs = 0;
};

SeedRuns synthetic_runs(int epochs) {
  SeedRuns out;
  const auto variants = ablation_variants();
  const auto find = [&](const std::string& name) {
    return *std::find_if(variants.begin(), variants.end(), [&](const AblationVariant& v) { return v.name == name; });
  };
  for (std::uint64_t s = 0; s < 3; ++s) {
    SyntheticSpec spec;
    spec.seed = s;
    const GraphDataset ds = generate_synthetic(spec);
    ExperimentConfig cfg;
    cfg.loss.lambda = 1.0;
    cfg.loss.beta = 1.0;
    cfg.train.epochs = epochs;
    cfg.train.seed = s;
    cfg.train.record_wall_time = false;
    const auto splits = make_splits(ds, cfg.train);

    const auto t0 = std::chrono::steady_clock::now();
    out.full.push_back(run_cv(ds, splits, cfg).mean_f1);
    out.full_seconds += seconds_since(t0);
    out.graph_only.push_back(run_cv(ds, splits, apply_variant(cfg, find("Lg")), "Lg").mean_f1);
    out.subgraph_only.push_back(run_cv(ds, splits, apply_variant(cfg, find("Ls")), "Ls").mean_f1);
    out.fold_runs += 3 * splits.size();
    std::printf("  seed %llu: full %.4f  Lg-only %.4f  Ls-only %.4f\n", static_cast<unsigned long long>(s),
                out.full.back(), out.graph_only.back(), out.subgraph_only.back());
    std::fflush(stdout);
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / double(v.size());
}

void criteria5and6(Report& rep, std::size_t& fold_runs) {
  const int epochs = 50;
  const SeedRuns r = synthetic_runs(epochs);
  fold_runs += r.fold_runs;
  const double full = mean(r.full), lg = mean(r.graph_only), ls = mean(r.subgraph_only);
  rep.verdict(full >= 0.85 && r.full_seconds < 600.0, "5",
              fmt("synthetic 100/10, lambda=beta=1, %d epochs: mean minority F1 over 3 seeds %.4f (>= 0.85); "
                  "training time %.0fs (< 600s)",
                  epochs, full, r.full_seconds));
  int ls_lower = 0;
  for (std::size_t i = 0; i < 3; ++i) ls_lower += r.subgraph_only[i] < r.full[i] ? 1 : 0;
  rep.verdict(full >= lg - 0.02 && ls < full, "6",
              fmt("full %.4f >= Lg-only %.4f - 0.02; Ls-only %.4f < full (Ls-only lower in %d of 3 seeds)", full, lg,
                  ls, ls_lower));
}

void criterion8(Report& rep, std::size_t& fold_runs) {
  SyntheticSpec spec;
  spec.n_majority = 30;
  spec.n_minority = 6;
  spec.min_nodes = 6;
  spec.max_nodes = 9;
  const GraphDataset ds = generate_synthetic(spec);
  ExperimentConfig ce;
  ce.model.encoder.hidden_dim = 16;
  ce.model.head_hidden = 16;
  ce.model.q = 4;
  ce.loss.k = 2;
  ce.train.epochs = 1;
  ce.train.batch_size = 8;
  ce.train.record_wall_time = false;
  // uniform alpha and priors, same optimizer: the plug-ins must then reduce to CE
  ce.train.class_stats_from_data = false;
  ce.train.optimizer = OptimizerChoice::adam;
  const auto splits = make_splits(ds, ce.train);
  const FoldResult ref = train_one_fold(ds, splits[0], ce);
  ++fold_runs;

  double worst_focal = 0, worst_la = 0;
  bool ok = ref.step_losses.size() >= 5;
  ExperimentConfig focal = ce;
  focal.loss.base_loss = BaseLoss::focal;
  focal.loss.focal_gamma = 0.0;
  ExperimentConfig la = ce;
  la.loss.base_loss = BaseLoss::logit_adjusted;
  const FoldResult rf = train_one_fold(ds, splits[0], focal);
  const FoldResult rl = train_one_fold(ds, splits[0], la);
  fold_runs += 2;
  for (std::size_t s = 0; ok && s < 5; ++s) {
    worst_focal = std::max(worst_focal, std::abs(rf.step_losses[s] - ref.step_losses[s]));
    worst_la = std::max(worst_la, std::abs(rl.step_losses[s] - ref.step_losses[s]));
  }
  ok = ok && worst_focal <= 1e-9 && worst_la <= 1e-9;

  // default LA training resolves to SGD with warmup
  ExperimentConfig la_default;
  la_default.loss.base_loss = BaseLoss::logit_adjusted;
  la_default.model = ce.model;
  la_default.loss.k = 2;
  la_default.train.epochs = 1;
  la_default.train.batch_size = 8;
  la_default.train.record_wall_time = false;
  const FoldResult rd = train_one_fold(ds, splits[0], la_default);
  ++fold_runs;
  OptimizerState opt = make_optimizer(rd.resolved.train, la_default.loss.base_loss);
  begin_epoch(opt, 0);
  const double lr0 = opt.learning_rate;
  begin_epoch(opt, 4);
  const double lr4 = opt.learning_rate;
  const bool sgd = rd.resolved.train.optimizer == OptimizerChoice::sgd_warmup && opt.kind == OptimizerKind::sgd_warmup;
  ok = ok && sgd && lr0 == 0.02 && lr4 == 0.1;
  rep.verdict(ok, "8",
              fmt("max |focal(gamma=0) - CE| over 5 steps %.1e, max |LA(uniform) - CE| %.1e (<= 1e-9); "
                  "LA resolves to %s with lr(epoch 0)=%g, lr(epoch 4)=%g",
                  worst_focal, worst_la, sgd ? "SGD+warmup" : "a different optimizer", lr0, lr4));
}

void criterion9(Report& rep, std::size_t fold_runs) {
  bool ok = true;
  std::string detail;
  try {
    SyntheticSpec spec;
    spec.seed = 7;
    const GraphDataset ds = generate_synthetic(spec);
    const fs::path root = scratch("determinism");
    write_tudataset(ds, root / "SYN", "SYN");
    std::vector<std::string> csv, json;
    for (int run = 0; run < 2; ++run) {
      const fs::path out = root / ("run" + std::to_string(run));
      std::ostringstream o, e;
      const int code = run_cli({"train", "--dataset-dir", root.string(), "--dataset-name", "SYN", "--output-dir",
                                out.string(), "--epochs", "3", "--seed", "11", "--no-timing"},
                               o, e);
      if (code != 0) throw std::runtime_error("train exited " + std::to_string(code) + ": " + e.str());
      csv.push_back(slurp(out / "metrics.csv"));
      json.push_back(slurp(out / "metrics.json"));
    }
    const bool identical = csv[0] == csv[1] && json[0] == json[1] && !csv[0].empty();
    ok = ok && identical;
    detail += identical ? "two same-seed CLI train runs wrote byte-identical metrics CSV and JSON"
                        : "same-seed CLI train runs differ";

    // negative control: a test id smuggled into training must be caught
    ExperimentConfig cfg;
    cfg.train.epochs = 1;
    auto splits = make_splits(ds, cfg.train);
    FoldSplit leaky = splits[0];
    leaky.train_ids.push_back(leaky.test_ids.front());
    bool fired = false;
    try {
      train_one_fold(ds, leaky, cfg);
    } catch (const LeakageError&) {
      fired = true;
    }
    ok = ok && fired;
    detail += fmt("; isolation assertion fired 0 times in %zu acceptance fold runs (unit suites would fail on any "
                  "firing), negative control %s",
                  fold_runs + 6, fired ? "caught" : "NOT caught");
  } catch (const LeakageError& e) {
    ok = false;
    detail += std::string("; isolation assertion fired: ") + e.what();
  } catch (const std::exception& e) {
    ok = false;
    detail += std::string("; exception: ") + e.what();
  }
  rep.verdict(ok, "9", detail);
}

// ---------------------------------------------------------------------------

int real_data(Report& rep) {
  const char* env = std::getenv("MOSGNN_DATA_DIR");
  const fs::path root = env ? env : "";
  auto locate = [&](const std::string& name) -> std::optional<fs::path> {
    if (root.empty()) return std::nullopt;
    for (const fs::path& d : {root / name, root})
      if (fs::exists(d / (name + "_A.txt"))) return d;
    return std::nullopt;
  };
  const auto bzr = locate("BZR");
  const auto cox2 = locate("COX2");
  const std::string where = root.empty() ? "MOSGNN_DATA_DIR is unset" : "not found under " + root.string();

  if (!bzr || !cox2) {
    rep.line("BLOCKED", "4b", "BZR/COX2 TUDataset files " + where + "; expected 405/86 and 467/102 graphs/minority");
  } else {
    const GraphDataset b = parse_tudataset(*bzr, "BZR");
    const GraphDataset c = parse_tudataset(*cox2, "COX2");
    rep.verdict(b.size() == 405 && b.minority_count == 86 && c.size() == 467 && c.minority_count == 102, "4b",
                fmt("BZR %zu/%zu, COX2 %zu/%zu graphs/minority (expected 405/86, 467/102)", b.size(),
                    b.minority_count, c.size(), c.minority_count));
  }

  if (!bzr) {
    rep.line("BLOCKED", "7", "BZR " + where + "; needs MOSGNN mean F1 >= 0.45 and >= the Lg baseline in 2 of 3 seeds");
  } else {
    const GraphDataset ds = parse_tudataset(*bzr, "BZR");
    const auto variants = ablation_variants();
    const AblationVariant lg = variants.front();
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> full, base;
    for (std::uint64_t s = 0; s < 3; ++s) {
      ExperimentConfig cfg;
      cfg.train.seed = s;
      cfg.train.record_wall_time = false;
      const auto splits = make_splits(ds, cfg.train);
      const auto t_full = std::chrono::steady_clock::now();
      full.push_back(run_cv(ds, splits, cfg).mean_f1);
      std::printf("  seed %llu: MOSGNN %.4f (%.0fs)\n", static_cast<unsigned long long>(s), full.back(),
                  seconds_since(t_full));
      base.push_back(run_cv(ds, splits, apply_variant(cfg, lg), "Lg").mean_f1);
      std::printf("  seed %llu: Lg baseline %.4f\n", static_cast<unsigned long long>(s), base.back());
    }
    int wins = 0;
    for (std::size_t i = 0; i < 3; ++i) wins += full[i] >= base[i] ? 1 : 0;
    const double secs = seconds_since(t0);
    rep.verdict(mean(full) >= 0.45 && wins >= 2, "7",
                fmt("BZR MOSGNN mean F1 %.4f (>= 0.45), beats Lg baseline in %d of 3 seeds; %.0fs total", mean(full),
                    wins, secs));
  }
  return (!bzr || !cox2) && rep.failures == 0 ? kSkip : (rep.failures ? 1 : 0);
}

}  // namespace

int main(int argc, char** argv) {
  Report rep;
  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (std::find(args.begin(), args.end(), "--real-data") != args.end()) return real_data(rep);

    std::size_t fold_runs = 0;
    criterion1(rep);
    criterion2(rep);
    criterion3(rep);
    criterion4_local(rep);
    criterion8(rep, fold_runs);
    criteria5and6(rep, fold_runs);
    criterion9(rep, fold_runs);
  } catch (const std::exception& e) {
    rep.line("FAIL", "harness", std::string("uncaught exception: ") + e.what());
  }
  std::printf("%s: %d failing criteria\n", rep.failures ? "FAILED" : "OK", rep.failures);
  return rep.failures ? 1 : 0;
}

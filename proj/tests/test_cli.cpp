#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mosgnn/checkpoint.hpp"
#include "mosgnn/cli.hpp"
#include "mosgnn/errors.hpp"
#include "mosgnn/harness.hpp"
#include "mosgnn/objectives.hpp"

using namespace mosgnn;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_root() { return fs::temp_directory_path() / ("mosgnn_test_" + std::to_string(::getpid())); }

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

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> v;
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

/// 30 majority / 6 minority synthetic graphs written once through `convert`.
const fs::path& data_root() {
  static const fs::path root = [] {
    const fs::path r = scratch("data");
    const Result res = cli({"convert", "--format", "synthetic", "--dataset-name", "SYN", "--output-dir",
                            (r / "SYN").string(), "--syn-majority", "30", "--syn-minority", "6", "--syn-min-nodes",
                            "6", "--syn-max-nodes", "9", "--seed", "3"});
    REQUIRE(res.code == 0);
    return r;
  }();
  return root;
}

std::vector<std::string> tiny(const std::string& command, const fs::path& out_dir,
                              std::vector<std::string> extra = {}) {
  std::vector<std::string> a{command,        "--dataset-dir", data_root().string(), "--dataset-name", "SYN",
                             "--output-dir", out_dir.string(), "--epochs",          "1",              "--hidden",
                             "8",            "--layers",        "2",                  "--head-hidden",  "8",
                             "--q",          "3",               "--k",                "2",              "--batch-size",
                             "8",            "--no-timing"};
  a.insert(a.end(), extra.begin(), extra.end());
  return a;
}

ModelConfig small_model() {
  ModelConfig m;
  m.encoder.hidden_dim = 5;
  m.encoder.n_layers = 2;
  m.head_hidden = 4;
  return m;
}

void flip_byte(const fs::path& p, std::size_t offset) {
  std::string bytes = slurp(p);
  bytes[offset] = static_cast<char>(bytes[offset] ^ 0x5a);
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("write then read restores every tensor bit for bit and the metadata") {
    const fs::path dir = scratch("ck_roundtrip");
    ModelParams trained = init_model(small_model(), 4, 11);
    const nlohmann::json meta = {{"fold", 2}, {"threshold", 0.4}, {"note", "x"}};
    write_checkpoint(dir / "m.ckpt", trained, meta);

    const Checkpoint ck = read_checkpoint(dir / "m.ckpt");
    CHECK(ck.metadata == meta);
    ModelParams fresh = init_model(small_model(), 4, 99);
    load_parameters(ck, fresh);
    const auto a = trained.named();
    const auto b = fresh.named();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].first == b[i].first);
      CHECK(std::memcmp(a[i].second->values.data(), b[i].second->values.data(),
                        a[i].second->values.size() * sizeof(double)) == 0);
    }
  }

  TEST_CASE("byte layout: magic, version, metadata, shape table, little-endian f64 values") {
    const fs::path dir = scratch("ck_layout");
    ModelParams params = init_model(small_model(), 4, 5);
    const nlohmann::json meta = {{"k", 1}};
    write_checkpoint(dir / "m.ckpt", params, meta);
    const std::string bytes = slurp(dir / "m.ckpt");
    auto u32 = [&](std::size_t off) {
      std::uint32_t v = 0;
      for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
      return v;
    };
    CHECK(bytes.substr(0, 8) == "MOSGNNCK");
    CHECK(u32(8) == 1u);
    const std::string dumped = meta.dump();
    CHECK(u32(12) == dumped.size());
    CHECK(bytes.substr(16, dumped.size()) == dumped);
    std::size_t off = 16 + dumped.size();
    const auto named = params.named();
    CHECK(u32(off) == named.size());
    off += 4;
    std::size_t n_values = 0;
    for (const auto& [name, t] : named) {
      CHECK(bytes.substr(off + 4, u32(off)) == name);
      off += 4 + name.size() + 16;
      n_values += t->values.size();
    }
    // first value of the first tensor, decoded by hand
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
    double first;
    std::memcpy(&first, &bits, 8);
    CHECK(first == named.front().second->values.front());
    // values, then the 8-byte checksum trailer
    CHECK(bytes.size() == off + 8 * n_values + 8);
  }

  TEST_CASE("corrupt, truncated, missing and mismatched checkpoints raise CheckpointError") {
    const fs::path dir = scratch("ck_errors");
    ModelParams params = init_model(small_model(), 4, 5);
    write_checkpoint(dir / "good.ckpt", params, {{"a", 1}});
    const std::string good = slurp(dir / "good.ckpt");

    fs::copy_file(dir / "good.ckpt", dir / "magic.ckpt");
    flip_byte(dir / "magic.ckpt", 0);
    CHECK_THROWS_AS(read_checkpoint(dir / "magic.ckpt"), CheckpointError);

    fs::copy_file(dir / "good.ckpt", dir / "version.ckpt");
    flip_byte(dir / "version.ckpt", 8);
    CHECK_THROWS_AS(read_checkpoint(dir / "version.ckpt"), CheckpointError);

    fs::copy_file(dir / "good.ckpt", dir / "payload.ckpt");
    flip_byte(dir / "payload.ckpt", good.size() - 20);
    CHECK_THROWS_AS(read_checkpoint(dir / "payload.ckpt"), CheckpointError);

    std::ofstream(dir / "short.ckpt", std::ios::binary) << good.substr(0, good.size() / 2);
    CHECK_THROWS_AS(read_checkpoint(dir / "short.ckpt"), CheckpointError);

    CHECK_THROWS_AS(read_checkpoint(dir / "absent.ckpt"), CheckpointError);

    const Checkpoint ck = read_checkpoint(dir / "good.ckpt");
    ModelConfig wider = small_model();
    wider.encoder.hidden_dim = 6;
    ModelParams other = init_model(wider, 4, 5);
    CHECK_THROWS_AS(load_parameters(ck, other), CheckpointError);
    ModelParams other_input = init_model(small_model(), 3, 5);
    CHECK_THROWS_AS(load_parameters(ck, other_input), CheckpointError);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("unknown flag and missing command exit 2 with usage text") {
    Result r = cli({"train", "--dataset-name", "SYN", "--bogus-flag", "1"});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("--bogus-flag") != std::string::npos);
    CHECK(r.err.find("Usage") != std::string::npos);

    r = cli({});
    CHECK(r.code == kExitUsage);
    r = cli({"frobnicate"});
    CHECK(r.code == kExitUsage);
  }

  TEST_CASE("bad values are usage errors") {
    const fs::path dir = scratch("bad_values");
    CHECK(cli(tiny("train", dir, {"--loss", "hinge"})).code == kExitUsage);
    CHECK(cli(tiny("train", dir, {"--epochs", "0"})).code == kExitUsage);
    CHECK(cli(tiny("train", dir, {"--k", "7"})).code == kExitUsage);  // k > 2q
    CHECK(cli(tiny("train", dir, {"--backbone", "gat"})).code == kExitUsage);
    CHECK(cli({"convert", "--dataset-name", "X", "--format", "xml", "--output-dir", dir.string()}).code ==
          kExitUsage);
  }

  TEST_CASE("missing dataset is a runtime error") {
    const fs::path dir = scratch("missing");
    const Result r = cli({"train", "--dataset-dir", dir.string(), "--dataset-name", "NOPE", "--output-dir",
                          (dir / "out").string()});
    CHECK(r.code == kExitError);
    CHECK_FALSE(r.err.empty());
  }

  TEST_CASE("the installed binary returns the same exit codes") {
    const std::string bin = MOSGNN_CLI_PATH;
    int status = std::system((bin + " --help > /dev/null 2>&1").c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
    status = std::system((bin + " train --dataset-name X --no-such-flag > /dev/null 2>&1").c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 2);
  }

  TEST_CASE("train writes one metrics row, split and checkpoint per fold plus a replayable manifest") {
    const fs::path dir = scratch("train");
    const Result r = cli(tiny("train", dir, {"--lambda", "1", "--beta", "1", "--folds", "3", "--seed", "4"}));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto csv = lines(dir / "metrics.csv");
    REQUIRE(csv.size() == 4);
    CHECK(csv[0] == "dataset,config,fingerprint,fold,threshold,precision,recall,f1,seconds");
    for (int f = 0; f < 3; ++f) {
      CHECK(fs::exists(dir / ("fold" + std::to_string(f) + ".ckpt")));
      CHECK(fs::exists(dir / ("fold" + std::to_string(f) + ".split.json")));
      CHECK(csv[std::size_t(f) + 1].rfind("SYN,MOSGNN,", 0) == 0);
      CHECK(csv[std::size_t(f) + 1].substr(csv[std::size_t(f) + 1].rfind(',') + 1) == "0");  // --no-timing
    }
    CHECK(read_json(dir / "metrics.json").at("rows").size() == 3);

    const auto man = read_json(dir / "manifest.json");
    CHECK(man.at("command") == "train");
    CHECK(man.at("seed") == 4);
    CHECK(man.at("dataset").at("graphs") == 36);
    CHECK(man.at("dataset").at("minority") == 6);
    CHECK(man.at("dataset").at("fingerprint").get<std::string>().size() == 16);
    CHECK(man.at("config").at("loss").at("lambda") == 1.0);
    CHECK(man.at("config").at("model").at("hidden_dim") == 8);
    CHECK(man.at("config").at("train").at("folds") == 3);
    CHECK(man.at("resolved").at("optimizer") == "adam");
    CHECK(man.at("resolved").at("batch_size") == 8);
    // the manifest config reproduces the fingerprint written in every row
    const auto cfg = experiment_config_from_json(man.at("config"));
    CHECK(config_fingerprint(cfg) == man.at("config_fingerprint").get<std::string>());
    for (const auto& row : read_json(dir / "metrics.json").at("rows")) {
      CHECK(row.at("fingerprint") == man.at("config_fingerprint"));
    }
  }

  TEST_CASE("--loss la switches the optimizer to SGD with warmup") {
    const fs::path dir = scratch("la");
    const Result r = cli(tiny("train", dir, {"--loss", "la", "--folds", "2"}));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto man = read_json(dir / "manifest.json");
    CHECK(man.at("config").at("train").at("optimizer") == "auto");
    CHECK(man.at("resolved").at("optimizer") == "sgd");
    const Checkpoint ck = read_checkpoint(dir / "fold0.ckpt");
    CHECK(ck.metadata.at("config").at("train").at("optimizer") == "sgd");

    const fs::path adam_dir = scratch("la_adam");
    REQUIRE(cli(tiny("train", adam_dir, {"--loss", "la", "--folds", "2", "--optimizer", "adam"})).code == 0);
    CHECK(read_json(adam_dir / "manifest.json").at("resolved").at("optimizer") == "adam");
  }

  TEST_CASE("eval on a training fold reproduces its test metrics exactly") {
    const fs::path dir = scratch("eval");
    REQUIRE(cli(tiny("train", dir, {"--seed", "2", "--epochs", "2"})).code == 0);
    const auto trained = read_json(dir / "metrics.json").at("rows");
    for (int f = 0; f < 3; ++f) {
      const std::string stem = "fold" + std::to_string(f);
      const fs::path out = dir / ("eval" + std::to_string(f));
      const Result r = cli({"eval", "--dataset-dir", data_root().string(), "--dataset-name", "SYN", "--checkpoint",
                            (dir / (stem + ".ckpt")).string(), "--split", (dir / (stem + ".split.json")).string(),
                            "--output-dir", out.string()});
      REQUIRE_MESSAGE(r.code == 0, r.err);
      const auto row = read_json(out / "metrics.json").at("rows").at(0);
      CHECK(row.at("f1").get<double>() == trained[std::size_t(f)].at("f1").get<double>());
      CHECK(row.at("precision").get<double>() == trained[std::size_t(f)].at("precision").get<double>());
      CHECK(row.at("recall").get<double>() == trained[std::size_t(f)].at("recall").get<double>());
      CHECK(row.at("threshold").get<double>() == trained[std::size_t(f)].at("threshold").get<double>());
      CHECK(row.at("fold") == f);
    }
  }

  TEST_CASE("--threshold 0.5 overrides grid selection in train and eval") {
    const fs::path dir = scratch("threshold");
    REQUIRE(cli(tiny("train", dir, {"--threshold", "0.5"})).code == 0);
    for (const auto& row : read_json(dir / "metrics.json").at("rows")) CHECK(row.at("threshold") == 0.5);

    const fs::path grid_dir = scratch("threshold_grid");
    REQUIRE(cli(tiny("train", grid_dir)).code == 0);
    const fs::path out = grid_dir / "eval";
    REQUIRE(cli({"eval", "--dataset-dir", data_root().string(), "--dataset-name", "SYN", "--checkpoint",
                 (grid_dir / "fold1.ckpt").string(), "--split", (grid_dir / "fold1.split.json").string(),
                 "--output-dir", out.string(), "--threshold", "0.5"})
                .code == 0);
    CHECK(read_json(out / "metrics.json").at("rows").at(0).at("threshold") == 0.5);
    CHECK(read_json(out / "manifest.json").at("threshold") == 0.5);
  }

  TEST_CASE("corrupted checkpoint magic gives a clean error and exit 3") {
    const fs::path dir = scratch("corrupt");
    REQUIRE(cli(tiny("train", dir, {"--folds", "2"})).code == 0);
    flip_byte(dir / "fold0.ckpt", 1);
    const Result r = cli({"eval", "--dataset-dir", data_root().string(), "--dataset-name", "SYN", "--checkpoint",
                          (dir / "fold0.ckpt").string(), "--split", (dir / "fold0.split.json").string(),
                          "--output-dir", (dir / "eval").string()});
    CHECK(r.code == kExitCheckpoint);
    CHECK(r.err.find("magic") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "eval" / "metrics.csv"));
    CHECK(cli({"inspect", "--checkpoint", (dir / "fold0.ckpt").string()}).code == kExitCheckpoint);
  }

  TEST_CASE("ablation emits seven rows and a plot CSV") {
    const fs::path dir = scratch("ablation");
    const Result r = cli(tiny("ablation", dir));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto plot = lines(dir / "plot.csv");
    REQUIRE(plot.size() == 8);
    CHECK(plot[0] == "x,mean,std");
    const std::vector<std::string> names{"Lg", "Lp", "Ls", "Lg+Lp", "Lg+Ls", "Lp+Ls", "MOSGNN"};
    for (std::size_t i = 0; i < names.size(); ++i) CHECK(plot[i + 1].rfind(names[i] + ",", 0) == 0);
    CHECK(lines(dir / "metrics.csv").size() == 1 + 7 * 3);
  }

  TEST_CASE("sample-efficiency with default fractions emits six rows") {
    const fs::path dir = scratch("efficiency");
    const Result r = cli(tiny("sample-efficiency", dir));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto plot = lines(dir / "plot.csv");
    REQUIRE(plot.size() == 7);
    CHECK(plot[1].rfind("0.01,", 0) == 0);
    CHECK(plot[6].rfind("1,", 0) == 0);
    CHECK(lines(dir / "metrics.csv").size() == 1 + 6 * 3);
    CHECK(read_json(dir / "manifest.json").at("fractions").size() == 6);

    const fs::path two = scratch("efficiency_two");
    REQUIRE(cli(tiny("sample-efficiency", two, {"--fractions", "0.5,1"})).code == 0);
    CHECK(lines(two / "plot.csv").size() == 3);
  }

  TEST_CASE("same-seed reruns write byte-identical CSVs") {
    const fs::path a = scratch("rerun_a");
    const fs::path b = scratch("rerun_b");
    REQUIRE(cli(tiny("train", a, {"--seed", "8"})).code == 0);
    REQUIRE(cli(tiny("train", b, {"--seed", "8"})).code == 0);
    CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
    CHECK(slurp(a / "metrics.json") == slurp(b / "metrics.json"));
    CHECK(slurp(a / "fold0.ckpt") == slurp(b / "fold0.ckpt"));

    const fs::path pa = scratch("rerun_plot_a");
    const fs::path pb = scratch("rerun_plot_b");
    REQUIRE(cli(tiny("sample-efficiency", pa, {"--fractions", "0.5,1"})).code == 0);
    REQUIRE(cli(tiny("sample-efficiency", pb, {"--fractions", "0.5,1"})).code == 0);
    CHECK(slurp(pa / "plot.csv") == slurp(pb / "plot.csv"));
    CHECK(slurp(pa / "metrics.csv") == slurp(pb / "metrics.csv"));
  }

  TEST_CASE("config file values apply and command-line flags win") {
    const fs::path dir = scratch("config");
    {
      std::ofstream cfg(dir / "run.cfg");
      cfg << "# tiny run\n"
          << "lambda = 0.5\n"
          << "beta=0.25   # inline comment\n"
          << "--seed = 9\n"
          << "folds = 2\n"
          << "no-timing = true\n";
    }
    const fs::path out = dir / "out";
    const Result r = cli(tiny("train", out, {"--config", (dir / "run.cfg").string(), "--lambda", "0.75"}));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto man = read_json(out / "manifest.json");
    CHECK(man.at("config").at("loss").at("lambda") == 0.75);
    CHECK(man.at("config").at("loss").at("beta") == 0.25);
    CHECK(man.at("seed") == 9);
    CHECK(lines(out / "metrics.csv").size() == 3);

    const auto kv = read_config_file(dir / "run.cfg");
    CHECK(kv.size() == 5);
    CHECK(kv.at("seed") == "9");
    CHECK(kv.at("beta") == "0.25");

    std::ofstream(dir / "broken.cfg") << "lambda 0.5\n";
    CHECK(cli(tiny("train", out, {"--config", (dir / "broken.cfg").string()})).code == kExitUsage);
    CHECK(cli(tiny("train", out, {"--config", (dir / "absent.cfg").string()})).code == kExitUsage);
  }

  TEST_CASE("inspect describes datasets and checkpoints") {
    Result r = cli({"inspect", "--dataset-dir", data_root().string(), "--dataset-name", "SYN"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("graphs 36\n") != std::string::npos);
    CHECK(r.out.find("majority 30\n") != std::string::npos);
    CHECK(r.out.find("minority 6\n") != std::string::npos);
    CHECK(r.out.find("ratio 5\n") != std::string::npos);

    const fs::path dir = scratch("inspect");
    REQUIRE(cli(tiny("train", dir, {"--folds", "2"})).code == 0);
    r = cli({"inspect", "--checkpoint", (dir / "fold1.ckpt").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("encoder_graph") != std::string::npos);
    CHECK(r.out.find("\"fold\": 1") != std::string::npos);

    CHECK(cli({"inspect"}).code == kExitUsage);
  }

  TEST_CASE("MOSGNN_DATA_DIR is the dataset directory fallback") {
    const char* saved = std::getenv("MOSGNN_DATA_DIR");
    const std::string restore = saved ? saved : "";
    ::setenv("MOSGNN_DATA_DIR", data_root().string().c_str(), 1);
    Result r = cli({"inspect", "--dataset-name", "SYN"});
    CHECK(r.code == 0);
    CHECK(r.out.find("graphs 36\n") != std::string::npos);

    ::unsetenv("MOSGNN_DATA_DIR");
    r = cli({"inspect", "--dataset-name", "SYN"});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("MOSGNN_DATA_DIR") != std::string::npos);
    if (saved) ::setenv("MOSGNN_DATA_DIR", restore.c_str(), 1);
  }
}

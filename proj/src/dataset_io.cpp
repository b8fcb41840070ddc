#include "mosgnn/dataset_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "mosgnn/errors.hpp"
#include "mosgnn/rng.hpp"

namespace mosgnn {

namespace fs = std::filesystem;

namespace {

std::ifstream open_required(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing mandatory file: " + path.string());
  return in;
}

// Integers on a line separated by commas and/or whitespace.
std::vector<long> parse_ints(const std::string& line, const fs::path& path, std::size_t lineno) {
  std::vector<long> out;
  const char* p = line.c_str();
  while (*p != '\0') {
    while (*p == ',' || *p == ' ' || *p == '\t' || *p == '\r') ++p;
    if (*p == '\0') break;
    char* end = nullptr;
    const long v = std::strtol(p, &end, 10);
    if (end == p) throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected integer");
    out.push_back(v);
    p = end;
  }
  return out;
}

std::vector<long> read_column(const fs::path& path) {
  auto in = open_required(path);
  std::vector<long> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto vals = parse_ints(line, path, lineno);
    if (vals.empty()) continue;
    if (vals.size() != 1) throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected one value");
    out.push_back(vals[0]);
  }
  return out;
}

struct RawGraph {
  std::size_t n = 0;
  std::vector<Edge> edges;
  std::vector<long> node_labels;
  long label = 0;
};

// Shared by the TUDataset parser and the gSpan converter: maps raw labels,
// builds features and the dataset.
GraphDataset assemble(const std::string& name, std::vector<RawGraph> raws, bool have_node_labels) {
  std::map<long, std::size_t> counts;
  for (const auto& r : raws) ++counts[r.label];
  if (counts.size() != 2) {
    throw DataError(name + ": graph labels are not binary (" + std::to_string(counts.size()) + " distinct values)");
  }
  const long lo = counts.begin()->first;
  const long hi = counts.rbegin()->first;

  std::vector<long> node_values;
  if (have_node_labels) {
    std::set<long> distinct;
    for (const auto& r : raws) distinct.insert(r.node_labels.begin(), r.node_labels.end());
    node_values.assign(distinct.begin(), distinct.end());
  }

  std::vector<Graph> graphs;
  graphs.reserve(raws.size());
  for (auto& r : raws) {
    if (r.n == 0) throw DataError(name + ": graph without nodes");
    Tensor feats(r.n, have_node_labels ? node_values.size() : 1);
    if (have_node_labels) {
      for (std::size_t i = 0; i < r.n; ++i) {
        const auto it = std::lower_bound(node_values.begin(), node_values.end(), r.node_labels[i]);
        feats(i, std::size_t(it - node_values.begin())) = 1.0;
      }
    }
    graphs.push_back(make_graph(std::move(feats), std::move(r.edges), r.label == hi ? kMinority : kMajority));
  }
  if (!have_node_labels) {
    const std::size_t md = max_degree(graphs);
    for (Graph& g : graphs) g = degree_onehot_features(g, md);
  }
  GraphDataset ds = make_dataset(name, std::move(graphs), {lo, hi});
  ds.node_label_values = std::move(node_values);
  return ds;
}

void dedupe_edges(std::vector<Edge>& edges) {
  for (Edge& e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

GraphDataset parse_tudataset(const fs::path& directory, const std::string& name) {
  const fs::path a_path = directory / (name + "_A.txt");
  const fs::path ind_path = directory / (name + "_graph_indicator.txt");
  const fs::path lab_path = directory / (name + "_graph_labels.txt");
  const fs::path node_path = directory / (name + "_node_labels.txt");
  for (const auto& p : {a_path, ind_path, lab_path}) {
    if (!fs::exists(p)) throw DataError("missing mandatory file: " + p.string());
  }

  const std::vector<long> indicator = read_column(ind_path);
  const std::vector<long> labels = read_column(lab_path);
  const std::size_t n_graphs = labels.size();
  if (n_graphs == 0) throw DataError(lab_path.string() + ": no graphs");

  std::vector<RawGraph> raws(n_graphs);
  // Global (0-indexed) node -> (graph, local index).
  std::vector<std::uint32_t> local(indicator.size());
  for (std::size_t i = 0; i < indicator.size(); ++i) {
    const long gid = indicator[i];
    if (gid < 1 || std::size_t(gid) > n_graphs) {
      throw DataError(ind_path.string() + ":" + std::to_string(i + 1) + ": graph id out of range");
    }
    local[i] = std::uint32_t(raws[std::size_t(gid - 1)].n++);
  }
  for (std::size_t g = 0; g < n_graphs; ++g) raws[g].label = labels[g];

  const bool have_node_labels = fs::exists(node_path);
  if (have_node_labels) {
    const std::vector<long> nl = read_column(node_path);
    if (nl.size() != indicator.size()) throw DataError(node_path.string() + ": one label per node expected");
    for (std::size_t i = 0; i < nl.size(); ++i) raws[std::size_t(indicator[i] - 1)].node_labels.push_back(nl[i]);
  }

  auto in = open_required(a_path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto vals = parse_ints(line, a_path, lineno);
    if (vals.empty()) continue;
    if (vals.size() != 2) throw DataError(a_path.string() + ":" + std::to_string(lineno) + ": expected 'u, v'");
    const long u = vals[0], v = vals[1];
    if (u < 1 || v < 1 || std::size_t(u) > indicator.size() || std::size_t(v) > indicator.size()) {
      throw DataError(a_path.string() + ":" + std::to_string(lineno) + ": node id out of range");
    }
    const long gu = indicator[std::size_t(u - 1)];
    if (gu != indicator[std::size_t(v - 1)]) {
      throw DataError(a_path.string() + ":" + std::to_string(lineno) + ": edge crosses graphs " +
                      std::to_string(gu) + " and " + std::to_string(indicator[std::size_t(v - 1)]));
    }
    if (u == v) continue;  // self-loops are implicit in the propagation operator
    raws[std::size_t(gu - 1)].edges.push_back({local[std::size_t(u - 1)], local[std::size_t(v - 1)]});
  }
  for (auto& r : raws) dedupe_edges(r.edges);
  return assemble(name, std::move(raws), have_node_labels);
}

void write_tudataset(const GraphDataset& ds, const fs::path& directory, const std::string& name) {
  fs::create_directories(directory);
  auto a_out = open_output(directory / (name + "_A.txt"));
  auto ind_out = open_output(directory / (name + "_graph_indicator.txt"));
  auto lab_out = open_output(directory / (name + "_graph_labels.txt"));
  const bool node_labels = !ds.node_label_values.empty();
  std::ofstream nl_out;
  if (node_labels) nl_out = open_output(directory / (name + "_node_labels.txt"));

  std::size_t base = 1;
  for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
    const Graph& g = ds.graphs[gi];
    std::vector<std::pair<std::size_t, std::size_t>> directed;
    directed.reserve(2 * g.edges.size());
    for (const Edge& e : g.edges) {
      directed.emplace_back(e.u, e.v);
      directed.emplace_back(e.v, e.u);
    }
    std::sort(directed.begin(), directed.end());
    for (const auto& [u, v] : directed) a_out << (base + u) << ", " << (base + v) << '\n';
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      ind_out << (gi + 1) << '\n';
      if (node_labels) {
        const auto row = g.node_features.row(i);
        const auto arg = std::size_t(std::max_element(row.begin(), row.end()) - row.begin());
        nl_out << ds.node_label_values.at(arg) << '\n';
      }
    }
    lab_out << ds.original_labels[std::size_t(g.label)] << '\n';
    base += g.num_nodes();
  }
}

std::size_t convert_gspan_to_tudataset(const fs::path& input, const fs::path& directory, const std::string& name) {
  auto in = open_required(input);
  std::vector<RawGraph> raws;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    const std::string where = input.string() + ":" + std::to_string(lineno);
    if (tag == "t") {
      std::string hash;
      long id = 0, label = 0;
      if (!(ls >> hash >> id) || hash != "#") throw DataError(where + ": expected 't # <id> <label>'");
      if (!(ls >> label)) throw DataError(where + ": graph label missing");
      raws.push_back(RawGraph{});
      raws.back().label = label;
    } else if (tag == "v") {
      long id = 0, label = 0;
      if (raws.empty() || !(ls >> id >> label)) throw DataError(where + ": malformed vertex line");
      if (id != long(raws.back().n)) throw DataError(where + ": vertex ids must be consecutive from 0");
      raws.back().node_labels.push_back(label);
      ++raws.back().n;
    } else if (tag == "e") {
      long u = 0, v = 0;
      if (raws.empty() || !(ls >> u >> v)) throw DataError(where + ": malformed edge line");
      if (u < 0 || v < 0 || std::size_t(u) >= raws.back().n || std::size_t(v) >= raws.back().n) {
        throw DataError(where + ": edge endpoint out of range");
      }
      if (u != v) raws.back().edges.push_back({std::uint32_t(u), std::uint32_t(v)});
    } else {
      throw DataError(where + ": unknown record '" + tag + "'");
    }
  }
  for (auto& r : raws) dedupe_edges(r.edges);
  const GraphDataset ds = assemble(name, std::move(raws), true);
  write_tudataset(ds, directory, name);
  return ds.size();
}

// ---- synthetic ------------------------------------------------------------

namespace {

using Adjacency = std::vector<std::vector<bool>>;

bool closes_triangle(const Adjacency& adj, std::size_t u, std::size_t v) {
  for (std::size_t w = 0; w < adj.size(); ++w) {
    if (adj[u][w] && adj[v][w]) return true;
  }
  return false;
}

// Would adding (u, v) create an induced 5-cycle u-a-b-c-v-u?
bool closes_induced_c5(const Adjacency& adj, std::size_t u, std::size_t v) {
  const std::size_t n = adj.size();
  for (std::size_t a = 0; a < n; ++a) {
    if (a == v || !adj[u][a] || adj[a][v]) continue;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == u || b == v || b == a || !adj[a][b] || adj[u][b] || adj[b][v]) continue;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == u || c == a || c == b || c == v) continue;
        if (adj[b][c] && adj[c][v] && !adj[u][c] && !adj[a][c]) return true;
      }
    }
  }
  return false;
}

// Random tree plus noise edges that never create the motif.
Adjacency motif_free_base(std::size_t n, Motif motif, double noise, Rng& rng) {
  Adjacency adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t j = std::size_t(rng.below(i));
    adj[i][j] = adj[j][i] = true;
  }
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (adj[u][v] || !rng.bernoulli(noise)) continue;
      const bool bad = motif == Motif::triangle_rich ? closes_triangle(adj, u, v) : closes_induced_c5(adj, u, v);
      if (!bad) adj[u][v] = adj[v][u] = true;
    }
  }
  return adj;
}

std::vector<std::size_t> distinct_nodes(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  rng.shuffle(all);
  all.resize(count);
  return all;
}

void plant_motif(Adjacency& adj, Motif motif, Rng& rng) {
  const std::size_t n = adj.size();
  if (motif == Motif::triangle_rich) {
    const std::size_t triangles = std::max<std::size_t>(2, n / 4);
    for (std::size_t t = 0; t < triangles; ++t) {
      const auto tri = distinct_nodes(n, 3, rng);
      for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t a = tri[i], b = tri[(i + 1) % 3];
        adj[a][b] = adj[b][a] = true;
      }
    }
  } else {
    const auto cyc = distinct_nodes(n, 5, rng);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) adj[cyc[i]][cyc[j]] = false;
    }
    for (std::size_t i = 0; i < 5; ++i) {
      const std::size_t a = cyc[i], b = cyc[(i + 1) % 5];
      adj[a][b] = adj[b][a] = true;
    }
  }
}

std::size_t motif_size(Motif m) { return m == Motif::triangle_rich ? 3 : 5; }

}  // namespace

std::string to_string(Motif m) { return m == Motif::triangle_rich ? "triangle_rich" : "five_cycle"; }

Motif motif_from_string(const std::string& s) {
  if (s == "triangle_rich") return Motif::triangle_rich;
  if (s == "five_cycle") return Motif::five_cycle;
  throw std::invalid_argument("unknown motif '" + s + "'");
}

GraphDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_minority < 1) throw std::invalid_argument("synthetic: n_minority must be >= 1");
  if (spec.n_majority < spec.n_minority) throw std::invalid_argument("synthetic: n_majority < n_minority");
  if (spec.min_nodes > spec.max_nodes) throw std::invalid_argument("synthetic: empty node range");
  if (spec.min_nodes < motif_size(spec.motif)) {
    throw std::invalid_argument("synthetic: min_nodes smaller than motif size");
  }
  if (spec.noise_edge_prob < 0.0 || spec.noise_edge_prob > 1.0) {
    throw std::invalid_argument("synthetic: noise_edge_prob outside [0, 1]");
  }
  std::vector<int> labels(spec.n_majority, kMajority);
  labels.resize(spec.n_majority + spec.n_minority, kMinority);
  Rng order_rng(derive_seed(spec.seed, {0}));
  order_rng.shuffle(labels);

  std::vector<Graph> graphs;
  graphs.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Rng rng(derive_seed(spec.seed, {1, i}));
    const std::size_t n = spec.min_nodes + std::size_t(rng.below(spec.max_nodes - spec.min_nodes + 1));
    Adjacency adj = motif_free_base(n, spec.motif, spec.noise_edge_prob, rng);
    if (labels[i] == kMinority) plant_motif(adj, spec.motif, rng);
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = u + 1; v < n; ++v) {
        if (adj[u][v]) edges.push_back({std::uint32_t(u), std::uint32_t(v)});
      }
    }
    graphs.push_back(make_graph(Tensor(n, 1), std::move(edges), labels[i]));
  }
  const std::size_t md = max_degree(graphs);
  for (Graph& g : graphs) g = degree_onehot_features(g, md);
  return make_dataset("synthetic_" + to_string(spec.motif), std::move(graphs), {0, 1});
}

// ---- folds ----------------------------------------------------------------

std::vector<FoldSplit> stratified_kfold(const GraphDataset& ds, std::size_t k, double val_fraction,
                                        std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("stratified_kfold: val_fraction must be in (0, 1)");
  }
  std::array<std::vector<std::int64_t>, 2> by_class;
  for (const Graph& g : ds.graphs) by_class[std::size_t(g.label)].push_back(g.graph_id);
  for (int c = 0; c < 2; ++c) {
    if (by_class[std::size_t(c)].size() < k) {
      throw std::invalid_argument("stratified_kfold: class " + std::to_string(c) + " has " +
                                  std::to_string(by_class[std::size_t(c)].size()) + " graphs, fewer than k=" +
                                  std::to_string(k));
    }
  }
  std::vector<FoldSplit> folds(k);
  for (std::size_t c = 0; c < 2; ++c) {
    auto ids = by_class[c];
    Rng rng(derive_seed(seed, {c}));
    rng.shuffle(ids);
    const std::size_t n = ids.size();
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t lo = f * n / k, hi = (f + 1) * n / k;
      std::vector<std::int64_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (i >= lo && i < hi) {
          folds[f].test_ids.push_back(ids[i]);
        } else {
          rest.push_back(ids[i]);
        }
      }
      Rng val_rng(derive_seed(seed, {c, f, 0x7661}));
      val_rng.shuffle(rest);
      const auto wanted = std::size_t(std::llround(val_fraction * double(rest.size())));
      const std::size_t n_val = std::max<std::size_t>(1, wanted);
      if (rest.size() < n_val + 1) {
        throw std::invalid_argument("stratified_kfold: class " + std::to_string(c) +
                                    " too small for a training and validation slice");
      }
      folds[f].val_ids.insert(folds[f].val_ids.end(), rest.begin(), rest.begin() + std::ptrdiff_t(n_val));
      folds[f].train_ids.insert(folds[f].train_ids.end(), rest.begin() + std::ptrdiff_t(n_val), rest.end());
    }
  }
  for (auto& f : folds) {
    std::sort(f.train_ids.begin(), f.train_ids.end());
    std::sort(f.val_ids.begin(), f.val_ids.end());
    std::sort(f.test_ids.begin(), f.test_ids.end());
  }
  return folds;
}

void write_split_json(const FoldSplit& split, const fs::path& path) {
  nlohmann::json j;
  j["train_ids"] = split.train_ids;
  j["val_ids"] = split.val_ids;
  j["test_ids"] = split.test_ids;
  auto out = open_output(path);
  out << j.dump(1) << '\n';
}

FoldSplit read_split_json(const fs::path& path) {
  auto in = open_required(path);
  try {
    const auto j = nlohmann::json::parse(in);
    FoldSplit s;
    s.train_ids = j.at("train_ids").get<std::vector<std::int64_t>>();
    s.val_ids = j.at("val_ids").get<std::vector<std::int64_t>>();
    s.test_ids = j.at("test_ids").get<std::vector<std::int64_t>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed split file: " + e.what());
  }
}

std::uint64_t dataset_fingerprint(const GraphDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const Graph& g : ds.graphs) {
    const std::uint64_t header[] = {g.num_nodes(), g.feature_dim(), g.edges.size(), std::uint64_t(g.label)};
    mix(header, sizeof(header));
    mix(g.node_features.values.data(), g.node_features.values.size() * sizeof(double));
    for (const Edge& e : g.edges) {
      const std::uint32_t uv[] = {e.u, e.v};
      mix(uv, sizeof(uv));
    }
  }
  return h;
}

}  // namespace mosgnn

#include "mosgnn/graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mosgnn {

Graph make_graph(Tensor node_features, std::vector<Edge> edges, int label, std::int64_t graph_id) {
  for (Edge& e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end());
  Graph g{std::move(node_features), std::move(edges), label, graph_id};
  validate_graph(g);
  return g;
}

const Graph& validate_graph(const Graph& g) {
  const std::size_t n = g.num_nodes();
  if (n == 0) throw std::invalid_argument("graph " + std::to_string(g.graph_id) + ": empty graph");
  if (g.node_features.values.size() != n * g.node_features.cols) {
    throw std::invalid_argument("graph: feature matrix malformed");
  }
  if (g.label != kMajority && g.label != kMinority) throw std::invalid_argument("graph: label must be 0 or 1");
  std::vector<Edge> sorted = g.edges;
  for (const Edge& e : g.edges) {
    if (e.u >= n || e.v >= n) {
      throw std::invalid_argument("graph " + std::to_string(g.graph_id) + ": endpoint out of range");
    }
    if (e.u == e.v) throw std::invalid_argument("graph " + std::to_string(g.graph_id) + ": self-loop");
    if (e.u > e.v) throw std::invalid_argument("graph " + std::to_string(g.graph_id) + ": edge not canonical");
  }
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("graph " + std::to_string(g.graph_id) + ": duplicate edge");
  }
  return g;
}

Graph induced_subgraph(const Graph& g, std::span<const std::uint32_t> keep_nodes, std::span<const Edge> keep_edges) {
  std::vector<std::uint32_t> nodes(keep_nodes.begin(), keep_nodes.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  if (nodes.empty()) throw std::invalid_argument("induced_subgraph: keep_nodes is empty");
  const std::size_t n = g.num_nodes();
  constexpr std::uint32_t kDropped = ~std::uint32_t{0};
  std::vector<std::uint32_t> remap(n, kDropped);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= n) throw std::invalid_argument("induced_subgraph: node out of range");
    remap[nodes[i]] = std::uint32_t(i);
  }
  Tensor feats(nodes.size(), g.feature_dim());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::copy(g.node_features.row(nodes[i]).begin(), g.node_features.row(nodes[i]).end(), feats.row(i).begin());
  }
  std::vector<Edge> existing = g.edges;
  std::sort(existing.begin(), existing.end());
  std::vector<Edge> edges;
  edges.reserve(keep_edges.size());
  for (Edge e : keep_edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.v >= n || remap[e.u] == kDropped || remap[e.v] == kDropped) {
      throw std::invalid_argument("induced_subgraph: edge touches a removed node");
    }
    if (!std::binary_search(existing.begin(), existing.end(), e)) {
      throw std::invalid_argument("induced_subgraph: edge not in graph");
    }
    edges.push_back({remap[e.u], remap[e.v]});
  }
  return make_graph(std::move(feats), std::move(edges), g.label, g.graph_id);
}

Graph induced_subgraph(const Graph& g, std::span<const std::uint32_t> keep_nodes) {
  std::vector<bool> kept(g.num_nodes(), false);
  for (std::uint32_t v : keep_nodes) {
    if (v < kept.size()) kept[v] = true;
  }
  std::vector<Edge> edges;
  for (const Edge& e : g.edges) {
    if (kept[e.u] && kept[e.v]) edges.push_back(e);
  }
  return induced_subgraph(g, keep_nodes, edges);
}

std::vector<std::size_t> degrees(const Graph& g) {
  std::vector<std::size_t> deg(g.num_nodes(), 0);
  for (const Edge& e : g.edges) {
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

std::size_t max_degree(std::span<const Graph> graphs) {
  std::size_t best = 0;
  for (const Graph& g : graphs) {
    for (std::size_t d : degrees(g)) best = std::max(best, d);
  }
  return best;
}

Graph degree_onehot_features(const Graph& g, std::size_t max_degree) {
  const auto deg = degrees(g);
  Tensor feats(g.num_nodes(), max_degree + 1);
  for (std::size_t i = 0; i < deg.size(); ++i) {
    if (deg[i] > max_degree) {
      throw std::invalid_argument("degree_onehot_features: degree " + std::to_string(deg[i]) + " exceeds max_degree");
    }
    feats(i, deg[i]) = 1.0;
  }
  Graph out = g;
  out.node_features = std::move(feats);
  return out;
}

Graph permute_nodes(const Graph& g, std::span<const std::uint32_t> perm) {
  const std::size_t n = g.num_nodes();
  if (perm.size() != n) throw std::invalid_argument("permute_nodes: permutation size mismatch");
  std::vector<bool> seen(n, false);
  for (std::uint32_t p : perm) {
    if (p >= n || seen[p]) throw std::invalid_argument("permute_nodes: not a permutation");
    seen[p] = true;
  }
  Tensor feats(n, g.feature_dim());
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(g.node_features.row(i).begin(), g.node_features.row(i).end(), feats.row(perm[i]).begin());
  }
  std::vector<Edge> edges;
  edges.reserve(g.edges.size());
  for (const Edge& e : g.edges) edges.push_back({perm[e.u], perm[e.v]});
  return make_graph(std::move(feats), std::move(edges), g.label, g.graph_id);
}

double GraphDataset::ratio() const {
  if (minority_count == 0) throw std::domain_error("ratio: dataset has no minority graphs");
  return double(majority_count) / double(minority_count);
}

std::size_t GraphDataset::feature_dim() const { return graphs.empty() ? 0 : graphs.front().feature_dim(); }

const Graph& GraphDataset::at(std::int64_t graph_id) const {
  if (graph_id < 0 || std::size_t(graph_id) >= graphs.size()) throw std::out_of_range("graph id out of range");
  return graphs[std::size_t(graph_id)];
}

GraphDataset make_dataset(std::string name, std::vector<Graph> graphs, std::array<long, 2> original_labels) {
  GraphDataset ds;
  ds.name = std::move(name);
  ds.original_labels = original_labels;
  std::size_t ones = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    graphs[i].graph_id = std::int64_t(i);
    validate_graph(graphs[i]);
    ones += graphs[i].label == kMinority ? 1 : 0;
  }
  if (ones > graphs.size() - ones) {
    for (Graph& g : graphs) g.label = 1 - g.label;
    std::swap(ds.original_labels[0], ds.original_labels[1]);
    ds.labels_swapped = true;
    ones = graphs.size() - ones;
  }
  ds.minority_count = ones;
  ds.majority_count = graphs.size() - ones;
  ds.graphs = std::move(graphs);
  return ds;
}

std::vector<Graph> select_graphs(const GraphDataset& ds, std::span<const std::int64_t> ids) {
  std::vector<Graph> out;
  out.reserve(ids.size());
  for (std::int64_t id : ids) out.push_back(ds.at(id));
  return out;
}

}  // namespace mosgnn

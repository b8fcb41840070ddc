#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mosgnn/tensor.hpp"

namespace mosgnn {

/// Undirected edge stored canonically with u < v.
struct Edge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  auto operator<=>(const Edge&) const = default;
};

inline constexpr int kMajority = 0;
inline constexpr int kMinority = 1;

/// Attributed undirected graph. Rows of node_features are nodes.
struct Graph {
  Tensor node_features;
  std::vector<Edge> edges;
  int label = kMajority;
  std::int64_t graph_id = 0;

  [[nodiscard]] std::size_t num_nodes() const noexcept { return node_features.rows; }
  [[nodiscard]] std::size_t feature_dim() const noexcept { return node_features.cols; }
};

/// Builds a graph from possibly unordered edge endpoints and validates it.
Graph make_graph(Tensor node_features, std::vector<Edge> edges, int label = kMajority, std::int64_t graph_id = 0);

/// Throws std::invalid_argument unless every Graph invariant holds:
/// n >= 1, endpoints in range, no self-loops, canonical and unique edges.
const Graph& validate_graph(const Graph& g);

/// Subgraph on `keep_nodes` (reindexed in ascending old order) keeping only
/// `keep_edges`, which must be edges of g between kept nodes.
Graph induced_subgraph(const Graph& g, std::span<const std::uint32_t> keep_nodes, std::span<const Edge> keep_edges);
/// Same, keeping every edge induced by `keep_nodes`.
Graph induced_subgraph(const Graph& g, std::span<const std::uint32_t> keep_nodes);

std::vector<std::size_t> degrees(const Graph& g);
std::size_t max_degree(std::span<const Graph> graphs);

/// Replaces features by the one-hot encoding of node degree (width max_degree + 1).
Graph degree_onehot_features(const Graph& g, std::size_t max_degree);

/// Relabels nodes: old node i becomes node perm[i].
Graph permute_nodes(const Graph& g, std::span<const std::uint32_t> perm);

/// Ordered collection of graphs with class bookkeeping. Class 1 is always the
/// minority; graph_id equals the position in `graphs`.
struct GraphDataset {
  std::string name;
  std::vector<Graph> graphs;
  std::size_t majority_count = 0;
  std::size_t minority_count = 0;
  /// Source-file label value for internal class 0 and class 1.
  std::array<long, 2> original_labels{0, 1};
  /// True when the source's larger class carried the label mapped to 1 and
  /// labels were swapped on load.
  bool labels_swapped = false;
  /// Sorted distinct node label values behind one-hot features; empty when
  /// features are degree one-hot.
  std::vector<long> node_label_values;

  [[nodiscard]] std::size_t size() const noexcept { return graphs.size(); }
  [[nodiscard]] double ratio() const;
  [[nodiscard]] std::size_t feature_dim() const;
  [[nodiscard]] const Graph& at(std::int64_t graph_id) const;
};

/// Assigns graph ids, counts classes and, if class 1 outnumbers class 0,
/// swaps labels (recorded in labels_swapped / original_labels).
GraphDataset make_dataset(std::string name, std::vector<Graph> graphs, std::array<long, 2> original_labels = {0, 1});

/// Copies of the graphs with the given ids, in the given order.
std::vector<Graph> select_graphs(const GraphDataset& ds, std::span<const std::int64_t> ids);

}  // namespace mosgnn

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mosgnn/graph.hpp"

namespace mosgnn {

/// One slot of a batch: a graph id and its class. Duplicated minority
/// graphs occupy several slots.
struct Member {
  std::int64_t graph_id = 0;
  int label = kMajority;
  auto operator<=>(const Member&) const = default;
};

/// A pair of batch slots with its surrogate label (0 iff both majority).
struct PairSample {
  std::int64_t left_id = 0;
  std::int64_t right_id = 0;
  std::size_t left_pos = 0;
  std::size_t right_pos = 0;
  int label = 0;
};

/// q stochastic subgraphs of one graph; every subgraph keeps the source label.
struct SubgraphBag {
  std::int64_t source_id = 0;
  int label = kMajority;
  std::vector<Graph> subgraphs;
  std::uint64_t seed = 0;
};

/// Two bags (positions in the bag sequence) with the surrogate label.
struct BagPair {
  std::size_t left = 0;
  std::size_t right = 0;
  int label = 0;
};

/// Class-balanced epoch stream over `pool`: every majority member once and the
/// minority members duplicated round-robin (remainder drawn by seed) up to the
/// majority count, shuffled. Length 2M.
std::vector<Member> oversample_epoch(std::span<const Member> pool, std::uint64_t seed);
std::vector<std::int64_t> oversample_epoch(const GraphDataset& ds, std::uint64_t seed);

/// 0 for a majority-majority pair, 1 otherwise.
int pair_label(int class_left, int class_right);

/// ceil(n/2) majority-majority pairs, then the rest split between
/// majority-minority (gets the remainder) and minority-minority. Members are
/// drawn with replacement; left/right order is randomized.
std::vector<PairSample> make_pairs(std::span<const Member> batch, std::size_t n_pairs, std::uint64_t seed);

/// Each draw drops nodes with probability node_drop (keeping at least
/// min(2, n) nodes), then drops surviving edges with probability edge_drop.
SubgraphBag sample_subgraph_bag(const Graph& g, std::size_t q, double node_drop, double edge_drop,
                                std::uint64_t seed);

/// Isomorphism-invariant node colors: hashed feature rows refined by
/// `rounds` of neighbour-multiset hashing.
std::vector<std::uint64_t> structural_colors(const Graph& g, std::size_t rounds = 3);

/// Like sample_subgraph_bag, but every drop decision hashes the seed with
/// structural colors instead of node indices, so relabeling the nodes of `g`
/// relabels the bag's subgraphs the same way. Used for inference bags.
SubgraphBag sample_subgraph_bag_invariant(const Graph& g, std::size_t q, double node_drop, double edge_drop,
                                          std::uint64_t seed);

/// make_pairs applied to bags.
std::vector<BagPair> make_bag_pairs(std::span<const SubgraphBag> bags, std::size_t n_pairs, std::uint64_t seed);

}  // namespace mosgnn

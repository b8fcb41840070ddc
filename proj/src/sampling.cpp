#include "mosgnn/sampling.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

#include "mosgnn/rng.hpp"

namespace mosgnn {

std::vector<Member> oversample_epoch(std::span<const Member> pool, std::uint64_t seed) {
  std::vector<Member> majority, minority;
  for (const Member& m : pool) (m.label == kMinority ? minority : majority).push_back(m);
  if (minority.empty()) throw std::invalid_argument("oversample_epoch: no minority graphs");
  if (majority.size() < minority.size()) throw std::invalid_argument("oversample_epoch: minority outnumbers majority");
  Rng rng(seed);
  const std::size_t m = majority.size(), n = minority.size();
  std::vector<Member> out = majority;
  out.reserve(2 * m);
  for (std::size_t r = 0; r < m / n; ++r) out.insert(out.end(), minority.begin(), minority.end());
  auto extra = minority;
  rng.shuffle(extra);
  out.insert(out.end(), extra.begin(), extra.begin() + std::ptrdiff_t(m % n));
  rng.shuffle(out);
  return out;
}

std::vector<std::int64_t> oversample_epoch(const GraphDataset& ds, std::uint64_t seed) {
  std::vector<Member> pool;
  pool.reserve(ds.size());
  for (const Graph& g : ds.graphs) pool.push_back({g.graph_id, g.label});
  std::vector<std::int64_t> ids;
  for (const Member& m : oversample_epoch(pool, seed)) ids.push_back(m.graph_id);
  return ids;
}

int pair_label(int class_left, int class_right) {
  return class_left == kMajority && class_right == kMajority ? 0 : 1;
}

std::vector<PairSample> make_pairs(std::span<const Member> batch, std::size_t n_pairs, std::uint64_t seed) {
  std::vector<std::size_t> maj, min;
  for (std::size_t i = 0; i < batch.size(); ++i) (batch[i].label == kMinority ? min : maj).push_back(i);
  if (maj.size() < 2) throw std::invalid_argument("make_pairs: batch needs at least two majority graphs");
  if (min.size() < 2) throw std::invalid_argument("make_pairs: batch needs at least two minority graphs");

  const std::size_t n_majmaj = (n_pairs + 1) / 2;
  const std::size_t n_pos = n_pairs / 2;
  const std::size_t n_minmin = n_pos / 2;
  const std::size_t n_majmin = n_pos - n_minmin;

  Rng rng(seed);
  auto draw = [&rng](const std::vector<std::size_t>& from) { return from[std::size_t(rng.below(from.size()))]; };
  std::vector<PairSample> pairs;
  pairs.reserve(n_pairs);
  auto emit = [&](std::size_t a, std::size_t b) {
    if (rng.bernoulli(0.5)) std::swap(a, b);
    pairs.push_back({batch[a].graph_id, batch[b].graph_id, a, b, pair_label(batch[a].label, batch[b].label)});
  };
  for (std::size_t i = 0; i < n_majmaj; ++i) {
    const std::size_t a = draw(maj);
    emit(a, draw(maj));
  }
  for (std::size_t i = 0; i < n_majmin; ++i) {
    const std::size_t a = draw(maj);
    emit(a, draw(min));
  }
  for (std::size_t i = 0; i < n_minmin; ++i) {
    const std::size_t a = draw(min);
    emit(a, draw(min));
  }
  rng.shuffle(pairs);
  return pairs;
}

SubgraphBag sample_subgraph_bag(const Graph& g, std::size_t q, double node_drop, double edge_drop,
                                std::uint64_t seed) {
  if (q < 1) throw std::invalid_argument("sample_subgraph_bag: q must be >= 1");
  if (!(node_drop >= 0.0 && node_drop < 1.0) || !(edge_drop >= 0.0 && edge_drop < 1.0)) {
    throw std::invalid_argument("sample_subgraph_bag: drop rates must be in [0, 1)");
  }
  const std::size_t n = g.num_nodes();
  const std::size_t floor = std::min<std::size_t>(2, n);
  SubgraphBag bag{g.graph_id, g.label, {}, seed};
  bag.subgraphs.reserve(q);
  for (std::size_t draw = 0; draw < q; ++draw) {
    Rng rng(derive_seed(seed, {draw}));
    std::vector<std::uint32_t> kept, dropped;
    for (std::uint32_t v = 0; v < n; ++v) (rng.bernoulli(node_drop) ? dropped : kept).push_back(v);
    while (kept.size() < floor) {
      const std::size_t j = std::size_t(rng.below(dropped.size()));
      kept.push_back(dropped[j]);
      dropped.erase(dropped.begin() + std::ptrdiff_t(j));
    }
    std::sort(kept.begin(), kept.end());
    std::vector<bool> alive(n, false);
    for (std::uint32_t v : kept) alive[v] = true;
    std::vector<Edge> edges;
    for (const Edge& e : g.edges) {
      if (alive[e.u] && alive[e.v] && !rng.bernoulli(edge_drop)) edges.push_back(e);
    }
    bag.subgraphs.push_back(induced_subgraph(g, kept, edges));
  }
  return bag;
}

std::vector<std::uint64_t> structural_colors(const Graph& g, std::size_t rounds) {
  const std::size_t n = g.num_nodes();
  std::vector<std::uint64_t> color(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::uint64_t h = 0x636f6c6f72ULL;
    for (double x : g.node_features.row(v)) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x + 0.0));
    color[v] = h;
  }
  std::vector<std::vector<std::uint32_t>> nbrs(n);
  for (const Edge& e : g.edges) {
    nbrs[e.u].push_back(e.v);
    nbrs[e.v].push_back(e.u);
  }
  std::vector<std::uint64_t> next(n), multiset;
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::size_t v = 0; v < n; ++v) {
      multiset.clear();
      for (std::uint32_t u : nbrs[v]) multiset.push_back(color[u]);
      std::sort(multiset.begin(), multiset.end());
      std::uint64_t h = splitmix64(color[v] ^ 0x726f756e64ULL);
      for (std::uint64_t c : multiset) h = splitmix64(h ^ c);
      next[v] = h;
    }
    color.swap(next);
  }
  return color;
}

namespace {

double unit_hash(std::uint64_t h) { return double(splitmix64(h) >> 11) * 0x1.0p-53; }

}  // namespace

SubgraphBag sample_subgraph_bag_invariant(const Graph& g, std::size_t q, double node_drop, double edge_drop,
                                          std::uint64_t seed) {
  if (q < 1) throw std::invalid_argument("sample_subgraph_bag: q must be >= 1");
  if (!(node_drop >= 0.0 && node_drop < 1.0) || !(edge_drop >= 0.0 && edge_drop < 1.0)) {
    throw std::invalid_argument("sample_subgraph_bag: drop rates must be in [0, 1)");
  }
  const std::size_t n = g.num_nodes();
  const std::size_t floor = std::min<std::size_t>(2, n);
  const auto color = structural_colors(g);
  SubgraphBag bag{g.graph_id, g.label, {}, seed};
  bag.subgraphs.reserve(q);
  for (std::size_t draw = 0; draw < q; ++draw) {
    const std::uint64_t s = derive_seed(seed, {draw});
    std::vector<double> node_u(n);
    for (std::size_t v = 0; v < n; ++v) node_u[v] = unit_hash(s ^ color[v]);
    std::vector<bool> alive(n);
    std::size_t n_alive = 0;
    for (std::size_t v = 0; v < n; ++v) n_alive += (alive[v] = node_u[v] >= node_drop);
    if (n_alive < floor) {
      // Revive the dropped nodes with the largest hash values.
      std::vector<std::uint32_t> dropped;
      for (std::uint32_t v = 0; v < n; ++v) {
        if (!alive[v]) dropped.push_back(v);
      }
      std::sort(dropped.begin(), dropped.end(), [&](std::uint32_t a, std::uint32_t b) {
        return node_u[a] != node_u[b] ? node_u[a] > node_u[b] : a < b;
      });
      for (std::size_t i = 0; n_alive < floor; ++i, ++n_alive) alive[dropped[i]] = true;
    }
    std::vector<std::uint32_t> kept;
    for (std::uint32_t v = 0; v < n; ++v) {
      if (alive[v]) kept.push_back(v);
    }
    std::vector<Edge> edges;
    for (const Edge& e : g.edges) {
      if (!alive[e.u] || !alive[e.v]) continue;
      const auto [lo, hi] = std::minmax(color[e.u], color[e.v]);
      if (unit_hash(splitmix64(s ^ lo) ^ hi ^ 0x65646765ULL) >= edge_drop) edges.push_back(e);
    }
    bag.subgraphs.push_back(induced_subgraph(g, kept, edges));
  }
  return bag;
}

std::vector<BagPair> make_bag_pairs(std::span<const SubgraphBag> bags, std::size_t n_pairs, std::uint64_t seed) {
  std::vector<Member> members;
  members.reserve(bags.size());
  for (const SubgraphBag& b : bags) members.push_back({b.source_id, b.label});
  std::vector<BagPair> out;
  out.reserve(n_pairs);
  try {
    for (const PairSample& p : make_pairs(members, n_pairs, seed)) out.push_back({p.left_pos, p.right_pos, p.label});
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("make_bag_pairs: ") + e.what());
  }
  return out;
}

}  // namespace mosgnn

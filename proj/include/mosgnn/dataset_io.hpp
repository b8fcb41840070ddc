#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mosgnn/graph.hpp"

namespace mosgnn {

/// Disjoint train/validation/test id sets of one cross-validation fold.
struct FoldSplit {
  std::vector<std::int64_t> train_ids;
  std::vector<std::int64_t> val_ids;
  std::vector<std::int64_t> test_ids;
};

enum class Motif { triangle_rich, five_cycle };

struct SyntheticSpec {
  std::size_t n_majority = 100;
  std::size_t n_minority = 10;
  std::size_t min_nodes = 12;
  std::size_t max_nodes = 20;
  Motif motif = Motif::triangle_rich;
  double noise_edge_prob = 0.02;
  std::uint64_t seed = 0;
};

/// Reads `<name>_A.txt`, `<name>_graph_indicator.txt`,
/// `<name>_graph_labels.txt` and, when present, `<name>_node_labels.txt`.
/// Node labels become one-hot features; otherwise degree one-hot is used.
/// The rarer graph label maps to class 1.
GraphDataset parse_tudataset(const std::filesystem::path& directory, const std::string& name);

/// Writes the dataset in the same format (edges listed in both directions).
void write_tudataset(const GraphDataset& ds, const std::filesystem::path& directory, const std::string& name);

/// Converts a gSpan-style text file (`t # id label` / `v id label` /
/// `e u v label` blocks) into TUDataset files. Returns the graph count.
std::size_t convert_gspan_to_tudataset(const std::filesystem::path& input, const std::filesystem::path& directory,
                                       const std::string& name);

/// Planted-motif imbalanced dataset; deterministic in spec.seed.
GraphDataset generate_synthetic(const SyntheticSpec& spec);

std::string to_string(Motif m);
Motif motif_from_string(const std::string& s);

/// Stratified k-fold split. Each fold's validation set is a stratified
/// `val_fraction` slice of its training portion (at least one graph per class).
std::vector<FoldSplit> stratified_kfold(const GraphDataset& ds, std::size_t k, double val_fraction, std::uint64_t seed);

void write_split_json(const FoldSplit& split, const std::filesystem::path& path);
FoldSplit read_split_json(const std::filesystem::path& path);

/// FNV-1a hash over the dataset's structure, features and labels.
std::uint64_t dataset_fingerprint(const GraphDataset& ds);

}  // namespace mosgnn

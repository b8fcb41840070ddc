#pragma once

// Versioned binary checkpoint of trained parameters; layout in
// docs/checkpoint_format.md.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mosgnn/objectives.hpp"

namespace mosgnn {

inline constexpr char kCheckpointMagic[8] = {'M', 'O', 'S', 'G', 'N', 'N', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void write_checkpoint(const std::filesystem::path& path, ModelParams& params, const nlohmann::json& metadata);

/// Throws CheckpointError on a missing, truncated or corrupt file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies the stored tensors into `params`, which must have exactly the same
/// names and shapes; throws CheckpointError otherwise.
void load_parameters(const Checkpoint& ckpt, ModelParams& params);

}  // namespace mosgnn

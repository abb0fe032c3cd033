#pragma once

#include <filesystem>

#include "medmesh/net.hpp"

namespace medmesh {

inline constexpr int kCheckpointVersion = 1;

/// Writes config, every parameter array and the running normalization
/// statistics as a versioned JSON document.
void save_checkpoint(const MeshUNet& net, const std::filesystem::path& path);

MeshUNet load_checkpoint(const std::filesystem::path& path);

/// Loads and checks that the stored config equals `expected`; throws ConfigError otherwise.
MeshUNet load_checkpoint(const std::filesystem::path& path, const NetworkConfig& expected);

}  // namespace medmesh

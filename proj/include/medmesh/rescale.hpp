#pragma once

#include <vector>

#include "medmesh/mesh.hpp"

namespace medmesh {

/// Transfers per-edge labels from `low` to `high`: each high-resolution
/// edge takes the label of the low-resolution edge with the nearest
/// midpoint, ties to the lower low-edge index. Both meshes must share a
/// coordinate frame; that cannot be checked here.
std::vector<int> rescale_labels(const Mesh& low, const std::vector<int>& low_labels, const Mesh& high);

}  // namespace medmesh

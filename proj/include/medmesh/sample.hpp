#pragma once

#include <cstdint>
#include <vector>

#include "medmesh/mesh.hpp"

namespace medmesh {

/// A mesh with one class label per edge. Edges with valid_mask 0 (padding)
/// take no part in the loss or in metrics.
struct LabeledSample {
  Mesh mesh;
  std::vector<int> labels;
  std::vector<std::uint8_t> valid_mask;

  /// Pads mesh, labels and mask to `total` edges.
  LabeledSample padded_to(std::size_t total) const;
};

struct Dataset {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> val;
  std::vector<LabeledSample> test;
};

/// Builds a sample with every real edge valid; validates the label count.
LabeledSample make_sample(Mesh mesh, std::vector<int> labels, int num_classes);

}  // namespace medmesh

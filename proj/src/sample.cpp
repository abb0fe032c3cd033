#include "medmesh/sample.hpp"

#include <string>

#include "medmesh/error.hpp"

namespace medmesh {

LabeledSample LabeledSample::padded_to(std::size_t total) const {
  LabeledSample out{mesh.padded_to(total), labels, valid_mask};
  out.labels.resize(total, 0);
  out.valid_mask.resize(total, 0);
  return out;
}

LabeledSample make_sample(Mesh mesh, std::vector<int> labels, int num_classes) {
  if (labels.size() != mesh.edge_count())
    throw Error(ErrorKind::LengthMismatch, std::to_string(labels.size()) + " labels for " +
                                               std::to_string(mesh.edge_count()) + " edges");
  for (int l : labels)
    if (l < 0 || l >= num_classes)
      throw Error(ErrorKind::LabelOutOfRange,
                  "label " + std::to_string(l) + " outside [0, " + std::to_string(num_classes) + ")");
  std::vector<std::uint8_t> mask(mesh.edge_count(), 0);
  for (std::size_t e = 0; e < mesh.real_edge_count(); ++e) mask[e] = 1;
  return LabeledSample{std::move(mesh), std::move(labels), std::move(mask)};
}

}  // namespace medmesh

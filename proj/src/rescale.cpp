#include "medmesh/rescale.hpp"

#include <string>

#include "medmesh/error.hpp"
#include "medmesh/kdtree.hpp"

namespace medmesh {

std::vector<int> rescale_labels(const Mesh& low, const std::vector<int>& low_labels, const Mesh& high) {
  if (low.real_edge_count() == 0) throw Error(ErrorKind::EmptySource, "source mesh has no edges");
  if (low_labels.size() < low.real_edge_count())
    throw Error(ErrorKind::LengthMismatch, std::to_string(low_labels.size()) + " labels for " +
                                               std::to_string(low.real_edge_count()) + " edges");
  std::vector<Vec3> mids(low.real_edge_count());
  for (std::size_t e = 0; e < mids.size(); ++e) mids[e] = low.edge_midpoint(e);
  const KdTree tree(mids);

  std::vector<int> out(high.real_edge_count());
  for (std::size_t e = 0; e < out.size(); ++e) out[e] = low_labels[tree.nearest(high.edge_midpoint(e)).index];
  return out;
}

}  // namespace medmesh

#pragma once

#include "medmesh/mesh.hpp"

namespace medmesh {

inline constexpr int kInputChannels = 5;

/// Edge length or triangle area below this (model units) is degenerate.
inline constexpr double kDegenerateTolerance = 1e-12;

/// Five similarity-invariant features per edge, as a 5 x E map:
///   0     dihedral angle between the incident faces' unit normals
///   1, 2  inner angles opposite the edge in each face, ascending
///   3, 4  edge length over the opposite vertex's height, ascending
/// A boundary edge has dihedral 0 and zero for the missing face's angle and
/// ratio; padding edges are all zero.
FeatureMap extract_edge_features(const Mesh& mesh);

}  // namespace medmesh

#include "medmesh/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "medmesh/error.hpp"

namespace medmesh {

namespace {

struct FaceSide {
  double inner_angle = 0.0;
  double length_ratio = 0.0;
  Vec3 unit_normal = Vec3::Zero();
};

int opposite_vertex(const Face& f, const EdgeVerts& ev) {
  for (int v : f)
    if (v != ev[0] && v != ev[1]) return v;
  return kMissing;
}

FaceSide face_side(const Mesh& mesh, int face, const EdgeVerts& ev, double edge_len) {
  const auto& p = mesh.vertices();
  const Face& f = mesh.faces()[face];
  const Vec3 o = p[opposite_vertex(f, ev)];
  const Vec3 a = p[ev[0]] - o;
  const Vec3 b = p[ev[1]] - o;
  const double twice_area = a.cross(b).norm();

  FaceSide s;
  s.inner_angle = std::atan2(twice_area, a.dot(b));
  // height of o above the edge line is twice_area / edge_len
  s.length_ratio = edge_len * edge_len / twice_area;
  s.unit_normal = (p[f[1]] - p[f[0]]).cross(p[f[2]] - p[f[0]]).normalized();
  return s;
}

}  // namespace

FeatureMap extract_edge_features(const Mesh& mesh) {
  const auto& p = mesh.vertices();
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const Face& tri = mesh.faces()[f];
    const double area = 0.5 * (p[tri[1]] - p[tri[0]]).cross(p[tri[2]] - p[tri[0]]).norm();
    if (!(area >= kDegenerateTolerance))
      throw Error(ErrorKind::DegenerateGeometry,
                  "face " + std::to_string(f) + " has area " + std::to_string(area));
  }

  FeatureMap out = FeatureMap::Zero(kInputChannels, static_cast<Eigen::Index>(mesh.edge_count()));
  for (std::size_t e = 0; e < mesh.real_edge_count(); ++e) {
    const EdgeVerts& ev = mesh.edges()[e];
    const double len = (p[ev[0]] - p[ev[1]]).norm();
    if (!(len >= kDegenerateTolerance))
      throw Error(ErrorKind::DegenerateGeometry, "edge " + std::to_string(e) + " has zero length");

    const auto& inc = mesh.edge_faces()[e];
    const FaceSide s0 = face_side(mesh, inc[0], ev, len);
    FaceSide s1;
    double dihedral = 0.0;
    if (inc[1] != kMissing) {
      s1 = face_side(mesh, inc[1], ev, len);
      // atan2 form of arccos(n0 . n1); stays accurate near 0 and pi.
      dihedral = std::atan2(s0.unit_normal.cross(s1.unit_normal).norm(),
                            std::clamp(s0.unit_normal.dot(s1.unit_normal), -1.0, 1.0));
    }
    const auto col = static_cast<Eigen::Index>(e);
    out(0, col) = dihedral;
    out(1, col) = std::min(s0.inner_angle, s1.inner_angle);
    out(2, col) = std::max(s0.inner_angle, s1.inner_angle);
    out(3, col) = std::min(s0.length_ratio, s1.length_ratio);
    out(4, col) = std::max(s0.length_ratio, s1.length_ratio);
  }
  return out;
}

}  // namespace medmesh

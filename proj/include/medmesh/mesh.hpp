#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace medmesh {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;
using EdgeVerts = std::array<int, 2>;

/// Sentinel for an absent neighbor slot or a padding edge endpoint.
inline constexpr int kMissing = -1;

/// Per-edge feature array, channels x edges. Column e holds edge e.
using FeatureMap = Eigen::MatrixXd;

/// Undirected edge key: the sorted vertex pair packed into 64 bits.
inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

struct Connectivity {
  std::vector<EdgeVerts> edges;
  std::vector<std::array<int, 4>> edge_neighbors;
  // sides[e][j]: slot that e occupies in edge_neighbors[edge_neighbors[e][j]].
  std::vector<std::array<int, 4>> sides;
  std::vector<std::uint8_t> boundary;
  // Incident faces in discovery order; second entry kMissing on boundary edges.
  std::vector<std::array<int, 2>> edge_faces;
};

/// Builds canonical edge connectivity from faces.
///
/// Edges are numbered in order of first appearance walking faces in order,
/// each face as (v0,v1), (v1,v2), (v2,v0). For an edge found at local
/// position k of its first face, neighbor slots 0 and 1 hold that face's
/// edges k+1 and k+2; slots 2 and 3 hold the same for the second face, or
/// kMissing on a boundary edge.
Connectivity build_connectivity(std::span<const Face> faces, std::size_t vertex_count);

/// Triangle mesh with edge connectivity.
///
/// The first real_edge_count() edges come from faces. A mesh may carry
/// trailing padding edges: isolated placeholders with no vertices and four
/// kMissing neighbors, used to bring samples up to a fixed edge count.
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<EdgeVerts>& edges() const { return conn_.edges; }
  const std::vector<std::array<int, 4>>& edge_neighbors() const { return conn_.edge_neighbors; }
  const std::vector<std::array<int, 4>>& sides() const { return conn_.sides; }
  const std::vector<std::array<int, 2>>& edge_faces() const { return conn_.edge_faces; }

  bool is_boundary(std::size_t e) const { return conn_.boundary[e] != 0; }
  bool is_padding(std::size_t e) const { return e >= real_edges_; }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t face_count() const { return faces_.size(); }
  std::size_t edge_count() const { return conn_.edges.size(); }
  std::size_t real_edge_count() const { return real_edges_; }
  std::size_t padding_edge_count() const { return edge_count() - real_edges_; }
  std::size_t boundary_edge_count() const;

  Vec3 edge_midpoint(std::size_t e) const;

  /// Copy with vertex positions replaced; connectivity is kept.
  Mesh with_vertices(std::vector<Vec3> vertices) const;

  /// Copy with padding edges appended until edge_count() == total.
  Mesh padded_to(std::size_t total) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  Connectivity conn_;
  std::size_t real_edges_ = 0;
};

/// Loads the `v`/`f` subset of Wavefront OBJ (1-based indices, triangles only).
Mesh load_obj(const std::filesystem::path& path);

void save_obj(const Mesh& mesh, const std::filesystem::path& path);

}  // namespace medmesh

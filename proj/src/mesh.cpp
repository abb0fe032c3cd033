#include "medmesh/mesh.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

#include "medmesh/error.hpp"

namespace medmesh {

Connectivity build_connectivity(std::span<const Face> faces, std::size_t vertex_count) {
  Connectivity c;
  std::unordered_map<std::uint64_t, int> index;
  index.reserve(faces.size() * 2);
  std::vector<std::array<int, 3>> face_edges(faces.size());

  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& tri = faces[f];
    for (int v : tri) {
      if (v < 0 || static_cast<std::size_t>(v) >= vertex_count)
        throw Error(ErrorKind::VertexIndexOutOfRange,
                    "face " + std::to_string(f) + " references vertex " + std::to_string(v));
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0])
      throw Error(ErrorKind::DegenerateFace, "face " + std::to_string(f) + " repeats a vertex");

    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      auto [it, inserted] = index.try_emplace(edge_key(a, b), static_cast<int>(c.edges.size()));
      const int e = it->second;
      if (inserted) {
        c.edges.push_back({std::min(a, b), std::max(a, b)});
        c.edge_faces.push_back({static_cast<int>(f), kMissing});
      } else {
        auto& inc = c.edge_faces[e];
        if (inc[1] != kMissing)
          throw Error(ErrorKind::NonManifoldEdge, "edge (" + std::to_string(a) + "," +
                                                      std::to_string(b) + ") has more than 2 faces");
        inc[1] = static_cast<int>(f);
      }
      face_edges[f][k] = e;
    }
  }

  const std::size_t n = c.edges.size();
  c.edge_neighbors.assign(n, {kMissing, kMissing, kMissing, kMissing});
  c.sides.assign(n, {kMissing, kMissing, kMissing, kMissing});
  c.boundary.assign(n, 0);

  auto local_index = [&](int f, int e) {
    for (int k = 0; k < 3; ++k)
      if (face_edges[f][k] == e) return k;
    return kMissing;
  };

  for (std::size_t e = 0; e < n; ++e) {
    for (int h = 0; h < 2; ++h) {
      const int f = c.edge_faces[e][h];
      if (f == kMissing) continue;
      const int k = local_index(f, static_cast<int>(e));
      c.edge_neighbors[e][2 * h] = face_edges[f][(k + 1) % 3];
      c.edge_neighbors[e][2 * h + 1] = face_edges[f][(k + 2) % 3];
    }
    c.boundary[e] = c.edge_faces[e][1] == kMissing ? 1 : 0;
  }

  // The slot e occupies in a neighbor's list is found through their shared face.
  for (std::size_t e = 0; e < n; ++e) {
    for (int j = 0; j < 4; ++j) {
      const int nb = c.edge_neighbors[e][j];
      if (nb == kMissing) continue;
      const int f = c.edge_faces[e][j / 2];
      const int h = c.edge_faces[nb][0] == f ? 0 : 1;
      const int slot = c.edge_neighbors[nb][2 * h] == static_cast<int>(e) ? 2 * h : 2 * h + 1;
      c.sides[e][j] = slot;
    }
  }
  return c;
}

Mesh::Mesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  conn_ = build_connectivity(faces_, vertices_.size());
  real_edges_ = conn_.edges.size();
}

std::size_t Mesh::boundary_edge_count() const {
  std::size_t count = 0;
  for (auto b : conn_.boundary) count += b;
  return count;
}

Vec3 Mesh::edge_midpoint(std::size_t e) const {
  if (is_padding(e)) return Vec3::Zero();
  const auto& ev = conn_.edges[e];
  return 0.5 * (vertices_[ev[0]] + vertices_[ev[1]]);
}

Mesh Mesh::with_vertices(std::vector<Vec3> vertices) const {
  if (vertices.size() != vertices_.size())
    throw Error(ErrorKind::ShapeMismatch, "vertex count changed from " +
                                              std::to_string(vertices_.size()) + " to " +
                                              std::to_string(vertices.size()));
  Mesh out = *this;
  out.vertices_ = std::move(vertices);
  return out;
}

Mesh Mesh::padded_to(std::size_t total) const {
  if (total < edge_count())
    throw Error(ErrorKind::EdgeCountMismatch, "mesh has " + std::to_string(edge_count()) +
                                                  " edges, more than the requested " +
                                                  std::to_string(total));
  Mesh out = *this;
  const std::size_t extra = total - edge_count();
  out.conn_.edges.insert(out.conn_.edges.end(), extra, {kMissing, kMissing});
  out.conn_.edge_neighbors.insert(out.conn_.edge_neighbors.end(), extra,
                                  {kMissing, kMissing, kMissing, kMissing});
  out.conn_.sides.insert(out.conn_.sides.end(), extra, {kMissing, kMissing, kMissing, kMissing});
  out.conn_.boundary.insert(out.conn_.boundary.end(), extra, 0);
  out.conn_.edge_faces.insert(out.conn_.edge_faces.end(), extra, {kMissing, kMissing});
  return out;
}

namespace {

int parse_face_index(std::string_view token, std::size_t vertices_so_far, std::size_t line_no) {
  token = token.substr(0, token.find('/'));
  long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw Error(ErrorKind::IoError, "line " + std::to_string(line_no) + ": bad face index '" +
                                        std::string(token) + "'");
  // Negative indices count back from the most recent vertex.
  if (value < 0) value = static_cast<long>(vertices_so_far) + value + 1;
  return static_cast<int>(value - 1);
}

}  // namespace

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());

  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::set<std::string> warned;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw Error(ErrorKind::IoError, "line " + std::to_string(line_no) + ": bad vertex record");
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) idx.push_back(parse_face_index(tok, vertices.size(), line_no));
      if (idx.size() != 3)
        throw Error(ErrorKind::NonTriangleFace, "line " + std::to_string(line_no) + " has " +
                                                    std::to_string(idx.size()) + " vertices");
      faces.push_back({idx[0], idx[1], idx[2]});
    } else if (warned.insert(tag).second) {
      std::cerr << "warning: " << path.string() << ": skipping '" << tag << "' records\n";
    }
  }
  if (vertices.empty() || faces.empty())
    throw Error(ErrorKind::EmptyMesh, path.string() + " has no vertices or no faces");
  for (const Face& f : faces)
    for (int v : f)
      if (v < 0 || static_cast<std::size_t>(v) >= vertices.size())
        throw Error(ErrorKind::VertexIndexOutOfRange,
                    "face index " + std::to_string(v + 1) + " with " +
                        std::to_string(vertices.size()) + " vertices");
  return Mesh(std::move(vertices), std::move(faces));
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  char buf[128];
  for (const Vec3& v : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const Face& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

}  // namespace medmesh

#include "medmesh/pool.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_map>

#include "medmesh/error.hpp"

namespace medmesh {

std::vector<double> edge_norms(const FeatureMap& x) {
  std::vector<double> norms(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index e = 0; e < x.cols(); ++e) norms[e] = x.col(e).norm();
  return norms;
}

std::vector<int> collapse_priority(const FeatureMap& x) {
  const std::vector<double> norms = edge_norms(x);
  std::vector<int> order(norms.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return norms[a] != norms[b] ? norms[a] < norms[b] : a < b;
  });
  return order;
}

namespace {

// Mutable copy of a mesh's real edges that supports in-place collapses.
// Edge ids stay those of the pre-pool mesh; removed edges are marked dead.
class CollapseWorkspace {
 public:
  explicit CollapseWorkspace(const Mesh& mesh)
      : positions_(mesh.vertices()),
        faces_(mesh.faces()),
        face_alive_(mesh.face_count(), 1),
        edge_verts_(mesh.edges().begin(), mesh.edges().begin() + mesh.real_edge_count()),
        edge_faces_(mesh.edge_faces().begin(), mesh.edge_faces().begin() + mesh.real_edge_count()),
        edge_alive_(mesh.real_edge_count(), 1),
        vertex_edges_(mesh.vertex_count()),
        members_(mesh.real_edge_count()),
        alive_edges_(mesh.real_edge_count()) {
    for (std::size_t e = 0; e < edge_verts_.size(); ++e) {
      const auto [a, b] = edge_verts_[e];
      lookup_.emplace(edge_key(a, b), static_cast<int>(e));
      vertex_edges_[a].push_back(static_cast<int>(e));
      vertex_edges_[b].push_back(static_cast<int>(e));
      members_[e] = {static_cast<int>(e)};
    }
  }

  std::size_t alive_edges() const { return alive_edges_; }

  bool try_collapse(int e) {
    if (!edge_alive_[e] || is_boundary_edge(e)) return false;
    const int u = edge_verts_[e][0];
    const int v = edge_verts_[e][1];
    const int f1 = edge_faces_[e][0];
    const int f2 = edge_faces_[e][1];
    const int a = opposite(f1, u, v);
    const int b = opposite(f2, u, v);
    if (a == b) return false;

    const int ua = find_edge(u, a), va = find_edge(v, a);
    const int ub = find_edge(u, b), vb = find_edge(v, b);
    for (int s : {ua, va, ub, vb})
      if (is_boundary_edge(s)) return false;
    if (is_boundary_vertex(u) && is_boundary_vertex(v)) return false;
    if (!link_condition(u, v, a, b)) return false;

    // Faces around v other than f1/f2 get v renamed to u.
    std::vector<int> v_faces;
    for (int ve : vertex_edges_[v])
      for (int f : edge_faces_[ve])
        if (f != kMissing && f != f1 && f != f2) v_faces.push_back(f);
    std::sort(v_faces.begin(), v_faces.end());
    v_faces.erase(std::unique(v_faces.begin(), v_faces.end()), v_faces.end());

    // Each fused pair keeps the lower edge id; the collapsed edge's members
    // join the pair whose kept id is lower. Neither choice depends on which
    // endpoint is called u.
    const int keep_a = std::min(ua, va), gone_a = std::max(ua, va);
    const int keep_b = std::min(ub, vb), gone_b = std::max(ub, vb);
    fuse(keep_a, gone_a, f1);
    fuse(keep_b, gone_b, f2);
    absorb(std::min(keep_a, keep_b), e);

    face_alive_[f1] = face_alive_[f2] = 0;
    for (int dead : {e, gone_a, gone_b}) kill_edge(dead);

    for (int ve : vertex_edges_[v]) {
      auto& ends = edge_verts_[ve];
      lookup_.erase(edge_key(ends[0], ends[1]));
      const int other = ends[0] == v ? ends[1] : ends[0];
      ends = {std::min(u, other), std::max(u, other)};
      lookup_.emplace(edge_key(u, other), ve);
      vertex_edges_[u].push_back(ve);
    }
    vertex_edges_[v].clear();
    for (int f : v_faces)
      for (int& fv : faces_[f])
        if (fv == v) fv = u;

    positions_[u] = 0.5 * (positions_[u] + positions_[v]);
    alive_edges_ -= 3;
    return true;
  }

  struct Output {
    Mesh mesh;
    std::vector<std::vector<int>> groups;  // per pooled real edge
  };

  Output finish() const {
    std::vector<int> new_index(positions_.size(), kMissing);
    std::vector<int> old_index;
    std::vector<Face> faces;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      if (!face_alive_[f]) continue;
      Face tri = faces_[f];
      for (int& v : tri) {
        if (new_index[v] == kMissing) {
          new_index[v] = static_cast<int>(old_index.size());
          old_index.push_back(v);
        }
        v = new_index[v];
      }
      faces.push_back(tri);
    }
    // Vertex order follows first use in the surviving faces.
    std::vector<Vec3> vertices(old_index.size());
    for (std::size_t i = 0; i < old_index.size(); ++i) vertices[i] = positions_[old_index[i]];

    Output out{Mesh(std::move(vertices), std::move(faces)), {}};
    out.groups.reserve(out.mesh.edge_count());
    for (const EdgeVerts& ev : out.mesh.edges()) {
      const int survivor = lookup_.at(edge_key(old_index[ev[0]], old_index[ev[1]]));
      out.groups.push_back(members_[survivor]);
    }
    return out;
  }

 private:
  bool is_boundary_edge(int e) const { return edge_faces_[e][1] == kMissing; }

  bool is_boundary_vertex(int v) const {
    return std::any_of(vertex_edges_[v].begin(), vertex_edges_[v].end(),
                       [&](int e) { return is_boundary_edge(e); });
  }

  int opposite(int f, int u, int v) const {
    for (int x : faces_[f])
      if (x != u && x != v) return x;
    return kMissing;
  }

  int find_edge(int a, int b) const {
    auto it = lookup_.find(edge_key(a, b));
    return it == lookup_.end() ? kMissing : it->second;
  }

  int other_end(int e, int v) const {
    return edge_verts_[e][0] == v ? edge_verts_[e][1] : edge_verts_[e][0];
  }

  // Lk(u) and Lk(v) may share only the vertices a and b, and not the edge ab.
  bool link_condition(int u, int v, int a, int b) const {
    std::vector<int> nu, nv;
    for (int e : vertex_edges_[u]) nu.push_back(other_end(e, u));
    for (int e : vertex_edges_[v]) nv.push_back(other_end(e, v));
    std::sort(nu.begin(), nu.end());
    std::sort(nv.begin(), nv.end());
    std::vector<int> common;
    std::set_intersection(nu.begin(), nu.end(), nv.begin(), nv.end(), std::back_inserter(common));
    if (common.size() != 2) return false;
    if (!((common[0] == a && common[1] == b) || (common[0] == b && common[1] == a))) return false;

    const int ab = find_edge(a, b);
    if (ab == kMissing) return true;
    bool with_u = false, with_v = false;
    for (int f : edge_faces_[ab]) {
      if (f == kMissing) continue;
      for (int x : faces_[f]) {
        with_u |= x == u;
        with_v |= x == v;
      }
    }
    return !(with_u && with_v);
  }

  // `gone` merges into `keep`; both bordered `face`, which disappears.
  void fuse(int keep, int gone, int face) {
    const int keep_other = edge_faces_[keep][0] == face ? edge_faces_[keep][1] : edge_faces_[keep][0];
    const int gone_other = edge_faces_[gone][0] == face ? edge_faces_[gone][1] : edge_faces_[gone][0];
    edge_faces_[keep] = {keep_other, gone_other};
    absorb(keep, gone);
  }

  void absorb(int keep, int gone) {
    auto& dst = members_[keep];
    auto& src = members_[gone];
    dst.insert(dst.end(), src.begin(), src.end());
    src.clear();
  }

  void kill_edge(int e) {
    edge_alive_[e] = 0;
    const auto [a, b] = edge_verts_[e];
    lookup_.erase(edge_key(a, b));
    for (int end : {a, b}) {
      auto& list = vertex_edges_[end];
      list.erase(std::remove(list.begin(), list.end(), e), list.end());
    }
  }

  std::vector<Vec3> positions_;
  std::vector<Face> faces_;
  std::vector<std::uint8_t> face_alive_;
  std::vector<EdgeVerts> edge_verts_;
  std::vector<std::array<int, 2>> edge_faces_;
  std::vector<std::uint8_t> edge_alive_;
  std::vector<std::vector<int>> vertex_edges_;
  std::vector<std::vector<int>> members_;
  std::unordered_map<std::uint64_t, int> lookup_;
  std::size_t alive_edges_;
};

}  // namespace

PoolResult mesh_pool(const Mesh& mesh, const FeatureMap& x, std::size_t target_edges) {
  if (static_cast<std::size_t>(x.cols()) != mesh.edge_count())
    throw Error(ErrorKind::EdgeCountMismatch, "feature map has " + std::to_string(x.cols()) +
                                                  " edges, mesh has " +
                                                  std::to_string(mesh.edge_count()));
  if (target_edges >= mesh.edge_count())
    throw Error(ErrorKind::TargetNotBelowCurrent, "target " + std::to_string(target_edges) +
                                                      " is not below " +
                                                      std::to_string(mesh.edge_count()));

  const std::vector<double> norms = edge_norms(x);
  const std::vector<int> order = collapse_priority(x);

  CollapseWorkspace ws(mesh);
  PoolHistory history;
  for (int e : order) {
    if (ws.alive_edges() <= target_edges) break;
    if (mesh.is_padding(e)) continue;
    if (ws.try_collapse(e)) {
      history.collapsed_edges.push_back(e);
      history.collapsed_priorities.push_back(norms[e]);
    }
  }
  if (ws.alive_edges() > target_edges) throw PoolTargetUnreachable(target_edges, ws.alive_edges());

  auto [pooled, groups] = ws.finish();
  std::vector<Triplet> triplets;
  triplets.reserve(mesh.real_edge_count());
  for (std::size_t r = 0; r < groups.size(); ++r) {
    const double w = 1.0 / static_cast<double>(groups[r].size());
    for (int c : groups[r]) triplets.push_back({static_cast<int>(r), c, w});
  }

  history.pre_pool_edge_count = mesh.edge_count();
  history.groups = SparseMatrix(target_edges, mesh.edge_count(), std::move(triplets));
  history.membership = history.groups.indicator();
  history.pre_pool_mesh = std::make_shared<const Mesh>(mesh);

  PoolResult result;
  result.mesh = pooled.padded_to(target_edges);
  result.features = sparse_apply(history.groups, x);
  result.history = std::move(history);
  return result;
}

FeatureMap mesh_unpool(const FeatureMap& x, const PoolHistory& h) {
  if (static_cast<std::size_t>(x.cols()) != h.groups.rows())
    throw Error(ErrorKind::HistoryMismatch, "feature map has " + std::to_string(x.cols()) +
                                                " edges, history pooled to " +
                                                std::to_string(h.groups.rows()));
  return sparse_apply_transpose(h.membership, x);
}

FeatureMap mesh_pool_backward(const FeatureMap& upstream, const PoolHistory& h) {
  if (static_cast<std::size_t>(upstream.cols()) != h.groups.rows())
    throw Error(ErrorKind::HistoryMismatch, "pool gradient does not match the pooled edge count");
  return sparse_apply_transpose(h.groups, upstream);
}

FeatureMap mesh_unpool_backward(const FeatureMap& upstream, const PoolHistory& h) {
  if (static_cast<std::size_t>(upstream.cols()) != h.pre_pool_edge_count)
    throw Error(ErrorKind::HistoryMismatch, "unpool gradient does not match the pre-pool edge count");
  return sparse_apply(h.membership, upstream);
}

PoolMemoryReport pool_memory_report(std::size_t edge_count, const PoolHistory& history) {
  PoolMemoryReport r;
  r.edge_count = edge_count;
  r.dense_elements = history.groups.rows() * history.groups.cols();
  r.sparse_nonzeros = history.groups.nonzeros();
  if (r.sparse_nonzeros > 0)
    r.ratio = static_cast<double>(r.dense_elements) / static_cast<double>(r.sparse_nonzeros);
  return r;
}

}  // namespace medmesh

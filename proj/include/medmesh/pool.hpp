#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "medmesh/mesh.hpp"
#include "medmesh/sparse.hpp"

namespace medmesh {

/// Everything one pooling layer needs to be undone.
struct PoolHistory {
  std::size_t pre_pool_edge_count = 0;
  // pooled edges x pre-pool edges; row r averages the pre-pool edges fused
  // into pooled edge r. Padding rows are empty.
  SparseMatrix groups;
  // Same pattern with unit weights, used to expand pooled features back.
  SparseMatrix membership;
  std::shared_ptr<const Mesh> pre_pool_mesh;
  // Collapsed pre-pool edge ids and their priorities, in collapse order.
  std::vector<int> collapsed_edges;
  std::vector<double> collapsed_priorities;
};

struct PoolResult {
  Mesh mesh;
  FeatureMap features;
  PoolHistory history;
};

/// Per-edge L2 norm over channels.
std::vector<double> edge_norms(const FeatureMap& x);

/// Edge ids sorted ascending by L2 feature norm, ties by lower id.
std::vector<int> collapse_priority(const FeatureMap& x);

/// Edge-collapse pooling down to exactly `target_edges` edges.
///
/// Walks the frozen priority order once and collapses every legal edge
/// until the edge count reaches the target. A collapse merges the edge's
/// two triangles, fusing each triangle's side edges, so five edges become
/// two. Legal means: the edge and its four side edges are interior, its
/// endpoints are not both on a boundary, and the link condition holds.
/// Input padding edges are dropped; if the last collapse overshoots the
/// target by one or two edges, padding edges make up the difference.
///
/// Throws PoolTargetUnreachable if the queue runs dry first.
PoolResult mesh_pool(const Mesh& mesh, const FeatureMap& x, std::size_t target_edges);

/// Expands pooled features to the pre-pool edges: each edge takes its group's value.
FeatureMap mesh_unpool(const FeatureMap& x, const PoolHistory& h);

/// Gradient of mesh_pool's feature output with respect to its input.
FeatureMap mesh_pool_backward(const FeatureMap& upstream, const PoolHistory& h);

/// Gradient of mesh_unpool: sums upstream gradients over each group.
FeatureMap mesh_unpool_backward(const FeatureMap& upstream, const PoolHistory& h);

struct PoolMemoryReport {
  std::size_t edge_count = 0;
  std::size_t dense_elements = 0;
  std::size_t sparse_nonzeros = 0;
  // Dense-to-sparse ratio; empty when the history holds no entries.
  std::optional<double> ratio;
};

PoolMemoryReport pool_memory_report(std::size_t edge_count, const PoolHistory& history);

}  // namespace medmesh

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "medmesh/mesh.hpp"

namespace medmesh {

/// Squared Euclidean distance, evaluated the same way everywhere so that
/// tree search and linear scans agree bit for bit.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

struct Neighbor {
  std::size_t index = 0;
  double squared_distance = 0.0;
};

/// Balanced 3-d tree with median splits, axis cycling x, y, z.
///
/// Stored implicitly: the subtree over order_[lo, hi) has its split point at
/// (lo + hi) / 2. Queries are exact; among equidistant points the lowest
/// index wins.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  Neighbor nearest(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }
  std::size_t depth() const;
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  void build(std::size_t lo, std::size_t hi, int axis);
  void search(std::size_t lo, std::size_t hi, int axis, const Vec3& q, Neighbor& best) const;

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
};

/// Reference answer for tests: linear scan with the same tie rule.
Neighbor nearest_linear(std::span<const Vec3> points, const Vec3& query);

}  // namespace medmesh

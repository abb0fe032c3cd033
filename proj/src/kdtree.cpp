#include "medmesh/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "medmesh/error.hpp"

namespace medmesh {

namespace {

inline bool better(double d, std::size_t i, const Neighbor& best) {
  return d < best.squared_distance || (d == best.squared_distance && i < best.index);
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.empty()) throw Error(ErrorKind::EmptyPointSet, "k-d tree needs at least one point");
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (!points_[i].allFinite())
      throw Error(ErrorKind::NonFinitePoint, "point " + std::to_string(i) + " is not finite");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  build(0, order_.size(), 0);
}

void KdTree::build(std::size_t lo, std::size_t hi, int axis) {
  if (hi - lo <= 1) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                   [&](std::size_t a, std::size_t b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa != pb ? pa < pb : a < b;
                   });
  const int next = (axis + 1) % 3;
  build(lo, mid, next);
  build(mid + 1, hi, next);
}

std::size_t KdTree::depth() const {
  std::size_t d = 0;
  for (std::size_t n = order_.size(); n > 0; n /= 2) ++d;
  return d;
}

Neighbor KdTree::nearest(const Vec3& query) const {
  Neighbor best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  search(0, order_.size(), 0, query, best);
  return best;
}

void KdTree::search(std::size_t lo, std::size_t hi, int axis, const Vec3& q, Neighbor& best) const {
  if (lo >= hi) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  const std::size_t idx = order_[mid];
  const double d = squared_distance(points_[idx], q);
  if (better(d, idx, best)) best = {idx, d};

  const double diff = q[axis] - points_[idx][axis];
  const int next = (axis + 1) % 3;
  const bool left_first = diff <= 0.0;
  if (left_first)
    search(lo, mid, next, q, best);
  else
    search(mid + 1, hi, next, q, best);
  // Points across the plane are at least |diff| away; equality is kept for the tie rule.
  if (diff * diff <= best.squared_distance) {
    if (left_first)
      search(mid + 1, hi, next, q, best);
    else
      search(lo, mid, next, q, best);
  }
}

Neighbor nearest_linear(std::span<const Vec3> points, const Vec3& query) {
  if (points.empty()) throw Error(ErrorKind::EmptyPointSet, "no points to scan");
  Neighbor best{0, squared_distance(points[0], query)};
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = squared_distance(points[i], query);
    if (better(d, i, best)) best = {i, d};
  }
  return best;
}

}  // namespace medmesh

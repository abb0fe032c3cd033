#pragma once

// Shared fixtures and oracles for the unit and acceptance tests.

#include <unistd.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "medmesh/error.hpp"
#include "medmesh/mesh.hpp"
#include "medmesh/synth.hpp"

namespace medmesh::testing {

// The ErrorKind `f` throws, or nothing if it returns normally.
template <typename F>
std::optional<ErrorKind> thrown_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("medmesh-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p) << text;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline Mesh tetrahedron() {
  // Regular tetrahedron with unit edge length, outward winding.
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<Vec3> v = {{0.5, 0, -s / 2}, {-0.5, 0, -s / 2}, {0, 0.5, s / 2}, {0, -0.5, s / 2}};
  std::vector<Face> f = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return Mesh(std::move(v), std::move(f));
}

inline Mesh single_triangle() {
  return Mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
}

// Unit square split along the 0-2 diagonal.
inline Mesh two_triangles() {
  return Mesh({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2}, {0, 2, 3}});
}

// A synthetic tube of roughly `edges` edges, open or closed by seed parity.
inline Mesh random_mesh(std::uint64_t seed, std::size_t edges) {
  return synth::generate(synth::random_spec(seed, std::max<std::size_t>(edges, 200), seed % 2 == 0)).mesh;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline FeatureMap random_map(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  FeatureMap m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

// Central finite differences of a scalar function over every entry of `x`.
inline Eigen::MatrixXd numeric_gradient(Eigen::MatrixXd& x, const std::function<double()>& f,
                                        double step = 1e-5) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double keep = x(i, j);
      x(i, j) = keep + step;
      const double up = f();
      x(i, j) = keep - step;
      const double down = f();
      x(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * step);
    }
  return g;
}

// max |a - b| / max(|a|, |b|, floor) over all entries. The floor keeps
// round-off on entries that are zero in exact arithmetic from dominating.
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor = 1e-3) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double scale = std::max({std::abs(a(i, j)), std::abs(b(i, j)), floor});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / scale);
    }
  return worst;
}

// Frobenius-style: ||a - b|| / max(||a||, ||b||). Less sensitive to tiny entries.
inline double relative_norm_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

}  // namespace medmesh::testing

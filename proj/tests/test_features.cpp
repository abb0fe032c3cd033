#include <doctest.h>

#include <numbers>

#include "medmesh/features.hpp"
#include "support.hpp"

using namespace medmesh;
using namespace medmesh::testing;

TEST_CASE("regular tetrahedron features") {
  const FeatureMap x = extract_edge_features(tetrahedron());
  REQUIRE(x.rows() == kInputChannels);
  REQUIRE(x.cols() == 6);
  const double pi = std::numbers::pi;
  for (Eigen::Index e = 0; e < 6; ++e) {
    CHECK(x(0, e) == doctest::Approx(std::acos(-1.0 / 3.0)).epsilon(1e-12));
    CHECK(x(0, e) == doctest::Approx(1.910633).epsilon(1e-6));
    CHECK(x(1, e) == doctest::Approx(pi / 3).epsilon(1e-12));
    CHECK(x(2, e) == doctest::Approx(pi / 3).epsilon(1e-12));
    CHECK(x(3, e) == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(x(4, e) == doctest::Approx(1.154701).epsilon(1e-6));
  }
}

TEST_CASE("boundary edges use zero for the missing side") {
  const FeatureMap x = extract_edge_features(single_triangle());
  for (Eigen::Index e = 0; e < 3; ++e) {
    CHECK(x(0, e) == 0.0);
    CHECK(x(1, e) == 0.0);
    CHECK(x(2, e) > 0.0);
    CHECK(x(3, e) == 0.0);
    CHECK(x(4, e) > 0.0);
  }
  // Hypotenuse of the right isosceles triangle: opposite angle pi/2, ratio sqrt2 / (sqrt2 / 2) = 2.
  CHECK(x(2, 1) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(x(4, 1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("flat interior edge has zero dihedral") {
  const FeatureMap x = extract_edge_features(two_triangles());
  CHECK(std::abs(x(0, 2)) < 1e-12);
  CHECK(x(1, 2) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(x(2, 2) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
}

TEST_CASE("degenerate geometry is rejected") {
  const Mesh zero_area({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}});
  CHECK(thrown_kind([&] { extract_edge_features(zero_area); }) == ErrorKind::DegenerateGeometry);
  const Mesh zero_length({{0, 0, 0}, {0, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
  CHECK(thrown_kind([&] { extract_edge_features(zero_length); }) == ErrorKind::DegenerateGeometry);
}

TEST_CASE("tetrahedron after rotation, translation and scale by 7") {
  std::mt19937_64 rng(11);
  const Mesh m = tetrahedron();
  std::vector<Vec3> p = m.vertices();
  const Eigen::Matrix3d r = random_rotation(rng);
  for (Vec3& v : p) v = 7.0 * (r * v) + Vec3(3, -2, 5);
  const FeatureMap a = extract_edge_features(m);
  const FeatureMap b = extract_edge_features(m.with_vertices(p));
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("property: similarity invariance on random meshes") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-50.0, 50.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Mesh m = random_mesh(seed, 600);
    const FeatureMap base = extract_edge_features(m);
    CHECK(base.allFinite());
    for (int t = 0; t < 5; ++t) {
      const Eigen::Matrix3d r = random_rotation(rng);
      const double s = scale(rng);
      const Vec3 d(shift(rng), shift(rng), shift(rng));
      std::vector<Vec3> p = m.vertices();
      for (Vec3& v : p) v = s * (r * v) + d;
      CHECK((extract_edge_features(m.with_vertices(p)) - base).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("property: feature ranges") {
  const FeatureMap x = extract_edge_features(random_mesh(3, 1200));
  const double pi = std::numbers::pi;
  CHECK(x.row(0).minCoeff() >= 0.0);
  CHECK(x.row(0).maxCoeff() <= pi);
  CHECK((x.row(1).array() <= x.row(2).array()).all());
  CHECK((x.row(3).array() <= x.row(4).array()).all());
  CHECK(x.row(2).maxCoeff() < pi);
}

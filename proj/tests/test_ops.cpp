#include <doctest.h>

#include <unordered_map>

#include "medmesh/features.hpp"
#include "medmesh/ops.hpp"
#include "support.hpp"

using namespace medmesh;
using namespace medmesh::ops;
using namespace medmesh::testing;

namespace {

constexpr double kStep = 1e-5;
constexpr double kOpTolerance = 1e-4;

ConvKernel random_kernel(std::mt19937_64& rng, int in, int out) {
  ConvKernel k = ConvKernel::zeros(in, out);
  k.weights = random_map(rng, out, in * kKernelTaps, 0.5);
  k.bias = random_map(rng, out, 1, 0.5);
  return k;
}

// Direct per-edge evaluation of the symmetric convolution.
FeatureMap conv_oracle(const FeatureMap& x, const Mesh& m, const ConvKernel& k) {
  FeatureMap y(k.out_channels, x.cols());
  for (Eigen::Index e = 0; e < x.cols(); ++e) {
    auto nb = [&](int slot, Eigen::Index c) {
      const int n = m.edge_neighbors()[e][slot];
      return n == kMissing ? 0.0 : x(c, n);
    };
    for (int o = 0; o < k.out_channels; ++o) {
      double s = k.bias(o);
      for (int c = 0; c < k.in_channels; ++c) {
        const double a = nb(0, c), b = nb(1, c), cc = nb(2, c), d = nb(3, c);
        const double taps[5] = {x(c, e), std::abs(a - cc), a + cc, std::abs(b - d), b + d};
        for (int t = 0; t < 5; ++t) s += k.weight(o, c, t) * taps[t];
      }
      y(o, e) = s;
    }
  }
  return y;
}

double dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a.array() * b.array()).sum(); }

}  // namespace

TEST_CASE("conv: identity slot reproduces the input") {
  const Mesh m = two_triangles();
  std::mt19937_64 rng(1);
  const FeatureMap x = random_map(rng, 1, 5);
  ConvKernel k = ConvKernel::zeros(1, 1);
  k.weight(0, 0, 0) = 1.0;
  CHECK(mesh_conv_forward(x, m, k) == x);
}

TEST_CASE("conv: hand-evaluated all-ones kernel gives 19") {
  // Edge 2 of the two-triangle mesh has neighbors (a, b, c, d) = edges (0, 1, 3, 4).
  const Mesh m = two_triangles();
  FeatureMap x(1, 5);
  x << 2, 1, 5, 4, 3;
  ConvKernel k = ConvKernel::zeros(1, 1);
  k.weights.setOnes();
  CHECK(mesh_conv_forward(x, m, k)(0, 2) == 19.0);
}

TEST_CASE("conv matches the direct oracle, including padding edges") {
  std::mt19937_64 rng(2);
  const Mesh m = random_mesh(4, 400).padded_to(420);
  const FeatureMap x = random_map(rng, 3, 420);
  const ConvKernel k = random_kernel(rng, 3, 4);
  CHECK((mesh_conv_forward(x, m, k) - conv_oracle(x, m, k)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("conv shape errors") {
  const Mesh m = two_triangles();
  const ConvKernel k = ConvKernel::zeros(2, 1);
  CHECK(thrown_kind([&] { mesh_conv_forward(FeatureMap::Zero(3, 5), m, k); }) == ErrorKind::ChannelMismatch);
  CHECK(thrown_kind([&] { mesh_conv_forward(FeatureMap::Zero(2, 6), m, k); }) == ErrorKind::EdgeCountMismatch);
}

TEST_CASE("property: conv is invariant to swapping the two face sides") {
  // Reversing the face order swaps which face is discovered first for every
  // interior edge, so (a, b, c, d) becomes (c, d, a, b).
  std::mt19937_64 rng(3);
  const Mesh m = random_mesh(6, 500);
  std::vector<Face> reversed(m.faces().rbegin(), m.faces().rend());
  const Mesh r(m.vertices(), reversed);
  REQUIRE(r.edge_count() == m.edge_count());
  std::unordered_map<std::uint64_t, Eigen::Index> where;
  for (std::size_t e = 0; e < r.edge_count(); ++e)
    where[edge_key(r.edges()[e][0], r.edges()[e][1])] = static_cast<Eigen::Index>(e);
  const FeatureMap x = random_map(rng, 2, m.edge_count());
  FeatureMap xr(2, m.edge_count());
  for (std::size_t e = 0; e < m.edge_count(); ++e)
    xr.col(where.at(edge_key(m.edges()[e][0], m.edges()[e][1]))) = x.col(e);
  const ConvKernel k = random_kernel(rng, 2, 3);
  const FeatureMap y = mesh_conv_forward(x, m, k), yr = mesh_conv_forward(xr, r, k);
  double worst = 0.0;
  for (std::size_t e = 0; e < m.edge_count(); ++e)
    worst = std::max(worst, (y.col(e) - yr.col(where.at(edge_key(m.edges()[e][0], m.edges()[e][1])))).cwiseAbs().maxCoeff());
  CHECK(worst <= 1e-12);
}

TEST_CASE("property: conv is linear in its weights when bias is zero") {
  std::mt19937_64 rng(4);
  const Mesh m = random_mesh(8, 300);
  const FeatureMap x = random_map(rng, 3, m.edge_count());
  ConvKernel k = random_kernel(rng, 3, 2);
  k.bias.setZero();
  ConvKernel k2 = k;
  k2.weights *= 2.5;
  CHECK((mesh_conv_forward(x, m, k2) - 2.5 * mesh_conv_forward(x, m, k)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("conv backward: zero upstream, tie rule, finite differences") {
  std::mt19937_64 rng(5);
  SUBCASE("zero upstream gives zero gradients") {
    const Mesh m = tetrahedron();
    const FeatureMap x = random_map(rng, 2, 6);
    const ConvKernel k = random_kernel(rng, 2, 3);
    ConvCache cache;
    mesh_conv_forward(x, m, k, &cache);
    const ConvGrads g = mesh_conv_backward(FeatureMap::Zero(3, 6), m, k, cache);
    CHECK(g.kernel.weights.isZero(0.0));
    CHECK(g.kernel.bias.isZero(0.0));
    CHECK(g.input.isZero(0.0));
  }
  SUBCASE("|a - c| at a = c has zero derivative") {
    const Mesh m = two_triangles();
    FeatureMap x(1, 5);
    x << 2, 1, 5, 2, 3;  // a = edge 0 = 2, c = edge 3 = 2 for edge 2
    ConvKernel k = ConvKernel::zeros(1, 1);
    k.weight(0, 0, 1) = 1.0;
    ConvCache cache;
    mesh_conv_forward(x, m, k, &cache);
    FeatureMap up = FeatureMap::Zero(1, 5);
    up(0, 2) = 1.0;
    CHECK(mesh_conv_backward(up, m, k, cache).input.isZero(0.0));
  }
  SUBCASE("finite differences on the tetrahedron and a boundary mesh") {
    for (const Mesh& m : {tetrahedron(), random_mesh(10, 200).padded_to(240)}) {
      const auto E = static_cast<Eigen::Index>(m.edge_count());
      FeatureMap x = random_map(rng, 2, E);
      ConvKernel k = random_kernel(rng, 2, 3);
      const FeatureMap r = random_map(rng, 3, E);
      auto loss = [&] { return dot(mesh_conv_forward(x, m, k), r); };
      ConvCache cache;
      mesh_conv_forward(x, m, k, &cache);
      const ConvGrads g = mesh_conv_backward(r, m, k, cache);
      CHECK(relative_error(g.input, numeric_gradient(x, loss, kStep)) <= kOpTolerance);
      CHECK(relative_error(g.kernel.weights, numeric_gradient(k.weights, loss, kStep)) <= kOpTolerance);
      Eigen::MatrixXd bias = k.bias;
      auto bias_loss = [&] {
        ConvKernel kb = k;
        kb.bias = bias;
        return dot(mesh_conv_forward(x, m, kb), r);
      };
      CHECK(relative_error(g.kernel.bias, numeric_gradient(bias, bias_loss, kStep)) <= kOpTolerance);
    }
  }
}

TEST_CASE("relu") {
  FeatureMap x(1, 3);
  x << -1, 0, 2;
  FeatureMap expected(1, 3);
  expected << 0, 0, 2;
  const FeatureMap y = relu_forward(x);
  CHECK(y == expected);
  FeatureMap up(1, 3);
  up << 5, 6, 7;
  FeatureMap g(1, 3);
  g << 0, 0, 7;
  CHECK(relu_backward(up, y) == g);

  std::mt19937_64 rng(6);
  FeatureMap z = random_map(rng, 3, 20);
  for (double& v : z.reshaped()) v += v > 0 ? 0.1 : -0.1;  // stay clear of the kink
  const FeatureMap r = random_map(rng, 3, 20);
  auto loss = [&] { return dot(relu_forward(z), r); };
  CHECK(relative_error(relu_backward(r, relu_forward(z)), numeric_gradient(z, loss, kStep)) <= kOpTolerance);
}

TEST_CASE("norm forward") {
  SUBCASE("constant channel normalizes to zero") {
    FeatureMap x = FeatureMap::Constant(2, 7, 3.5);
    x.row(1).setLinSpaced(7, 0, 6);
    const FeatureMap y = norm_forward(x, 7, NormParams::identity(2), Mode::Train);
    CHECK(y.row(0).isZero(0.0));
    CHECK(std::abs(y.row(1).mean()) < 1e-12);
  }
  SUBCASE("statistics ignore padding edges but apply to them") {
    std::mt19937_64 rng(7);
    FeatureMap x = random_map(rng, 3, 12);
    NormCache cache;
    const FeatureMap y = norm_forward(x, 9, NormParams::identity(3), Mode::Train, &cache);
    const Eigen::VectorXd mean = x.leftCols(9).rowwise().mean();
    CHECK((cache.mean - mean).cwiseAbs().maxCoeff() < 1e-14);
    for (Eigen::Index c = 0; c < 3; ++c) {
      const double var = (x.row(c).leftCols(9).array() - mean(c)).square().mean();
      for (Eigen::Index e = 0; e < 12; ++e)
        CHECK(y(c, e) == doctest::Approx((x(c, e) - mean(c)) / std::sqrt(var + kNormEpsilon)).epsilon(1e-12));
    }
  }
  SUBCASE("eval mode uses running statistics") {
    NormParams p = NormParams::identity(1);
    p.running_mean << 2.0;
    p.running_var << 4.0;
    p.scale << 3.0;
    p.shift << 1.0;
    FeatureMap x(1, 2);
    x << 2.0, 4.0;
    const FeatureMap y = norm_forward(x, 2, p, Mode::Eval);
    CHECK(y(0, 0) == doctest::Approx(1.0));
    CHECK(y(0, 1) == doctest::Approx(1.0 + 3.0 * 2.0 / std::sqrt(4.0 + kNormEpsilon)));
  }
  SUBCASE("running update uses momentum and unbiased variance") {
    NormParams p = NormParams::identity(1);
    p.update_running(Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 3.0), 4);
    CHECK(p.running_mean(0) == doctest::Approx(0.2));
    CHECK(p.running_var(0) == doctest::Approx(0.9 + 0.1 * 3.0 * 4.0 / 3.0));
  }
  CHECK(thrown_kind([] { norm_forward(FeatureMap::Zero(2, 3), 3, NormParams::identity(3), Mode::Train); }) ==
        ErrorKind::ShapeMismatch);
}

TEST_CASE("norm backward vs finite differences") {
  std::mt19937_64 rng(8);
  for (std::size_t valid : {std::size_t{10}, std::size_t{7}}) {
    CAPTURE(valid);
    FeatureMap x = random_map(rng, 3, 10, 2.0);
    NormParams p = NormParams::identity(3);
    p.scale = random_map(rng, 3, 1) + Eigen::VectorXd::Constant(3, 1.5);
    p.shift = random_map(rng, 3, 1);
    const FeatureMap r = random_map(rng, 3, 10);
    auto loss = [&] { return dot(norm_forward(x, valid, p, Mode::Train), r); };
    NormCache cache;
    norm_forward(x, valid, p, Mode::Train, &cache);
    const NormGrads g = norm_backward(r, p, cache);
    CHECK(relative_error(g.input, numeric_gradient(x, loss, kStep)) <= kOpTolerance);
    Eigen::MatrixXd scale = p.scale;
    auto scale_loss = [&] {
      NormParams q = p;
      q.scale = scale;
      return dot(norm_forward(x, valid, q, Mode::Train), r);
    };
    CHECK(relative_error(g.scale, numeric_gradient(scale, scale_loss, kStep)) <= kOpTolerance);
    Eigen::MatrixXd shift = p.shift;
    auto shift_loss = [&] {
      NormParams q = p;
      q.shift = shift;
      return dot(norm_forward(x, valid, q, Mode::Train), r);
    };
    CHECK(relative_error(g.shift, numeric_gradient(shift, shift_loss, kStep)) <= kOpTolerance);
  }
}

TEST_CASE("norm backward in eval mode") {
  std::mt19937_64 rng(9);
  FeatureMap x = random_map(rng, 2, 6);
  NormParams p = NormParams::identity(2);
  p.running_mean << 0.3, -0.2;
  p.running_var << 1.7, 0.4;
  p.scale << 1.2, -0.7;
  const FeatureMap r = random_map(rng, 2, 6);
  auto loss = [&] { return dot(norm_forward(x, 6, p, Mode::Eval), r); };
  NormCache cache;
  norm_forward(x, 6, p, Mode::Eval, &cache);
  CHECK(relative_error(norm_backward(r, p, cache).input, numeric_gradient(x, loss, kStep)) <= kOpTolerance);
}

TEST_CASE("dense layer") {
  std::mt19937_64 rng(10);
  FeatureMap x = random_map(rng, 4, 9);
  Dense d{random_map(rng, 3, 4), random_map(rng, 3, 1)};
  const FeatureMap y = dense_forward(x, d);
  CHECK((y - ((d.weights * x).colwise() + d.bias)).cwiseAbs().maxCoeff() < 1e-14);
  const FeatureMap r = random_map(rng, 3, 9);
  auto loss = [&] { return dot(dense_forward(x, d), r); };
  const DenseGrads g = dense_backward(r, x, d);
  CHECK(relative_error(g.input, numeric_gradient(x, loss, kStep)) <= kOpTolerance);
  CHECK(relative_error(g.layer.weights, numeric_gradient(d.weights, loss, kStep)) <= kOpTolerance);
  CHECK(thrown_kind([&] { dense_forward(FeatureMap::Zero(5, 2), d); }) == ErrorKind::ChannelMismatch);
}

TEST_CASE("concat") {
  std::mt19937_64 rng(11);
  const FeatureMap a = random_map(rng, 2, 4), b = random_map(rng, 3, 4);
  const FeatureMap c = concat_channels(a, b);
  CHECK(c.rows() == 5);
  CHECK(c.topRows(2) == a);
  CHECK(c.bottomRows(3) == b);
  CHECK(concat_channels(a, FeatureMap(0, 4)) == a);
  CHECK(thrown_kind([&] { concat_channels(a, FeatureMap::Zero(1, 5)); }) == ErrorKind::EdgeCountMismatch);

  FeatureMap xa = a, xb = b;
  const FeatureMap r = random_map(rng, 5, 4);
  const auto [ga, gb] = concat_backward(r, 2);
  CHECK(relative_error(ga, numeric_gradient(xa, [&] { return dot(concat_channels(xa, xb), r); }, kStep)) <=
        kOpTolerance);
  CHECK(relative_error(gb, numeric_gradient(xb, [&] { return dot(concat_channels(xa, xb), r); }, kStep)) <=
        kOpTolerance);
}

#include <doctest.h>

#include "medmesh/checkpoint.hpp"
#include "medmesh/features.hpp"
#include "medmesh/net.hpp"
#include "support.hpp"

using namespace medmesh;
using namespace medmesh::testing;

namespace {

NetworkConfig tiny_config() {
  NetworkConfig c;
  c.ncf = {4, 8};
  c.pool_res = {90};
  c.ninput_edges = 120;
  c.res_blocks = 1;
  c.init_gain = 0.5;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(NetworkConfig{}.validate());
  auto invalid = [](auto edit) {
    NetworkConfig c;
    edit(c);
    return thrown_kind([&] { c.validate(); });
  };
  CHECK(invalid([](NetworkConfig& c) { c.pool_res = {9000, 9500, 2500}; }) == ErrorKind::InvalidConfig);
  CHECK(invalid([](NetworkConfig& c) { c.pool_res = {9000, 4000}; }) == ErrorKind::InvalidConfig);
  CHECK(invalid([](NetworkConfig& c) { c.pool_res = {19200, 4000, 2500}; }) == ErrorKind::InvalidConfig);
  CHECK(invalid([](NetworkConfig& c) { c.ncf = {32, 0, 128, 256}; }) == ErrorKind::InvalidConfig);
  CHECK(invalid([](NetworkConfig& c) { c.res_blocks = -1; }) == ErrorKind::InvalidConfig);
  CHECK(invalid([](NetworkConfig& c) { c.arch = "meshcnn"; }) == ErrorKind::InvalidConfig);
  CHECK(invalid([](NetworkConfig& c) { c.norm_inference = "batch"; }) == ErrorKind::InvalidConfig);
}

TEST_CASE("default network: layer layout and logits shape") {
  const NetworkConfig cfg;
  const MeshUNet net = build_meshunet(cfg, 1);
  CHECK(net.params().encoder.size() == 4);
  CHECK(net.params().decoder.size() == 3);
  CHECK(net.params().encoder.back().conv.weights.rows() == 256);
  for (const ConvBlock& b : net.params().encoder) CHECK(b.residual.size() == 3);

  const LabeledSample s = synth::generate(synth::random_spec(9, 19100, true));
  const Mesh m = s.mesh.padded_to(cfg.ninput_edges);
  SampleTrace trace;
  const FeatureMap logits = net.forward(m, extract_edge_features(m), ops::Mode::Train, &trace);
  CHECK(logits.rows() == 4);
  CHECK(logits.cols() == 19200);
  CHECK(logits.allFinite());
  REQUIRE(trace.meshes.size() == 4);
  for (std::size_t i = 1; i < 4; ++i) CHECK(trace.meshes[i].edge_count() == cfg.pool_res[i - 1]);

  CHECK(thrown_kind([&] { net.forward(s.mesh, extract_edge_features(s.mesh), ops::Mode::Train); }) ==
        ErrorKind::EdgeCountMismatch);
}

TEST_CASE("single level network: conv block and head only") {
  NetworkConfig cfg;
  cfg.ncf = {8};
  cfg.pool_res = {};
  cfg.ninput_edges = 120;
  cfg.res_blocks = 0;
  const MeshUNet net = build_meshunet(cfg, 2);
  CHECK(net.params().encoder.size() == 1);
  CHECK(net.params().decoder.empty());
  const Mesh m = synth::icosphere(1);
  SampleTrace trace;
  const FeatureMap logits = net.forward(m, extract_edge_features(m), ops::Mode::Train, &trace);
  CHECK(logits.rows() == 4);
  CHECK(logits.cols() == 120);
  CHECK(trace.pools.empty());
}

TEST_CASE("initialization: normal weights with the configured gain, zero biases") {
  NetworkConfig cfg;
  cfg.ncf = {64, 64};
  cfg.pool_res = {100};
  cfg.ninput_edges = 120;
  const MeshUNet net = build_meshunet(cfg, 3);
  const Eigen::MatrixXd& w = net.params().encoder[1].conv.weights;
  const double mean = w.mean();
  const double sd = std::sqrt((w.array() - mean).square().sum() / static_cast<double>(w.size() - 1));
  CHECK(std::abs(mean) < 0.002);
  CHECK(sd == doctest::Approx(0.02).epsilon(0.05));
  CHECK(net.params().encoder[1].conv.bias.isZero(0.0));
}

TEST_CASE("determinism: same seed, same parameters and logits") {
  const NetworkConfig cfg = tiny_config();
  const Mesh m = synth::icosphere(1);
  const FeatureMap x = extract_edge_features(m);
  const MeshUNet a = build_meshunet(cfg, 7), b = build_meshunet(cfg, 7), c = build_meshunet(cfg, 8);
  const FeatureMap la = a.forward(m, x, ops::Mode::Train);
  CHECK(la == b.forward(m, x, ops::Mode::Train));
  CHECK(la == a.forward(m, x, ops::Mode::Train));
  CHECK(la != c.forward(m, x, ops::Mode::Train));
}

TEST_CASE("inference statistics") {
  NetworkConfig cfg = tiny_config();
  const Mesh m = synth::icosphere(1);
  const FeatureMap x = extract_edge_features(m);
  const MeshUNet sample_stats = build_meshunet(cfg, 4);
  CHECK(sample_stats.forward(m, x, ops::Mode::Eval) == sample_stats.forward(m, x, ops::Mode::Train));
  cfg.norm_inference = "running";
  const MeshUNet running = build_meshunet(cfg, 4);
  CHECK(running.forward(m, x, ops::Mode::Eval) != running.forward(m, x, ops::Mode::Train));
}

TEST_CASE("end-to-end gradient matches finite differences") {
  const NetworkConfig cfg = tiny_config();
  MeshUNet net = build_meshunet(cfg, 5);
  const Mesh m = synth::icosphere(1);
  // Random inputs: the icosphere's own features are highly symmetric, so
  // pooling ties would flip under the finite-difference steps.
  std::mt19937_64 rng(6);
  FeatureMap x = random_map(rng, 5, 120);
  const FeatureMap r = random_map(rng, 4, 120);
  auto loss = [&] { return (net.forward(m, x, ops::Mode::Train).array() * r.array()).sum(); };

  SampleTrace trace;
  net.forward(m, x, ops::Mode::Train, &trace);
  FeatureMap dinput;
  UNetParams grads = net.backward(r, trace, &dinput);

  CHECK(relative_error(dinput, numeric_gradient(x, loss, 1e-6)) <= 1e-3);

  auto params = net.params().tensors();
  auto analytic = grads.tensors();
  REQUIRE(params.size() == analytic.size());
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t)
    for (std::size_t i = 0; i < params[t].size(); i += 1 + params[t].size() / 6) {
      double& p = params[t][i];
      const double keep = p;
      p = keep + 1e-6;
      const double up = loss();
      p = keep - 1e-6;
      const double down = loss();
      p = keep;
      const double numeric = (up - down) / 2e-6;
      worst = std::max(worst, std::abs(numeric - analytic[t][i]) /
                                  std::max({std::abs(numeric), std::abs(analytic[t][i]), 1e-3}));
    }
  CHECK(worst <= 1e-3);
}

TEST_CASE("checkpoint round trip") {
  NetworkConfig cfg = tiny_config();
  cfg.norm_inference = "running";
  MeshUNet net = build_meshunet(cfg, 10);
  const Mesh m = synth::icosphere(1);
  const FeatureMap x = extract_edge_features(m);
  SampleTrace trace;
  net.forward(m, x, ops::Mode::Train, &trace);
  net.update_running_stats(trace);

  TempDir dir("ckpt");
  save_checkpoint(net, dir.path() / "net.json");
  const MeshUNet back = load_checkpoint(dir.path() / "net.json", cfg);
  CHECK(back.config() == cfg);
  CHECK(back.forward(m, x, ops::Mode::Eval) == net.forward(m, x, ops::Mode::Eval));
  CHECK(back.forward(m, x, ops::Mode::Train) == net.forward(m, x, ops::Mode::Train));

  NetworkConfig other = cfg;
  other.ncf = {4, 16};
  CHECK(thrown_kind([&] { load_checkpoint(dir.path() / "net.json", other); }) == ErrorKind::ConfigError);
  CHECK(thrown_kind([&] { load_checkpoint(dir.path() / "missing.json"); }).has_value());
  dir.write("bad.json", "{\"version\": 1");
  CHECK(thrown_kind([&] { load_checkpoint(dir.path() / "bad.json"); }).has_value());
}

#include "medmesh/net.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "medmesh/error.hpp"
#include "medmesh/features.hpp"

namespace medmesh {

using ops::Mode;

void NetworkConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidConfig, why); };
  if (arch != "meshunet") fail("arch must be meshunet, got '" + arch + "'");
  if (ncf.empty()) fail("ncf must not be empty");
  for (int c : ncf)
    if (c <= 0) fail("ncf entries must be positive");
  if (pool_res.size() + 1 != ncf.size())
    fail("pool_res needs " + std::to_string(ncf.size() - 1) + " entries, has " +
         std::to_string(pool_res.size()));
  for (std::size_t i = 0; i < pool_res.size(); ++i) {
    if (pool_res[i] == 0) fail("pool_res entries must be positive");
    if (i > 0 && pool_res[i] >= pool_res[i - 1]) fail("pool_res must be strictly decreasing");
  }
  if (ninput_edges == 0) fail("ninput_edges must be positive");
  if (!pool_res.empty() && pool_res[0] >= ninput_edges) fail("pool_res[0] must be below ninput_edges");
  if (res_blocks < 0) fail("res_blocks must be non-negative");
  if (num_classes < 2) fail("num_classes must be at least 2");
  if (init_type != "normal" && init_type != "xavier" && init_type != "kaiming")
    fail("unknown init_type '" + init_type + "'");
  if (!(init_gain > 0.0) || !std::isfinite(init_gain)) fail("init_gain must be positive");
  if (norm_inference != "sample" && norm_inference != "running")
    fail("norm_inference must be sample or running, got '" + norm_inference + "'");
}

namespace {

template <typename Fn>
void visit_block(ConvBlock& b, Fn&& fn) {
  fn(b.conv, b.norm);
  for (ResidualBlock& r : b.residual) {
    fn(r.conv1, r.norm1);
    fn(r.conv2, r.norm2);
  }
}

std::span<double> view(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> view(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

class Initializer {
 public:
  Initializer(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {}

  ops::ConvKernel conv(int in, int out) {
    ops::ConvKernel k = ops::ConvKernel::zeros(in, out);
    fill(k.weights, in * ops::kKernelTaps, out);
    return k;
  }

  ops::Dense dense(int in, int out) {
    ops::Dense d = ops::Dense::zeros(in, out);
    fill(d.weights, in, out);
    return d;
  }

  ConvBlock block(int in, int out) {
    ConvBlock b{conv(in, out), ops::NormParams::identity(out), {}};
    for (int r = 0; r < cfg_.res_blocks; ++r)
      b.residual.push_back({conv(out, out), ops::NormParams::identity(out), conv(out, out),
                            ops::NormParams::identity(out)});
    return b;
  }

 private:
  void fill(Eigen::MatrixXd& w, int fan_in, int fan_out) {
    double stddev = cfg_.init_gain;
    if (cfg_.init_type == "xavier")
      stddev = cfg_.init_gain * std::sqrt(2.0 / (fan_in + fan_out));
    else if (cfg_.init_type == "kaiming")
      stddev = std::sqrt(2.0 / fan_in);
    std::normal_distribution<double> dist(0.0, stddev);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng_);
  }

  const NetworkConfig& cfg_;
  std::mt19937_64 rng_;
};

FeatureMap block_forward(const ConvBlock& b, const Mesh& mesh, const FeatureMap& x, Mode mode,
                         BlockTrace& t) {
  const std::size_t valid = mesh.real_edge_count();
  FeatureMap h = ops::mesh_conv_forward(x, mesh, b.conv, &t.conv);
  h = ops::norm_forward(h, valid, b.norm, mode, &t.norm);
  t.act = ops::relu_forward(h);
  FeatureMap a = t.act;
  t.residual.resize(b.residual.size());
  for (std::size_t r = 0; r < b.residual.size(); ++r) {
    const ResidualBlock& rb = b.residual[r];
    ResidualTrace& rt = t.residual[r];
    rt.input = a;
    FeatureMap h1 = ops::mesh_conv_forward(a, mesh, rb.conv1, &rt.conv1);
    h1 = ops::norm_forward(h1, valid, rb.norm1, mode, &rt.norm1);
    rt.act1 = ops::relu_forward(h1);
    FeatureMap h2 = ops::mesh_conv_forward(rt.act1, mesh, rb.conv2, &rt.conv2);
    h2 = ops::norm_forward(h2, valid, rb.norm2, mode, &rt.norm2);
    rt.output = ops::relu_forward(h2 + rt.input);
    a = rt.output;
  }
  return a;
}

FeatureMap block_backward(const ConvBlock& b, const Mesh& mesh, const BlockTrace& t,
                          const FeatureMap& upstream, ConvBlock& g) {
  FeatureMap d = upstream;
  for (std::size_t r = b.residual.size(); r-- > 0;) {
    const ResidualBlock& rb = b.residual[r];
    const ResidualTrace& rt = t.residual[r];
    ResidualBlock& rg = g.residual[r];
    const FeatureMap dsum = ops::relu_backward(d, rt.output);
    ops::NormGrads n2 = ops::norm_backward(dsum, rb.norm2, rt.norm2);
    rg.norm2.scale = n2.scale;
    rg.norm2.shift = n2.shift;
    ops::ConvGrads c2 = ops::mesh_conv_backward(n2.input, mesh, rb.conv2, rt.conv2);
    rg.conv2.weights = c2.kernel.weights;
    rg.conv2.bias = c2.kernel.bias;
    const FeatureMap dact1 = ops::relu_backward(c2.input, rt.act1);
    ops::NormGrads n1 = ops::norm_backward(dact1, rb.norm1, rt.norm1);
    rg.norm1.scale = n1.scale;
    rg.norm1.shift = n1.shift;
    ops::ConvGrads c1 = ops::mesh_conv_backward(n1.input, mesh, rb.conv1, rt.conv1);
    rg.conv1.weights = c1.kernel.weights;
    rg.conv1.bias = c1.kernel.bias;
    d = c1.input + dsum;
  }
  const FeatureMap dact = ops::relu_backward(d, t.act);
  ops::NormGrads n = ops::norm_backward(dact, b.norm, t.norm);
  g.norm.scale = n.scale;
  g.norm.shift = n.shift;
  ops::ConvGrads c = ops::mesh_conv_backward(n.input, mesh, b.conv, t.conv);
  g.conv.weights = c.kernel.weights;
  g.conv.bias = c.kernel.bias;
  return c.input;
}

void fold_stats(ConvBlock& b, const BlockTrace& t) {
  b.norm.update_running(t.norm.mean, t.norm.var, t.norm.valid_edges);
  for (std::size_t r = 0; r < b.residual.size(); ++r) {
    b.residual[r].norm1.update_running(t.residual[r].norm1.mean, t.residual[r].norm1.var,
                                       t.residual[r].norm1.valid_edges);
    b.residual[r].norm2.update_running(t.residual[r].norm2.mean, t.residual[r].norm2.var,
                                       t.residual[r].norm2.valid_edges);
  }
}

}  // namespace

std::vector<std::span<double>> UNetParams::tensors() {
  std::vector<std::span<double>> out;
  auto add = [&](ops::ConvKernel& k, ops::NormParams& n) {
    out.push_back(view(k.weights));
    out.push_back(view(k.bias));
    out.push_back(view(n.scale));
    out.push_back(view(n.shift));
  };
  for (ConvBlock& b : encoder) visit_block(b, add);
  for (ConvBlock& b : decoder) visit_block(b, add);
  out.push_back(view(head.weights));
  out.push_back(view(head.bias));
  return out;
}

std::vector<std::span<double>> UNetParams::buffers() {
  std::vector<std::span<double>> out;
  auto add = [&](ops::ConvKernel&, ops::NormParams& n) {
    out.push_back(view(n.running_mean));
    out.push_back(view(n.running_var));
  };
  for (ConvBlock& b : encoder) visit_block(b, add);
  for (ConvBlock& b : decoder) visit_block(b, add);
  return out;
}

UNetParams UNetParams::zeros_like() const {
  UNetParams z = *this;
  for (std::span<double> t : z.tensors()) std::fill(t.begin(), t.end(), 0.0);
  return z;
}

MeshUNet::MeshUNet(NetworkConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Initializer init(cfg_, seed);
  const std::size_t levels = cfg_.ncf.size();
  for (std::size_t i = 0; i < levels; ++i)
    params_.encoder.push_back(init.block(i == 0 ? kInputChannels : cfg_.ncf[i - 1], cfg_.ncf[i]));
  for (std::size_t j = 0; j + 1 < levels; ++j) {
    const std::size_t i = levels - 2 - j;
    params_.decoder.push_back(init.block(cfg_.ncf[i + 1] + cfg_.ncf[i], cfg_.ncf[i]));
  }
  params_.head = init.dense(cfg_.ncf[0], cfg_.num_classes);
}

MeshUNet::MeshUNet(NetworkConfig cfg, UNetParams params)
    : cfg_(std::move(cfg)), params_(std::move(params)) {
  cfg_.validate();
  MeshUNet reference(cfg_, 0);
  auto expected = reference.params_.tensors();
  auto actual = params_.tensors();
  if (expected.size() != actual.size())
    throw Error(ErrorKind::ShapeMismatch, "parameter set does not match the configuration");
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (expected[i].size() != actual[i].size())
      throw Error(ErrorKind::ShapeMismatch, "parameter " + std::to_string(i) + " has " +
                                                std::to_string(actual[i].size()) + " values, expected " +
                                                std::to_string(expected[i].size()));
}

FeatureMap MeshUNet::forward(const Mesh& mesh, const FeatureMap& x, Mode mode,
                             SampleTrace* trace) const {
  if (mesh.edge_count() != cfg_.ninput_edges)
    throw Error(ErrorKind::EdgeCountMismatch, "network expects " + std::to_string(cfg_.ninput_edges) +
                                                  " edges, sample has " +
                                                  std::to_string(mesh.edge_count()));
  if (x.rows() != kInputChannels || static_cast<std::size_t>(x.cols()) != mesh.edge_count())
    throw Error(ErrorKind::ShapeMismatch, "input must be 5 x " + std::to_string(mesh.edge_count()));

  if (mode == Mode::Eval && cfg_.norm_inference == "sample") mode = Mode::Train;

  SampleTrace local;
  SampleTrace& t = trace ? *trace : local;
  const std::size_t levels = cfg_.ncf.size();
  t = SampleTrace{};
  t.meshes.reserve(levels);
  t.meshes.push_back(mesh);
  t.encoder.resize(levels);
  t.decoder.resize(levels - 1);

  std::vector<FeatureMap> skips;
  FeatureMap h = x;
  for (std::size_t i = 0; i < levels; ++i) {
    h = block_forward(params_.encoder[i], t.meshes[i], h, mode, t.encoder[i]);
    if (i + 1 == levels) break;
    PoolResult pooled = mesh_pool(t.meshes[i], h, cfg_.pool_res[i]);
    skips.push_back(std::move(h));
    h = std::move(pooled.features);
    t.meshes.push_back(std::move(pooled.mesh));
    t.pools.push_back(std::move(pooled.history));
  }
  for (std::size_t j = 0; j + 1 < levels; ++j) {
    const std::size_t i = levels - 2 - j;
    h = ops::concat_channels(mesh_unpool(h, t.pools[i]), skips[i]);
    h = block_forward(params_.decoder[j], t.meshes[i], h, mode, t.decoder[j]);
  }
  t.head_input = h;
  return ops::dense_forward(h, params_.head);
}

UNetParams MeshUNet::backward(const FeatureMap& dlogits, const SampleTrace& trace) const {
  return backward(dlogits, trace, nullptr);
}

UNetParams MeshUNet::backward(const FeatureMap& dlogits, const SampleTrace& t,
                              FeatureMap* dinput) const {
  const std::size_t levels = cfg_.ncf.size();
  if (t.encoder.size() != levels || t.pools.size() + 1 != levels)
    throw Error(ErrorKind::ShapeMismatch, "trace does not belong to this network");

  UNetParams g = params_.zeros_like();
  ops::DenseGrads hg = ops::dense_backward(dlogits, t.head_input, params_.head);
  g.head = std::move(hg.layer);
  FeatureMap d = std::move(hg.input);

  std::vector<FeatureMap> dskip(levels);
  for (std::size_t j = levels - 1; j-- > 0;) {
    const std::size_t i = levels - 2 - j;
    d = block_backward(params_.decoder[j], t.meshes[i], t.decoder[j], d, g.decoder[j]);
    auto [dup, ds] = ops::concat_backward(d, cfg_.ncf[i + 1]);
    dskip[i] = std::move(ds);
    d = mesh_unpool_backward(dup, t.pools[i]);
  }
  for (std::size_t i = levels; i-- > 0;) {
    if (i + 1 < levels) d = mesh_pool_backward(d, t.pools[i]) + dskip[i];
    d = block_backward(params_.encoder[i], t.meshes[i], t.encoder[i], d, g.encoder[i]);
  }
  if (dinput) *dinput = std::move(d);
  return g;
}

void MeshUNet::update_running_stats(const SampleTrace& trace) {
  for (std::size_t i = 0; i < params_.encoder.size(); ++i) fold_stats(params_.encoder[i], trace.encoder[i]);
  for (std::size_t j = 0; j < params_.decoder.size(); ++j) fold_stats(params_.decoder[j], trace.decoder[j]);
}

MeshUNet build_meshunet(const NetworkConfig& cfg, std::uint64_t seed) { return MeshUNet(cfg, seed); }

}  // namespace medmesh

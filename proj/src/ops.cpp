#include "medmesh/ops.hpp"

#include <string>

#include "medmesh/error.hpp"

namespace medmesh::ops {

namespace {

inline double sign_or_zero(double u) { return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0); }

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorKind::ShapeMismatch,
                std::string(what) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

ConvKernel ConvKernel::zeros(int in_channels, int out_channels) {
  ConvKernel k;
  k.in_channels = in_channels;
  k.out_channels = out_channels;
  k.weights = Eigen::MatrixXd::Zero(out_channels, in_channels * kKernelTaps);
  k.bias = Eigen::VectorXd::Zero(out_channels);
  return k;
}

Eigen::MatrixXd gather_symmetric(const FeatureMap& x, const Mesh& mesh) {
  const Eigen::Index channels = x.rows();
  const Eigen::Index edges = x.cols();
  Eigen::MatrixXd g(channels * kKernelTaps, edges);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(channels);
  const auto& nbrs = mesh.edge_neighbors();

  for (Eigen::Index e = 0; e < edges; ++e) {
    const auto& n = nbrs[e];
    const double* xe = x.col(e).data();
    const double* xa = n[0] == kMissing ? zero.data() : x.col(n[0]).data();
    const double* xb = n[1] == kMissing ? zero.data() : x.col(n[1]).data();
    const double* xc = n[2] == kMissing ? zero.data() : x.col(n[2]).data();
    const double* xd = n[3] == kMissing ? zero.data() : x.col(n[3]).data();
    double* out = g.col(e).data();
    for (Eigen::Index i = 0; i < channels; ++i) {
      double* o = out + i * kKernelTaps;
      o[0] = xe[i];
      o[1] = std::abs(xa[i] - xc[i]);
      o[2] = xa[i] + xc[i];
      o[3] = std::abs(xb[i] - xd[i]);
      o[4] = xb[i] + xd[i];
    }
  }
  return g;
}

FeatureMap mesh_conv_forward(const FeatureMap& x, const Mesh& mesh, const ConvKernel& k,
                             ConvCache* cache) {
  if (x.rows() != k.in_channels)
    throw Error(ErrorKind::ChannelMismatch, "input has " + std::to_string(x.rows()) +
                                                " channels, kernel expects " +
                                                std::to_string(k.in_channels));
  if (static_cast<std::size_t>(x.cols()) != mesh.edge_count())
    throw Error(ErrorKind::EdgeCountMismatch, "feature map has " + std::to_string(x.cols()) +
                                                  " edges, mesh has " +
                                                  std::to_string(mesh.edge_count()));
  Eigen::MatrixXd g = gather_symmetric(x, mesh);
  FeatureMap y = k.weights * g;
  y.colwise() += k.bias;
  if (cache) {
    cache->input = x;
    cache->gathered = std::move(g);
  }
  return y;
}

ConvGrads mesh_conv_backward(const FeatureMap& upstream, const Mesh& mesh, const ConvKernel& k,
                             const ConvCache& cache) {
  if (upstream.rows() != k.out_channels || upstream.cols() != cache.gathered.cols())
    throw Error(ErrorKind::ShapeMismatch, "conv upstream gradient does not match forward output");

  ConvGrads grads;
  grads.kernel.in_channels = k.in_channels;
  grads.kernel.out_channels = k.out_channels;
  grads.kernel.weights = upstream * cache.gathered.transpose();
  grads.kernel.bias = upstream.rowwise().sum();

  const Eigen::MatrixXd dg = k.weights.transpose() * upstream;
  const FeatureMap& x = cache.input;
  const Eigen::Index channels = x.rows();
  FeatureMap dx = FeatureMap::Zero(channels, x.cols());
  const auto& nbrs = mesh.edge_neighbors();

  auto value = [&](int edge, Eigen::Index i) { return edge == kMissing ? 0.0 : x(i, edge); };
  auto add = [&](int edge, Eigen::Index i, double v) {
    if (edge != kMissing) dx(i, edge) += v;
  };

  for (Eigen::Index e = 0; e < x.cols(); ++e) {
    const auto& n = nbrs[e];
    const double* d = dg.col(e).data();
    for (Eigen::Index i = 0; i < channels; ++i) {
      const double* t = d + i * kKernelTaps;
      dx(i, e) += t[0];
      const double s_ac = sign_or_zero(value(n[0], i) - value(n[2], i));
      const double s_bd = sign_or_zero(value(n[1], i) - value(n[3], i));
      add(n[0], i, s_ac * t[1] + t[2]);
      add(n[2], i, -s_ac * t[1] + t[2]);
      add(n[1], i, s_bd * t[3] + t[4]);
      add(n[3], i, -s_bd * t[3] + t[4]);
    }
  }
  grads.input = std::move(dx);
  return grads;
}

Dense Dense::zeros(int in_channels, int out_channels) {
  return Dense{Eigen::MatrixXd::Zero(out_channels, in_channels), Eigen::VectorXd::Zero(out_channels)};
}

FeatureMap dense_forward(const FeatureMap& x, const Dense& layer) {
  if (x.rows() != layer.weights.cols())
    throw Error(ErrorKind::ChannelMismatch, "dense layer expects " +
                                                std::to_string(layer.weights.cols()) +
                                                " channels, got " + std::to_string(x.rows()));
  FeatureMap y = layer.weights * x;
  y.colwise() += layer.bias;
  return y;
}

DenseGrads dense_backward(const FeatureMap& upstream, const FeatureMap& input, const Dense& layer) {
  if (upstream.rows() != layer.weights.rows() || upstream.cols() != input.cols())
    throw Error(ErrorKind::ShapeMismatch, "dense upstream gradient does not match forward output");
  DenseGrads g;
  g.layer.weights = upstream * input.transpose();
  g.layer.bias = upstream.rowwise().sum();
  g.input = layer.weights.transpose() * upstream;
  return g;
}

FeatureMap relu_forward(const FeatureMap& x) { return x.cwiseMax(0.0); }

FeatureMap relu_backward(const FeatureMap& upstream, const FeatureMap& output) {
  require_same_shape(upstream, output, "relu_backward");
  return (output.array() > 0.0).select(upstream, 0.0);
}

NormParams NormParams::identity(int channels) {
  return NormParams{Eigen::VectorXd::Ones(channels), Eigen::VectorXd::Zero(channels),
                    Eigen::VectorXd::Zero(channels), Eigen::VectorXd::Ones(channels)};
}

void NormParams::update_running(const Eigen::VectorXd& mean, const Eigen::VectorXd& var,
                                std::size_t count) {
  const double unbias = count > 1 ? static_cast<double>(count) / static_cast<double>(count - 1) : 1.0;
  running_mean = (1.0 - kNormMomentum) * running_mean + kNormMomentum * mean;
  running_var = (1.0 - kNormMomentum) * running_var + kNormMomentum * unbias * var;
}

FeatureMap norm_forward(const FeatureMap& x, std::size_t valid_edges, const NormParams& p, Mode mode,
                        NormCache* cache) {
  const Eigen::Index channels = x.rows();
  if (p.scale.size() != channels)
    throw Error(ErrorKind::ShapeMismatch, "norm has " + std::to_string(p.scale.size()) +
                                              " channels, input " + std::to_string(channels));
  if (valid_edges == 0 || valid_edges > static_cast<std::size_t>(x.cols()))
    throw Error(ErrorKind::ShapeMismatch, "norm needs 1.." + std::to_string(x.cols()) +
                                              " valid edges, got " + std::to_string(valid_edges));

  const auto n = static_cast<Eigen::Index>(valid_edges);
  Eigen::VectorXd mean, var;
  if (mode == Mode::Train) {
    const auto valid = x.leftCols(n);
    mean = valid.rowwise().mean();
    var = (valid.colwise() - mean).array().square().rowwise().mean();
  } else {
    mean = p.running_mean;
    var = p.running_var;
  }
  const Eigen::VectorXd inv_std = (var.array() + kNormEpsilon).rsqrt();
  Eigen::MatrixXd normalized = (x.colwise() - mean).array().colwise() * inv_std.array();
  FeatureMap y = (normalized.array().colwise() * p.scale.array()).colwise() + p.shift.array();
  if (cache) {
    cache->mode = mode;
    cache->valid_edges = valid_edges;
    cache->normalized = std::move(normalized);
    cache->mean = std::move(mean);
    cache->var = std::move(var);
    cache->inv_std = inv_std;
  }
  return y;
}

NormGrads norm_backward(const FeatureMap& upstream, const NormParams& p, const NormCache& cache) {
  require_same_shape(upstream, cache.normalized, "norm_backward");
  NormGrads g;
  g.scale = (upstream.array() * cache.normalized.array()).rowwise().sum();
  g.shift = upstream.rowwise().sum();

  // dL/dxhat, over every edge (padding outputs also depend on the statistics)
  const Eigen::MatrixXd gx = upstream.array().colwise() * p.scale.array();
  g.input = gx.array().colwise() * cache.inv_std.array();
  if (cache.mode == Mode::Eval) return g;

  const auto n = static_cast<Eigen::Index>(cache.valid_edges);
  const Eigen::VectorXd sum_g = gx.rowwise().sum();
  const Eigen::VectorXd sum_g_xhat = (gx.array() * cache.normalized.array()).rowwise().sum();
  const Eigen::ArrayXd coef = cache.inv_std.array() / static_cast<double>(n);
  Eigen::ArrayXXd correction =
      (cache.normalized.leftCols(n).array().colwise() * sum_g_xhat.array()).colwise() +
      sum_g.array();
  g.input.leftCols(n).array() -= correction.colwise() * coef;
  return g;
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
  if (a.cols() != b.cols())
    throw Error(ErrorKind::EdgeCountMismatch, "concat of " + std::to_string(a.cols()) + " and " +
                                                  std::to_string(b.cols()) + " edges");
  FeatureMap out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

std::pair<FeatureMap, FeatureMap> concat_backward(const FeatureMap& upstream, int first_channels) {
  if (first_channels < 0 || first_channels > upstream.rows())
    throw Error(ErrorKind::ShapeMismatch, "concat split " + std::to_string(first_channels) +
                                              " outside " + std::to_string(upstream.rows()));
  return {upstream.topRows(first_channels), upstream.bottomRows(upstream.rows() - first_channels)};
}

}  // namespace medmesh::ops

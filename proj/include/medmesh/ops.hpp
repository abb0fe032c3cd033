#pragma once

#include <Eigen/Core>

#include "medmesh/mesh.hpp"

// Differentiable layers over edge feature maps. Each op has a forward that
// optionally fills a cache and a backward that consumes it.
namespace medmesh::ops {

/// Depth of the symmetric gather: the edge itself, |a-c|, a+c, |b-d|, b+d.
inline constexpr int kKernelTaps = 5;

struct ConvKernel {
  int in_channels = 0;
  int out_channels = 0;
  // out x (in * 5); column i*5 + t is tap t of input channel i.
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;

  static ConvKernel zeros(int in_channels, int out_channels);
  double& weight(int out, int in, int tap) { return weights(out, in * kKernelTaps + tap); }
  double weight(int out, int in, int tap) const { return weights(out, in * kKernelTaps + tap); }
};

struct ConvCache {
  FeatureMap input;
  Eigen::MatrixXd gathered;  // (in * 5) x E
};

struct ConvGrads {
  FeatureMap input;
  ConvKernel kernel;
};

/// Builds the (in*5) x E matrix of symmetric neighbor terms.
Eigen::MatrixXd gather_symmetric(const FeatureMap& x, const Mesh& mesh);

FeatureMap mesh_conv_forward(const FeatureMap& x, const Mesh& mesh, const ConvKernel& k,
                             ConvCache* cache = nullptr);

ConvGrads mesh_conv_backward(const FeatureMap& upstream, const Mesh& mesh, const ConvKernel& k,
                             const ConvCache& cache);

/// Per-edge affine map (a 1x1 convolution): out x in weights plus bias.
struct Dense {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;

  static Dense zeros(int in_channels, int out_channels);
};

struct DenseGrads {
  FeatureMap input;
  Dense layer;
};

FeatureMap dense_forward(const FeatureMap& x, const Dense& layer);
DenseGrads dense_backward(const FeatureMap& upstream, const FeatureMap& input, const Dense& layer);

FeatureMap relu_forward(const FeatureMap& x);
/// `output` is the forward result; the derivative at 0 is taken as 0.
FeatureMap relu_backward(const FeatureMap& upstream, const FeatureMap& output);

inline constexpr double kNormEpsilon = 1e-5;
inline constexpr double kNormMomentum = 0.1;

enum class Mode { Train, Eval };

/// Per-sample, per-channel normalization with learned scale and shift.
///
/// Statistics are taken over the first `valid_edges` edges only (padding is
/// excluded) and applied to every edge. Eval mode uses the running estimates.
struct NormParams {
  Eigen::VectorXd scale;
  Eigen::VectorXd shift;
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;

  static NormParams identity(int channels);
  /// Folds one sample's statistics into the running estimates.
  void update_running(const Eigen::VectorXd& mean, const Eigen::VectorXd& var, std::size_t count);
};

struct NormCache {
  Mode mode = Mode::Train;
  std::size_t valid_edges = 0;
  Eigen::MatrixXd normalized;  // channels x E, before scale/shift
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  Eigen::VectorXd inv_std;
};

struct NormGrads {
  FeatureMap input;
  Eigen::VectorXd scale;
  Eigen::VectorXd shift;
};

FeatureMap norm_forward(const FeatureMap& x, std::size_t valid_edges, const NormParams& p,
                        Mode mode, NormCache* cache = nullptr);
NormGrads norm_backward(const FeatureMap& upstream, const NormParams& p, const NormCache& cache);

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);

/// Splits an upstream gradient at the channel boundary of a concat.
std::pair<FeatureMap, FeatureMap> concat_backward(const FeatureMap& upstream, int first_channels);

}  // namespace medmesh::ops

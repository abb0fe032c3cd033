#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "medmesh/ops.hpp"
#include "medmesh/pool.hpp"

namespace medmesh {

struct NetworkConfig {
  std::string arch = "meshunet";
  std::vector<int> ncf = {32, 64, 128, 256};
  std::vector<std::size_t> pool_res = {9000, 4000, 2500};
  std::size_t ninput_edges = 19200;
  int res_blocks = 3;
  std::string init_type = "normal";
  double init_gain = 0.02;
  int num_classes = 4;
  // Statistics the normalization layers use at inference: "sample" (each
  // input's own, as in training) or "running" (averages kept during training).
  std::string norm_inference = "sample";

  /// Throws InvalidConfig on any violated invariant.
  void validate() const;

  bool operator==(const NetworkConfig&) const = default;
};

/// conv -> norm -> relu -> conv -> norm, plus the identity, then relu.
struct ResidualBlock {
  ops::ConvKernel conv1;
  ops::NormParams norm1;
  ops::ConvKernel conv2;
  ops::NormParams norm2;
};

/// conv -> norm -> relu followed by res_blocks residual blocks.
struct ConvBlock {
  ops::ConvKernel conv;
  ops::NormParams norm;
  std::vector<ResidualBlock> residual;
};

/// All layers of a MeshUNet. Also used as the container for its gradients.
struct UNetParams {
  std::vector<ConvBlock> encoder;  // last entry is the bottleneck
  std::vector<ConvBlock> decoder;  // decoder[j] restores level encoder.size() - 2 - j
  ops::Dense head;

  /// Views over every trainable array, in a fixed order.
  std::vector<std::span<double>> tensors();
  /// Views over the running normalization statistics.
  std::vector<std::span<double>> buffers();
  UNetParams zeros_like() const;
};

struct ResidualTrace {
  FeatureMap input;
  ops::ConvCache conv1;
  ops::NormCache norm1;
  FeatureMap act1;
  ops::ConvCache conv2;
  ops::NormCache norm2;
  FeatureMap output;
};

struct BlockTrace {
  ops::ConvCache conv;
  ops::NormCache norm;
  FeatureMap act;
  std::vector<ResidualTrace> residual;
};

/// Saved activations of one forward pass, consumed by backward.
struct SampleTrace {
  std::vector<Mesh> meshes;  // meshes[i] is the resolution of encoder level i
  std::vector<BlockTrace> encoder;
  std::vector<PoolHistory> pools;
  std::vector<BlockTrace> decoder;
  FeatureMap head_input;
};

/// Encoder-decoder over mesh edges with skip connections.
///
/// Encoder level i runs a conv block at ncf[i] channels and pools to
/// pool_res[i]; the last level is the bottleneck. Each decoder level
/// unpools, concatenates the matching encoder output and reduces back to
/// ncf[i] channels. A per-edge dense head produces num_classes logits.
class MeshUNet {
 public:
  MeshUNet(NetworkConfig cfg, std::uint64_t seed);
  MeshUNet(NetworkConfig cfg, UNetParams params);

  const NetworkConfig& config() const { return cfg_; }
  UNetParams& params() { return params_; }
  const UNetParams& params() const { return params_; }

  /// Logits, num_classes x ninput_edges. `trace` is needed for backward.
  FeatureMap forward(const Mesh& mesh, const FeatureMap& x, ops::Mode mode,
                     SampleTrace* trace = nullptr) const;

  /// Parameter gradients for one sample given dLoss/dlogits.
  UNetParams backward(const FeatureMap& dlogits, const SampleTrace& trace) const;

  /// Gradient with respect to the network input as well.
  UNetParams backward(const FeatureMap& dlogits, const SampleTrace& trace, FeatureMap* dinput) const;

  /// Folds the batch statistics saved in a training-mode trace into the
  /// running estimates.
  void update_running_stats(const SampleTrace& trace);

 private:
  NetworkConfig cfg_;
  UNetParams params_;
};

MeshUNet build_meshunet(const NetworkConfig& cfg, std::uint64_t seed);

}  // namespace medmesh

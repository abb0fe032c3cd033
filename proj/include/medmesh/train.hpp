#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "medmesh/metrics.hpp"
#include "medmesh/net.hpp"
#include "medmesh/sample.hpp"

namespace medmesh {

struct TrainConfig {
  std::size_t batch_size = 3;
  double lr = 0.001;
  std::string lr_policy = "lambda";
  double beta1 = 0.9;
  std::size_t num_aug = 20;
  double flip_edges = 0.0;
  bool scale_verts = true;
  double slide_verts = 0.4;
  std::vector<double> weighted_loss = {0.3, 0.2, 0.3, 0.2};
  int epochs = 100;
  int decay_epochs = 100;
  std::uint64_t seed = 0;
  // Worker threads for the samples of a batch; results do not depend on it.
  int threads = 1;

  void validate(int num_classes) const;
  bool operator==(const TrainConfig&) const = default;
};

// ---- loss ------------------------------------------------------------------

/// Unnormalized pieces of the weighted cross entropy for one sample. An
/// empty mask means every edge counts.
struct LossTerms {
  double weighted_nll = 0.0;  // sum_i mask_i w_{y_i} (-log softmax_i[y_i])
  double weight_sum = 0.0;    // sum_i mask_i w_{y_i}
  FeatureMap grad;            // d weighted_nll / d logits
};

LossTerms cross_entropy_terms(const FeatureMap& logits, std::span<const int> labels,
                              std::span<const std::uint8_t> mask, std::span<const double> weights);

/// Weighted mean of per-edge negative log-likelihoods over masked-in edges.
double weighted_cross_entropy(const FeatureMap& logits, std::span<const int> labels,
                              std::span<const std::uint8_t> mask, std::span<const double> weights);

// ---- optimizer -------------------------------------------------------------

inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  long step = 0;

  static AdamState zeros_like(const std::vector<std::span<double>>& params);
};

void adam_step(const std::vector<std::span<double>>& params,
               const std::vector<std::span<double>>& grads, AdamState& state, double lr,
               double beta1);

/// Constant for `epochs` epochs, then linear decay to zero over `decay_epochs`.
double lr_lambda(int epoch, double base_lr, int epochs, int decay_epochs);

// ---- augmentation ----------------------------------------------------------

inline constexpr double kScaleLow = 0.9;
inline constexpr double kScaleHigh = 1.1;
inline constexpr int kAugmentAttempts = 10;

/// Random per-axis scaling, vertex sliding and edge flips as configured.
/// Labels follow their edges; only flips change the edge order. Throws
/// DegenerateAfterAugment if 10 draws all produce invalid geometry.
LabeledSample augment(const LabeledSample& sample, std::mt19937_64& rng, const TrainConfig& cfg);

/// The training variants of one mesh: num_aug augmented copies, each drawn
/// from its own seed derived from cfg.seed, `index` and the copy number.
/// num_aug = 0 yields the unaugmented sample alone.
std::vector<LabeledSample> augmented_variants(const LabeledSample& sample, const TrainConfig& cfg,
                                              std::size_t index);

// ---- data ------------------------------------------------------------------

/// Loads `<split>/*.obj` with the matching `<stem>.eseg`, sorted by file name.
std::vector<LabeledSample> load_split(const std::filesystem::path& dir, int num_classes);
Dataset load_dataset(const std::filesystem::path& root, int num_classes);

/// Writes `<dir>/<stem>.obj` and `<dir>/<stem>.eseg`.
void save_sample(const LabeledSample& sample, const std::filesystem::path& dir, const std::string& stem);

// ---- inference and evaluation ------------------------------------------------

/// Pads to the network input size, runs inference and returns one label per real edge.
std::vector<int> predict(const MeshUNet& net, const Mesh& mesh);

ConfusionMatrix evaluate(const MeshUNet& net, const std::vector<LabeledSample>& samples);

// ---- training loop -----------------------------------------------------------

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double val_miou = 0.0;
  std::vector<std::optional<double>> val_iou;
};

/// `epoch=<n> loss=<f> val_miou=<f> iou_c0=<f> ...`; undefined classes print `na`.
std::string format_log_line(const EpochLog& log);

struct TrainResult {
  MeshUNet best;
  int best_epoch = -1;
  double best_val_miou = 0.0;
  std::vector<EpochLog> history;
};

/// Seeded training: shuffle, batch, forward, weighted loss, backward, Adam
/// step, schedule. Keeps the parameters with the best validation mean IoU.
/// Each epoch's log line goes to `log` when given.
TrainResult train(const std::vector<LabeledSample>& train_set, const std::vector<LabeledSample>& val_set,
                  const NetworkConfig& net_cfg, const TrainConfig& cfg, std::ostream* log = nullptr);

}  // namespace medmesh

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace medmesh {

/// counts[g][p]: edges with ground truth g predicted as p.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::vector<std::uint64_t>> counts;

  std::uint64_t total() const;
  std::uint64_t true_positives(int c) const { return counts[c][c]; }
  std::uint64_t false_positives(int c) const;
  std::uint64_t false_negatives(int c) const;
};

/// Tallies every edge with mask != 0. An empty mask means all edges count.
ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> gt,
                          std::span<const std::uint8_t> mask, int num_classes);

struct IouReport {
  // Empty for classes absent from both ground truth and prediction.
  std::vector<std::optional<double>> per_class;
  // Unweighted mean over the defined classes.
  double mean = 0.0;
};

/// Strict per-class IoU = TP / (TP + FP + FN); neighboring labels earn no credit.
IouReport iou(const ConfusionMatrix& cm);

double accuracy(const ConfusionMatrix& cm);

}  // namespace medmesh

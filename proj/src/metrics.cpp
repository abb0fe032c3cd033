#include "medmesh/metrics.hpp"

#include <string>

#include "medmesh/error.hpp"

namespace medmesh {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::false_positives(int c) const {
  std::uint64_t fp = 0;
  for (int g = 0; g < num_classes; ++g)
    if (g != c) fp += counts[g][c];
  return fp;
}

std::uint64_t ConfusionMatrix::false_negatives(int c) const {
  std::uint64_t fn = 0;
  for (int p = 0; p < num_classes; ++p)
    if (p != c) fn += counts[c][p];
  return fn;
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> gt,
                          std::span<const std::uint8_t> mask, int num_classes) {
  if (pred.size() != gt.size() || (!mask.empty() && mask.size() != gt.size()))
    throw Error(ErrorKind::LengthMismatch, std::to_string(pred.size()) + " predictions, " +
                                               std::to_string(gt.size()) + " labels, " +
                                               std::to_string(mask.size()) + " mask entries");
  ConfusionMatrix cm{num_classes, std::vector<std::vector<std::uint64_t>>(
                                      num_classes, std::vector<std::uint64_t>(num_classes, 0))};
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    if (gt[i] < 0 || gt[i] >= num_classes || pred[i] < 0 || pred[i] >= num_classes)
      throw Error(ErrorKind::LabelOutOfRange, "edge " + std::to_string(i) + ": gt " +
                                                  std::to_string(gt[i]) + ", pred " +
                                                  std::to_string(pred[i]));
    ++cm.counts[gt[i]][pred[i]];
  }
  return cm;
}

IouReport iou(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorKind::EmptyEvaluation, "no evaluated edges");
  IouReport r;
  r.per_class.resize(cm.num_classes);
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < cm.num_classes; ++c) {
    const std::uint64_t tp = cm.true_positives(c);
    const std::uint64_t denom = tp + cm.false_positives(c) + cm.false_negatives(c);
    if (denom == 0) continue;
    r.per_class[c] = static_cast<double>(tp) / static_cast<double>(denom);
    sum += *r.per_class[c];
    ++defined;
  }
  r.mean = sum / defined;
  return r;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw Error(ErrorKind::EmptyEvaluation, "no evaluated edges");
  std::uint64_t trace = 0;
  for (int c = 0; c < cm.num_classes; ++c) trace += cm.counts[c][c];
  return static_cast<double>(trace) / static_cast<double>(total);
}

}  // namespace medmesh

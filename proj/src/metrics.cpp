#include "spic/metrics.hpp"

#include <cmath>
#include <numeric>

namespace spic {

double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const std::int64_t> nodes) {
  if (nodes.empty()) throw Error("accuracy over an empty mask");
  std::int64_t correct = 0;
  for (auto i : nodes) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best)) best = c;
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

double micro_f1(const Matrix& probabilities, const Labels& labels, std::span<const std::int64_t> nodes,
                double threshold) {
  if (nodes.empty()) throw Error("micro-F1 over an empty mask");
  if (!labels.multilabel) throw Error("micro-F1 requires multilabel targets");
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (auto i : nodes)
    for (int c = 0; c < labels.num_classes; ++c) {
      const bool pred = probabilities(i, c) >= threshold;
      const bool truth = labels.multi_at(i, c) != 0;
      tp += pred && truth;
      fp += pred && !truth;
      fn += !pred && truth;
    }
  const auto denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

Matrix sigmoid(const Matrix& logits) {
  return logits.unaryExpr([](double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); });
}

double task_metric(const Matrix& logits, const Labels& labels, std::span<const std::int64_t> nodes) {
  if (labels.multilabel) return micro_f1(sigmoid(logits), labels, nodes, 0.5);
  return accuracy(logits, labels.single, nodes);
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error("mean of no samples");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace spic

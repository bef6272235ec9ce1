#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spic/common.hpp"
#include "spic/graph.hpp"

namespace spic {

/// Fraction of `nodes` whose argmax logit equals the label. Ties go to the
/// lowest class index.
double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const std::int64_t> nodes);

/// 2TP / (2TP + FP + FN) pooled over every (node, class) pair of `nodes`,
/// predicting positive when probability >= threshold. Returns 0 when the
/// denominator is 0 (no positives predicted or present).
double micro_f1(const Matrix& probabilities, const Labels& labels, std::span<const std::int64_t> nodes,
                double threshold = 0.5);

/// Accuracy for single-label graphs, micro-F1 on sigmoid(logits) otherwise.
double task_metric(const Matrix& logits, const Labels& labels, std::span<const std::int64_t> nodes);

Matrix sigmoid(const Matrix& logits);

double mean(std::span<const double> xs);
/// Sample (n-1) standard deviation; 0 for a single sample.
double sample_std(std::span<const double> xs);

}  // namespace spic

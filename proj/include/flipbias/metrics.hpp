#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flipbias/dataset.hpp"

namespace flipbias {

struct ConfusionMatrix {
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tp = 0;

  std::uint64_t total() const { return tn + fp + fn + tp; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Predicted positive iff score > threshold (strictly). A score equal to the
/// threshold counts as a negative prediction.
ConfusionMatrix confusion_at_threshold(const ScoreVector& scores,
                                       const Dataset& data, double threshold);

/// tp/(tp+fn); 0 when the denominator is 0.
double recall(const ConfusionMatrix& m);
/// tp/(tp+fp); 0 when the denominator is 0.
double precision(const ConfusionMatrix& m);
/// Harmonic mean of precision and recall; 0 when both are 0.
double f1(const ConfusionMatrix& m);
double f1_from(double precision, double recall);

/// Probability that a uniformly random positive outscores a uniformly random
/// negative, ties counted 1/2. Computed exactly by sort + rank sum. Throws on
/// single-class data.
double auroc(const ScoreVector& scores, const Dataset& data);

/// One evaluated operating point.
struct MetricsReport {
  double threshold = 0.5;
  ConfusionMatrix matrix;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double auroc = 0.0;

  static std::string csv_header();
  /// threshold, tn, fp, fn, tp, recall, precision, f1, auroc; ratios with
  /// 4 decimal places.
  std::string csv_row() const;
};

MetricsReport evaluate(const ScoreVector& scores, const Dataset& data,
                       double threshold);

namespace detail {
/// Id-free cores shared with the harness's pooled evaluation.
ConfusionMatrix confusion_from_pairs(const std::vector<double>& scores,
                                     const std::vector<int>& labels,
                                     double threshold);
double auroc_from_pairs(std::vector<double> scores, const std::vector<int>& labels);
MetricsReport evaluate_pairs(const std::vector<double>& scores,
                             const std::vector<int>& labels, double threshold);
}  // namespace detail

}  // namespace flipbias

#include "flipbias/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace flipbias {

namespace detail {

ConfusionMatrix confusion_from_pairs(const std::vector<double>& scores,
                                     const std::vector<int>& labels,
                                     double threshold) {
  ConfusionMatrix m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted_positive = scores[i] > threshold;
    if (labels[i] == 1) {
      predicted_positive ? ++m.tp : ++m.fn;
    } else {
      predicted_positive ? ++m.fp : ++m.tn;
    }
  }
  return m;
}

double auroc_from_pairs(std::vector<double> scores, const std::vector<int>& labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::size_t n_pos = 0;
  for (int y : labels) {
    n_pos += static_cast<std::size_t>(y);
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auroc: needs at least one positive and one negative");
  }

  // Average ranks over tie groups, then Mann-Whitney U on the positives.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) {
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>((i + 1) + (j + 1));
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += avg_rank;
      }
    }
    i = j + 1;
  }
  const double u = rank_sum_pos -
                   0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MetricsReport evaluate_pairs(const std::vector<double>& scores,
                             const std::vector<int>& labels, double threshold) {
  MetricsReport report;
  report.threshold = threshold;
  report.matrix = confusion_from_pairs(scores, labels, threshold);
  report.recall = recall(report.matrix);
  report.precision = precision(report.matrix);
  report.f1 = f1(report.matrix);
  report.auroc = auroc_from_pairs(scores, labels);
  return report;
}

namespace {

std::pair<std::vector<double>, std::vector<int>> to_pairs(const ScoreVector& scores,
                                                          const Dataset& data) {
  scores.require_matches(data);
  std::vector<double> s;
  std::vector<int> y;
  s.reserve(data.size());
  y.reserve(data.size());
  for (const Example& ex : data.examples()) {
    s.push_back(scores.value_of(ex.id));
    y.push_back(ex.label);
  }
  return {std::move(s), std::move(y)};
}

}  // namespace

}  // namespace detail

ConfusionMatrix confusion_at_threshold(const ScoreVector& scores,
                                       const Dataset& data, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("confusion: threshold must be in [0,1]");
  }
  auto [s, y] = detail::to_pairs(scores, data);
  return detail::confusion_from_pairs(s, y, threshold);
}

double recall(const ConfusionMatrix& m) {
  const std::uint64_t denom = m.tp + m.fn;
  return denom == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(denom);
}

double precision(const ConfusionMatrix& m) {
  const std::uint64_t denom = m.tp + m.fp;
  return denom == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(denom);
}

double f1_from(double precision, double recall) {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

double f1(const ConfusionMatrix& m) { return f1_from(precision(m), recall(m)); }

double auroc(const ScoreVector& scores, const Dataset& data) {
  auto [s, y] = detail::to_pairs(scores, data);
  return detail::auroc_from_pairs(std::move(s), y);
}

MetricsReport evaluate(const ScoreVector& scores, const Dataset& data,
                       double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("evaluate: threshold must be in [0,1]");
  }
  auto [s, y] = detail::to_pairs(scores, data);
  return detail::evaluate_pairs(s, y, threshold);
}

std::string MetricsReport::csv_header() {
  return "threshold,tn,fp,fn,tp,recall,precision,f1,auroc";
}

std::string MetricsReport::csv_row() const {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%.4f,%llu,%llu,%llu,%llu,%.4f,%.4f,%.4f,%.4f",
                threshold, static_cast<unsigned long long>(matrix.tn),
                static_cast<unsigned long long>(matrix.fp),
                static_cast<unsigned long long>(matrix.fn),
                static_cast<unsigned long long>(matrix.tp), recall, precision, f1,
                auroc);
  return buf;
}

}  // namespace flipbias

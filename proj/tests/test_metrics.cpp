#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "flipbias/dataset.hpp"
#include "flipbias/metrics.hpp"
#include "flipbias/rng.hpp"

using namespace flipbias;

namespace {

Dataset labeled(const std::vector<int>& labels) {
  std::vector<Example> examples;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    examples.push_back({i, {0.0}, labels[i]});
  }
  return Dataset(std::move(examples), 1);
}

ScoreVector scored(const Dataset& data, const std::vector<double>& values) {
  return ScoreVector(data.ids(), values);
}

/// O(pos * neg) reference: count outscoring pairs, ties as half.
double auroc_brute_force(const std::vector<double>& scores,
                         const std::vector<int>& labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("confusion: strict threshold rule, equality predicts negative") {
  const Dataset d = labeled({1, 0, 1, 0});
  const ScoreVector s = scored(d, {0.5, 0.5, 0.7, 0.2});
  const ConfusionMatrix m = confusion_at_threshold(s, d, 0.5);
  CHECK(m.tp == 1);  // only the 0.7 positive clears the bar
  CHECK(m.fn == 1);  // the 0.5 positive does not
  CHECK(m.tn == 2);
  CHECK(m.fp == 0);
}

TEST_CASE("confusion: threshold zero turns every positive score into a call") {
  const Dataset d = labeled({1, 1, 0, 0});
  const ScoreVector s = scored(d, {0.9, 0.01, 0.6, 0.3});
  const ConfusionMatrix m = confusion_at_threshold(s, d, 0.0);
  CHECK(recall(m) == 1.0);
  CHECK(m.fp == 2);
  CHECK(m.tn == 0);
}

TEST_CASE("confusion: four-example hand matrix") {
  const Dataset d = labeled({1, 1, 0, 0});
  const ScoreVector s = scored(d, {0.9, 0.2, 0.8, 0.1});
  const ConfusionMatrix m = confusion_at_threshold(s, d, 0.5);
  CHECK(m == ConfusionMatrix{1, 1, 1, 1});
  CHECK(recall(m) == 0.5);
  CHECK(precision(m) == 0.5);
  CHECK(f1(m) == 0.5);
  CHECK(m.total() == 4);
}

TEST_CASE("f1 from published precision/recall pairs") {
  CHECK(std::abs(f1_from(0.98, 0.26) - 0.41) < 0.005);
  CHECK(std::abs(f1_from(0.53, 0.59) - 0.56) < 0.005);
  CHECK(f1_from(0.0, 0.0) == 0.0);
  CHECK(f1_from(1.0, 1.0) == 1.0);
}

TEST_CASE("degenerate denominators evaluate to zero, not NaN") {
  const ConfusionMatrix empty{4, 0, 0, 0};  // tn only
  CHECK(recall(empty) == 0.0);
  CHECK(precision(empty) == 0.0);
  CHECK(f1(empty) == 0.0);
}

TEST_CASE("half recall with perfect precision") {
  const ConfusionMatrix m{0, 0, 5, 5};
  CHECK(recall(m) == 0.5);
  CHECK(precision(m) == 1.0);
  CHECK(f1(m) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("auroc: separable data scores 1, constant scores 0.5") {
  const Dataset d = labeled({1, 1, 0, 0});
  CHECK(auroc(scored(d, {0.9, 0.8, 0.2, 0.1}), d) == 1.0);
  CHECK(auroc(scored(d, {0.4, 0.4, 0.4, 0.4}), d) == 0.5);
}

TEST_CASE("auroc: hand-counted pairs with ties") {
  const Dataset d = labeled({1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0});
  const std::vector<double> values = {0.9, 0.7, 0.7, 0.5, 0.3, 0.1,
                                      0.8, 0.7, 0.5, 0.5, 0.2, 0.1};
  const double expect = auroc_brute_force(values, {1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0});
  CHECK(auroc(scored(d, values), d) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("auroc: single-class data throws") {
  const Dataset pos = labeled({1, 1, 1});
  CHECK_THROWS_AS(auroc(scored(pos, {0.1, 0.2, 0.3}), pos), std::invalid_argument);
  const Dataset neg = labeled({0, 0});
  CHECK_THROWS_AS(auroc(scored(neg, {0.1, 0.2}), neg), std::invalid_argument);
}

TEST_CASE("auroc: rank-sum equals brute force on random tied instances") {
  rng::Engine engine(RngSeed{404});
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + engine.below(60);
    std::vector<int> labels(n);
    std::vector<double> values(n);
    labels[0] = 1;
    labels[1] = 0;
    for (std::size_t i = 2; i < n; ++i) {
      labels[i] = engine.below(2) == 0 ? 0 : 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      // quantize to force ties
      values[i] = static_cast<double>(engine.below(8)) / 7.0;
    }
    const Dataset d = labeled(labels);
    const double expect = auroc_brute_force(values, labels);
    CHECK(auroc(scored(d, values), d) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("auroc: complement symmetry") {
  // flipping labels and mirroring scores preserves the pair statistic
  rng::Engine engine(RngSeed{17});
  std::vector<int> labels;
  std::vector<double> values;
  std::vector<int> swapped;
  std::vector<double> mirrored;
  for (std::size_t i = 0; i < 40; ++i) {
    labels.push_back(i < 15 ? 1 : 0);
    values.push_back(static_cast<double>(engine.below(10)) / 9.0);
    swapped.push_back(1 - labels.back());
    mirrored.push_back(1.0 - values.back());
  }
  const Dataset a = labeled(labels);
  const Dataset b = labeled(swapped);
  CHECK(auroc(scored(a, values), a) ==
        doctest::Approx(auroc(scored(b, mirrored), b)).epsilon(1e-12));
}

TEST_CASE("threshold sweep: recall and false positives never increase") {
  rng::Engine engine(RngSeed{99});
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + engine.below(80);
    std::vector<int> labels(n);
    std::vector<double> values(n);
    labels[0] = 1;
    labels[1] = 0;
    for (std::size_t i = 2; i < n; ++i) {
      labels[i] = engine.below(2) == 0 ? 0 : 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = static_cast<double>(engine.below(20)) / 19.0;
    }
    const Dataset d = labeled(labels);
    const ScoreVector s = scored(d, values);
    ConfusionMatrix prev = confusion_at_threshold(s, d, 0.0);
    for (int step = 1; step <= 10; ++step) {
      const ConfusionMatrix cur =
          confusion_at_threshold(s, d, static_cast<double>(step) / 10.0);
      CHECK(cur.tp <= prev.tp);
      CHECK(cur.fp <= prev.fp);
      CHECK(recall(cur) <= recall(prev));
      CHECK(cur.total() == n);
      prev = cur;
    }
  }
}

TEST_CASE("evaluate: report fields are mutually consistent") {
  const Dataset d = labeled({1, 1, 1, 0, 0, 0, 0});
  const ScoreVector s = scored(d, {0.8, 0.6, 0.3, 0.7, 0.4, 0.2, 0.1});
  const MetricsReport report = evaluate(s, d, 0.5);
  CHECK(report.threshold == 0.5);
  CHECK(report.matrix == confusion_at_threshold(s, d, 0.5));
  CHECK(report.recall == recall(report.matrix));
  CHECK(report.precision == precision(report.matrix));
  CHECK(report.auroc == auroc(s, d));
  // harmonic-mean identity
  const double p = report.precision;
  const double r = report.recall;
  CHECK(std::abs(report.f1 - 2.0 * p * r / (p + r)) < 1e-12);
}

TEST_CASE("evaluate: csv row format") {
  CHECK(MetricsReport::csv_header() ==
        "threshold,tn,fp,fn,tp,recall,precision,f1,auroc");
  MetricsReport report;
  report.threshold = 0.5;
  report.matrix = {2, 1, 1, 3};
  report.recall = 0.75;
  report.precision = 0.75;
  report.f1 = 0.75;
  report.auroc = 0.875;
  CHECK(report.csv_row() == "0.5000,2,1,1,3,0.7500,0.7500,0.7500,0.8750");
}

TEST_CASE("evaluate: score ids must match the dataset") {
  const Dataset d = labeled({1, 0});
  const ScoreVector mismatched({5, 6}, {0.5, 0.5});
  CHECK_THROWS_AS(evaluate(mismatched, d, 0.5), std::invalid_argument);
}

#pragma once

#include <vector>

#include "flipbias/dataset.hpp"
#include "flipbias/rng.hpp"

namespace flipbias {

/// Two isotropic Gaussian clusters, one per class. Overlap is controlled by
/// |mean_pos - mean_neg| relative to cov_scale. n_per_class is the positive
/// count; the negative count is round(n_per_class * imbalance_ratio).
struct GaussianTaskSpec {
  std::size_t n_per_class = 100;
  std::vector<double> mean_neg{0.0, 0.0};
  std::vector<double> mean_pos{1.5, 1.5};
  double cov_scale = 1.0;
  double imbalance_ratio = 1.0;  // negatives per positive
  RngSeed seed;
};

/// Deterministic in the seed. Negatives come first (label 0), then positives;
/// ids are assigned sequentially from 0.
Dataset generate_gaussian_task(const GaussianTaskSpec& spec);

/// Duplicates minority examples (cycling in order) with additive seeded
/// jitter of jitter_scale * per-feature std until the class counts are equal.
/// Originals are untouched; duplicates get freshly minted ids starting at
/// max(first_new_id, max id of the input + 1). Callers holding sibling splits
/// should pass an id past the whole dataset so ids stay globally unique.
Dataset balance_by_oversampling(const Dataset& train, double jitter_scale,
                                RngSeed seed, ExampleId first_new_id = 0);

}  // namespace flipbias

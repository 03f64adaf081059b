#include "flipbias/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flipbias {

Dataset generate_gaussian_task(const GaussianTaskSpec& spec) {
  if (spec.n_per_class == 0) {
    throw std::invalid_argument("generate: n_per_class must be >= 1");
  }
  if (!(spec.cov_scale > 0.0) || !std::isfinite(spec.cov_scale)) {
    throw std::invalid_argument("generate: covariance scale must be finite and > 0");
  }
  if (!(spec.imbalance_ratio > 0.0) || !std::isfinite(spec.imbalance_ratio)) {
    throw std::invalid_argument("generate: imbalance_ratio must be finite and > 0");
  }
  const std::size_t dim = spec.mean_neg.size();
  if (dim == 0 || spec.mean_pos.size() != dim) {
    throw std::invalid_argument("generate: class means must share a dimension >= 1");
  }

  const std::size_t n_pos = spec.n_per_class;
  const std::size_t n_neg = static_cast<std::size_t>(
      std::llround(static_cast<double>(spec.n_per_class) * spec.imbalance_ratio));
  if (n_neg == 0) {
    throw std::invalid_argument("generate: imbalance_ratio too small, no negatives");
  }

  rng::Engine engine(rng::derive(spec.seed, rng::stream::kData));
  std::vector<Example> examples;
  examples.reserve(n_neg + n_pos);
  ExampleId next_id = 0;
  auto emit = [&](const std::vector<double>& mean, int label, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      Example ex;
      ex.id = next_id++;
      ex.label = label;
      ex.features.resize(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        ex.features[j] = mean[j] + spec.cov_scale * engine.normal();
      }
      examples.push_back(std::move(ex));
    }
  };
  emit(spec.mean_neg, 0, n_neg);
  emit(spec.mean_pos, 1, n_pos);
  return Dataset(std::move(examples), dim);
}

Dataset balance_by_oversampling(const Dataset& train, double jitter_scale,
                                RngSeed seed, ExampleId first_new_id) {
  if (!(jitter_scale >= 0.0) || !std::isfinite(jitter_scale)) {
    throw std::invalid_argument("balance: jitter_scale must be finite and >= 0");
  }
  const std::size_t n_pos = train.positive_count();
  const std::size_t n_neg = train.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("balance: both classes must be present");
  }
  if (n_pos == n_neg) {
    return train;
  }

  const int minority_label = n_pos < n_neg ? 1 : 0;
  const std::size_t need = n_pos < n_neg ? n_neg - n_pos : n_pos - n_neg;

  // Per-feature std over the whole training part (population form).
  const std::size_t dim = train.feature_dim();
  std::vector<double> mean(dim, 0.0);
  std::vector<double> sq(dim, 0.0);
  for (const Example& ex : train.examples()) {
    for (std::size_t j = 0; j < dim; ++j) {
      mean[j] += ex.features[j];
      sq[j] += ex.features[j] * ex.features[j];
    }
  }
  std::vector<double> stddev(dim, 0.0);
  const double inv_n = 1.0 / static_cast<double>(train.size());
  for (std::size_t j = 0; j < dim; ++j) {
    mean[j] *= inv_n;
    const double var = std::max(0.0, sq[j] * inv_n - mean[j] * mean[j]);
    stddev[j] = std::sqrt(var);
  }

  std::vector<const Example*> minority;
  for (const Example& ex : train.examples()) {
    if (ex.label == minority_label) {
      minority.push_back(&ex);
    }
  }

  rng::Engine engine(rng::derive(seed, rng::stream::kBalance));
  std::vector<Example> examples = train.examples();
  examples.reserve(train.size() + need);
  ExampleId next_id = std::max(first_new_id, train.max_id() + 1);
  for (std::size_t t = 0; t < need; ++t) {
    const Example& src = *minority[t % minority.size()];
    Example dup;
    dup.id = next_id++;
    dup.label = src.label;
    dup.features.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      dup.features[j] = src.features[j] + jitter_scale * stddev[j] * engine.normal();
    }
    examples.push_back(std::move(dup));
  }
  return Dataset(std::move(examples), dim);
}

}  // namespace flipbias

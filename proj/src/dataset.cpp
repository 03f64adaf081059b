#include "flipbias/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flipbias {

namespace {

void require_finite(const std::vector<double>& features, ExampleId id) {
  for (double v : features) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("dataset: non-finite feature in example id " +
                                  std::to_string(id));
    }
  }
}

}  // namespace

Dataset::Dataset(std::vector<Example> examples, std::size_t feature_dim)
    : examples_(std::move(examples)), feature_dim_(feature_dim) {
  index_.reserve(examples_.size());
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const Example& ex = examples_[i];
    if (ex.features.size() != feature_dim_) {
      throw std::invalid_argument("dataset: example id " + std::to_string(ex.id) +
                                  " has feature count " + std::to_string(ex.features.size()) +
                                  ", expected " + std::to_string(feature_dim_));
    }
    if (ex.label != 0 && ex.label != 1) {
      throw std::invalid_argument("dataset: example id " + std::to_string(ex.id) +
                                  " has non-binary label " + std::to_string(ex.label));
    }
    require_finite(ex.features, ex.id);
    if (!index_.emplace(ex.id, i).second) {
      throw std::invalid_argument("dataset: duplicate example id " + std::to_string(ex.id));
    }
  }
}

std::size_t Dataset::index_of(ExampleId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw std::invalid_argument("dataset: unknown example id " + std::to_string(id));
  }
  return it->second;
}

std::vector<ExampleId> Dataset::ids() const {
  std::vector<ExampleId> out;
  out.reserve(size());
  for (const Example& ex : examples_) {
    out.push_back(ex.id);
  }
  return out;
}

std::size_t Dataset::positive_count() const {
  std::size_t n = 0;
  for (const Example& ex : examples_) {
    n += static_cast<std::size_t>(ex.label);
  }
  return n;
}

ExampleId Dataset::max_id() const {
  ExampleId m = 0;
  for (const Example& ex : examples_) {
    m = std::max(m, ex.id);
  }
  return m;
}

bool Dataset::operator==(const Dataset& other) const {
  if (feature_dim_ != other.feature_dim_ || size() != other.size()) {
    return false;
  }
  for (std::size_t i = 0; i < size(); ++i) {
    const Example& a = examples_[i];
    const Example& b = other.examples_[i];
    if (a.id != b.id || a.label != b.label || a.features != b.features) {
      return false;
    }
  }
  return true;
}

ScoreVector::ScoreVector(std::vector<ExampleId> ids, std::vector<double> values)
    : ids_(std::move(ids)), values_(std::move(values)) {
  if (ids_.size() != values_.size()) {
    throw std::invalid_argument("scores: id/value size mismatch");
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!(values_[i] >= 0.0 && values_[i] <= 1.0)) {
      throw std::invalid_argument("scores: value outside [0,1] for id " +
                                  std::to_string(ids_[i]));
    }
    if (!index_.emplace(ids_[i], i).second) {
      throw std::invalid_argument("scores: duplicate id " + std::to_string(ids_[i]));
    }
  }
}

double ScoreVector::value_of(ExampleId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw std::invalid_argument("scores: unknown id " + std::to_string(id));
  }
  return values_[it->second];
}

void ScoreVector::require_matches(const Dataset& data) const {
  if (size() != data.size()) {
    throw std::invalid_argument("scores: size " + std::to_string(size()) +
                                " does not match dataset size " + std::to_string(data.size()));
  }
  for (const Example& ex : data.examples()) {
    if (!has(ex.id)) {
      throw std::invalid_argument("scores: missing id " + std::to_string(ex.id));
    }
  }
}

std::size_t floor_count(std::size_t n, double fraction) {
  const double x = static_cast<double>(n) * fraction;
  return static_cast<std::size_t>(std::floor(x + 1e-9));
}

std::size_t round_half_up_count(std::size_t n, double fraction) {
  const double x = static_cast<double>(n) * fraction;
  return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

SplitResult split_dataset(const Dataset& data, const SplitSpec& spec) {
  if (data.empty()) {
    throw std::invalid_argument("split: dataset is empty");
  }
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw std::invalid_argument("split: train_fraction must be in (0,1)");
  }
  if (!(spec.val_fraction_of_train >= 0.0 && spec.val_fraction_of_train < 1.0)) {
    throw std::invalid_argument("split: val_fraction_of_train must be in [0,1)");
  }

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  rng::Engine engine(rng::derive(spec.seed, rng::stream::kSplit));
  engine.shuffle(order);

  const std::size_t n = data.size();
  const std::size_t n_test = floor_count(n, 1.0 - spec.train_fraction);
  const std::size_t pool = n - n_test;
  const std::size_t n_val = floor_count(pool, spec.val_fraction_of_train);

  auto take = [&](std::size_t begin, std::size_t end) {
    std::vector<Example> part;
    part.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      part.push_back(data.at(order[i]));
    }
    return Dataset(std::move(part), data.feature_dim());
  };

  SplitResult out;
  out.test = take(0, n_test);
  out.val = take(n_test, n_test + n_val);
  out.train = take(n_test + n_val, n);
  return out;
}

Dataset relabel(const Dataset& data,
                const std::vector<std::pair<ExampleId, int>>& flips) {
  std::vector<Example> examples = data.examples();
  for (const auto& [id, new_label] : flips) {
    if (new_label != 0 && new_label != 1) {
      throw std::invalid_argument("relabel: non-binary label " + std::to_string(new_label) +
                                  " for id " + std::to_string(id));
    }
    examples[data.index_of(id)].label = new_label;
  }
  return Dataset(std::move(examples), data.feature_dim());
}

}  // namespace flipbias

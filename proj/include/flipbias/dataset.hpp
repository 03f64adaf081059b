#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "flipbias/rng.hpp"

namespace flipbias {

using ExampleId = std::uint64_t;

/// One labeled example. Labels are stored as integers in {0,1} rather than
/// bools so flip-count arithmetic stays explicit.
struct Example {
  ExampleId id = 0;
  std::vector<double> features;
  int label = 0;
};

/// Immutable-after-construction collection of examples with a shared feature
/// dimension, unique ids and stable order. All operations on it are pure.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Example> examples, std::size_t feature_dim);

  const std::vector<Example>& examples() const { return examples_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  std::size_t feature_dim() const { return feature_dim_; }

  const Example& at(std::size_t index) const { return examples_[index]; }
  bool contains(ExampleId id) const { return index_.count(id) != 0; }
  std::size_t index_of(ExampleId id) const;
  const Example& by_id(ExampleId id) const { return examples_[index_of(id)]; }

  std::vector<ExampleId> ids() const;
  std::size_t positive_count() const;
  std::size_t negative_count() const { return size() - positive_count(); }
  ExampleId max_id() const;

  bool operator==(const Dataset& other) const;

 private:
  std::vector<Example> examples_;
  std::size_t feature_dim_ = 0;
  std::unordered_map<ExampleId, std::size_t> index_;
};

/// Per-example scores, keyed by id, each in [0,1]. Iteration order matches
/// the dataset the scores were produced from.
class ScoreVector {
 public:
  ScoreVector() = default;
  ScoreVector(std::vector<ExampleId> ids, std::vector<double> values);

  std::size_t size() const { return ids_.size(); }
  const std::vector<ExampleId>& ids() const { return ids_; }
  const std::vector<double>& values() const { return values_; }
  double value_of(ExampleId id) const;
  bool has(ExampleId id) const { return index_.count(id) != 0; }

  /// Throws unless the score ids are exactly the dataset ids.
  void require_matches(const Dataset& data) const;

 private:
  std::vector<ExampleId> ids_;
  std::vector<double> values_;
  std::unordered_map<ExampleId, std::size_t> index_;
};

/// Split fractions plus the seed that fixes the shuffle.
struct SplitSpec {
  double train_fraction = 0.8;
  double val_fraction_of_train = 0.2;
  RngSeed seed;
};

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Partitions by seeded shuffle of ids followed by contiguous slicing. The
/// test part gets floor(n * (1 - train_fraction)) examples and the val part
/// floor of the remaining pool times val_fraction_of_train; leftovers stay
/// in train.
SplitResult split_dataset(const Dataset& data, const SplitSpec& spec);

/// Returns a copy of `data` with the listed labels replaced. Unknown ids and
/// non-binary labels throw; the input is never modified.
Dataset relabel(const Dataset& data, const std::vector<std::pair<ExampleId, int>>& flips);

/// floor(n * fraction) with a tiny guard for the binary representation of
/// decimal fractions (100 * (1 - 0.8) must count as 20, not 19).
std::size_t floor_count(std::size_t n, double fraction);

/// round-half-up of fraction * n, same representation guard.
std::size_t round_half_up_count(std::size_t n, double fraction);

}  // namespace flipbias

#include "flipbias/bias.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "flipbias/rng.hpp"

namespace flipbias {

Direction parse_direction(const std::string& name) {
  if (name == "minimize_fn") return Direction::minimize_fn;
  if (name == "minimize_fp") return Direction::minimize_fp;
  throw std::invalid_argument("unknown direction '" + name +
                              "' (expected minimize_fn or minimize_fp)");
}

SelectionPolicy parse_policy(const std::string& name) {
  if (name == "score_ranked") return SelectionPolicy::score_ranked;
  if (name == "seeded_random") return SelectionPolicy::seeded_random;
  throw std::invalid_argument("unknown selection policy '" + name +
                              "' (expected score_ranked or seeded_random)");
}

std::string to_string(Direction direction) {
  return direction == Direction::minimize_fn ? "minimize_fn" : "minimize_fp";
}

std::string to_string(SelectionPolicy policy) {
  return policy == SelectionPolicy::score_ranked ? "score_ranked" : "seeded_random";
}

std::vector<ExampleId> FlipRecord::flipped_ids() const {
  std::vector<ExampleId> ids;
  ids.reserve(entries.size());
  for (const FlipEntry& e : entries) {
    ids.push_back(e.id);
  }
  return ids;
}

std::string FlipRecord::csv_header() { return "id,old_label,new_label,score"; }

std::string FlipRecord::to_csv() const {
  std::string out = csv_header() + "\n";
  char buf[96];
  for (const FlipEntry& e : entries) {
    std::snprintf(buf, sizeof(buf), "%llu,%d,%d,%.17g\n",
                  static_cast<unsigned long long>(e.id), e.old_label, e.new_label,
                  e.score);
    out += buf;
  }
  return out;
}

Pool identify_pool(const Classifier& model, const Dataset& train,
                   Direction direction, double threshold) {
  const ScoreVector scores = predict_scores(model, train);

  Pool pool;
  pool.direction = direction;
  pool.threshold = threshold;
  pool.source_matrix = confusion_at_threshold(scores, train, threshold);

  for (std::size_t i = 0; i < train.size(); ++i) {
    const Example& ex = train.at(i);
    const double s = scores.values()[i];
    const bool predicted_positive = s > threshold;
    if (direction == Direction::minimize_fn) {
      if (ex.label == 0 && predicted_positive) {
        pool.entries.emplace_back(ex.id, s);
      }
    } else {
      if (ex.label == 1 && !predicted_positive) {
        pool.entries.emplace_back(ex.id, s);
      }
    }
  }

  // Most confidently wrong first; ties broken by id for a stable order.
  if (direction == Direction::minimize_fn) {
    std::stable_sort(pool.entries.begin(), pool.entries.end(),
                     [](const auto& a, const auto& b) {
                       if (a.second != b.second) return a.second > b.second;
                       return a.first < b.first;
                     });
  } else {
    std::stable_sort(pool.entries.begin(), pool.entries.end(),
                     [](const auto& a, const auto& b) {
                       if (a.second != b.second) return a.second < b.second;
                       return a.first < b.first;
                     });
  }
  return pool;
}

std::pair<Dataset, FlipRecord> apply_label_flip(const Dataset& train,
                                                const Pool& pool,
                                                const BiasPlan& plan) {
  if (plan.flip_fraction < 0.0 || plan.flip_fraction > 1.0) {
    throw std::invalid_argument("flip_fraction must lie in [0,1]");
  }
  for (const auto& [id, score] : pool.entries) {
    (void)score;
    if (!train.contains(id)) {
      throw std::invalid_argument("pool id " + std::to_string(id) +
                                  " is not in the training set");
    }
  }

  const std::size_t k = round_half_up_count(pool.size(), plan.flip_fraction);

  std::vector<std::pair<ExampleId, double>> chosen;
  if (plan.policy == SelectionPolicy::score_ranked || k == pool.size()) {
    chosen.assign(pool.entries.begin(), pool.entries.begin() + k);
  } else {
    std::vector<std::pair<ExampleId, double>> shuffled = pool.entries;
    rng::Engine engine(rng::derive(plan.retrain.seed, rng::stream::kFlipSelect));
    engine.shuffle(shuffled);
    chosen.assign(shuffled.begin(), shuffled.begin() + k);
  }

  const int old_label = plan.direction == Direction::minimize_fn ? 0 : 1;
  const int new_label = 1 - old_label;

  FlipRecord record;
  record.direction = plan.direction;
  record.flip_fraction = plan.flip_fraction;
  record.source_matrix = pool.source_matrix;
  std::vector<std::pair<ExampleId, int>> flips;
  flips.reserve(chosen.size());
  record.entries.reserve(chosen.size());
  for (const auto& [id, score] : chosen) {
    if (train.by_id(id).label != old_label) {
      throw std::invalid_argument("pool id " + std::to_string(id) +
                                  " does not carry the label its direction flips");
    }
    flips.emplace_back(id, new_label);
    record.entries.push_back(FlipEntry{id, old_label, new_label, score});
  }

  return {relabel(train, flips), std::move(record)};
}

std::pair<Classifier, FlipRecord> run_label_flip_method(const Classifier& pretrained,
                                                        const Dataset& train,
                                                        const BiasPlan& plan) {
  TrainConfig retrain = plan.retrain;
  if (!retrain.warm_start.has_value()) {
    retrain.warm_start = pretrained;
  } else if (!(*retrain.warm_start == pretrained)) {
    throw std::invalid_argument("retrain.warm_start differs from the pretrained model");
  }

  const Pool pool = identify_pool(pretrained, train, plan.direction, plan.pool_threshold);
  auto [flipped, record] = apply_label_flip(train, pool, plan);
  Classifier retrained = flipbias::train(flipped, pretrained.spec, retrain);
  return {std::move(retrained), std::move(record)};
}

Classifier train_with_class_weights(const Dataset& train, const ClassifierSpec& spec,
                                    TrainConfig config, const ClassWeights& weights) {
  config.weights = weights;
  return flipbias::train(train, spec, config);
}

ConfusionMatrix threshold_shift_predict(const Classifier& model, const Dataset& data,
                                        double threshold) {
  return confusion_at_threshold(predict_scores(model, data), data, threshold);
}

ScoreVector ensemble_scores(const std::vector<Classifier>& models, const Dataset& data) {
  if (models.empty()) {
    throw std::invalid_argument("ensemble needs at least one model");
  }
  std::vector<ScoreVector> member;
  member.reserve(models.size());
  for (const Classifier& m : models) {
    member.push_back(predict_scores(m, data));
  }

  const std::size_t n = data.size();
  std::vector<ExampleId> ids = member.front().ids();
  std::vector<double> values(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    double lo = member.front().values()[i];
    double hi = lo;
    for (const ScoreVector& sv : member) {
      const double s = sv.values()[i];
      sum += s;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    values[i] = std::clamp(sum / static_cast<double>(models.size()), lo, hi);
  }
  return ScoreVector(std::move(ids), std::move(values));
}

}  // namespace flipbias

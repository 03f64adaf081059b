#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flipbias/dataset.hpp"
#include "flipbias/metrics.hpp"
#include "flipbias/model.hpp"

namespace flipbias {

/// Which error class the retraining should push down.
enum class Direction { minimize_fn, minimize_fp };

/// How the flipped subset is drawn from the pool when flip_fraction < 1.
enum class SelectionPolicy { score_ranked, seeded_random };

Direction parse_direction(const std::string& name);
SelectionPolicy parse_policy(const std::string& name);
std::string to_string(Direction direction);
std::string to_string(SelectionPolicy policy);

struct BiasPlan {
  Direction direction = Direction::minimize_fn;
  double flip_fraction = 1.0;
  SelectionPolicy policy = SelectionPolicy::score_ranked;
  double pool_threshold = 0.5;
  TrainConfig retrain;
};

/// The candidate set produced by predicting on the training data: false
/// positives for minimize_fn, false negatives for minimize_fp, ordered most
/// confidently wrong first (descending score for FPs, ascending for FNs,
/// ties by ascending id).
struct Pool {
  Direction direction = Direction::minimize_fn;
  double threshold = 0.5;
  std::vector<std::pair<ExampleId, double>> entries;  // (id, score)
  ConfusionMatrix source_matrix;

  std::size_t size() const { return entries.size(); }
};

struct FlipEntry {
  ExampleId id = 0;
  int old_label = 0;
  int new_label = 0;
  double score = 0.0;
};

/// What was flipped and the confusion matrix it was drawn from. The entry
/// order is the order the flips were taken in.
struct FlipRecord {
  Direction direction = Direction::minimize_fn;
  double flip_fraction = 0.0;
  std::vector<FlipEntry> entries;
  ConfusionMatrix source_matrix;

  std::vector<ExampleId> flipped_ids() const;
  static std::string csv_header();
  std::string to_csv() const;  // header plus one line per entry
};

/// Predicts on `train` and collects the wrongly-classified ids for the given
/// direction at the given threshold (predicted positive iff score strictly
/// above it).
Pool identify_pool(const Classifier& model, const Dataset& train,
                   Direction direction, double threshold);

/// Flips round_half_up(flip_fraction * |pool|) labels: the leading entries
/// under score_ranked, a seeded uniform draw under seeded_random (seed derived
/// from plan.retrain.seed). minimize_fn flips 0 to 1, minimize_fp 1 to 0. The
/// input dataset is returned as a modified copy.
std::pair<Dataset, FlipRecord> apply_label_flip(const Dataset& train,
                                                const Pool& pool,
                                                const BiasPlan& plan);

/// identify_pool + apply_label_flip + warm-start retrain on the flipped copy.
/// plan.retrain.warm_start must be empty (it is filled with `pretrained`) or
/// already equal to `pretrained`. The caller's dataset keeps its original
/// labels; evaluation is expected to use those.
std::pair<Classifier, FlipRecord> run_label_flip_method(const Classifier& pretrained,
                                                        const Dataset& train,
                                                        const BiasPlan& plan);

/// models::train with the weights taken from `weights`; exists so sweeps
/// treat all methods uniformly.
Classifier train_with_class_weights(const Dataset& train, const ClassifierSpec& spec,
                                    TrainConfig config, const ClassWeights& weights);

/// The moved-boundary baseline: score the data and count at `threshold`.
ConfusionMatrix threshold_shift_predict(const Classifier& model, const Dataset& data,
                                        double threshold);

/// Per-id arithmetic mean of the member scores, nudged back into the members'
/// per-id [min, max] envelope when rounding lands outside it.
ScoreVector ensemble_scores(const std::vector<Classifier>& models, const Dataset& data);

}  // namespace flipbias

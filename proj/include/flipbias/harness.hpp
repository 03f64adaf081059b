#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flipbias/bias.hpp"
#include "flipbias/csv_io.hpp"
#include "flipbias/datagen.hpp"
#include "flipbias/dataset.hpp"
#include "flipbias/metrics.hpp"
#include "flipbias/model.hpp"

namespace flipbias {

enum class SweepMethod { label_flip, class_weights, threshold };

SweepMethod parse_method(const std::string& name);
std::string to_string(SweepMethod method);

struct WeightPair {
  double w_neg = 1.0;
  double w_pos = 1.0;
};

/// Data source for a run: a synthetic Gaussian task regenerated from the
/// replicate seed, or a fixed CSV file (splits and model seeds still vary
/// per replicate).
struct SweepTask {
  enum class Kind { gaussian, csv };

  Kind kind = Kind::gaussian;
  GaussianTaskSpec gaussian;
  std::string csv_path;
  CsvSchema csv_schema;
};

/// One experiment grid: a ladder of method parameters crossed with seeded
/// replicates. Only the ladder matching `method` is read. All randomness
/// fans out of base_seed: replicate r uses
///   rep = derive(derive(base_seed, kReplicate), r)
/// as the data/split/balance seed, derive(rep, kPretrain) for the base model
/// and derive(rep, kRetrain) for warm-start retraining, so every cell within
/// a replicate shares the same data and base model.
struct SweepSpec {
  SweepTask task;
  ClassifierSpec model;
  TrainConfig train;
  SweepMethod method = SweepMethod::label_flip;
  std::vector<double> flip_ladder{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<WeightPair> weight_ladder;
  std::vector<double> threshold_ladder;
  Direction direction = Direction::minimize_fn;
  SelectionPolicy policy = SelectionPolicy::score_ranked;
  double pool_threshold = 0.5;
  std::size_t replicates = 1;
  RngSeed base_seed{42};
  double train_fraction = 0.8;
  double val_fraction = 0.2;
  bool balance = true;
  double jitter = 0.05;
  double eval_threshold = 0.5;
};

/// One report line. Metric columns hold the method arm's test metrics next
/// to the shared base model's. replicate is an index, or "mean"/"std" on
/// aggregate rows (population std; seed column empty there).
struct SweepRow {
  std::string parameter;
  std::string replicate;
  std::string seed;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double auroc = 0.0;
  double base_recall = 0.0;
  double base_precision = 0.0;
  double base_f1 = 0.0;
  std::string status = "ok";
};

/// Everything one (parameter, replicate) cell produced beyond its row.
struct CellArtifacts {
  std::string name;  // "<method>_<parameter>_r<replicate>", filesystem-safe
  std::string parameter;
  std::size_t replicate = 0;
  double eval_threshold = 0.5;
  Classifier model;
  std::optional<FlipRecord> flips;
  MetricsReport report;
};

/// Per-replicate context kept for hygiene audits and data export.
struct ReplicateArtifacts {
  std::size_t replicate = 0;
  RngSeed seed;
  Dataset train;  // as trained on (after optional balancing)
  Dataset test;
  std::vector<ExampleId> val_ids;
  Classifier base_model;
  MetricsReport base_report;
};

struct SweepReport {
  SweepMethod method = SweepMethod::label_flip;
  std::vector<SweepRow> rows;        // parameter-major, replicate-minor
  std::vector<SweepRow> aggregates;  // mean and std per parameter, same order
  std::vector<CellArtifacts> cells;
  std::vector<ReplicateArtifacts> replicates;

  static std::string csv_header();
  /// Data rows then aggregate rows, byte-deterministic.
  std::string to_csv() const;
  /// Aggregate means as an aligned table: parameter, Recall, Precision,
  /// F1 score, AUROC.
  std::string to_markdown() const;
};

/// Runs the grid. A failed cell becomes a row with its error message in the
/// status column, not a crash. Flipped ids are asserted disjoint from the
/// val/test ids and test labels are asserted untouched before any row is
/// emitted.
SweepReport run_sweep(const SweepSpec& spec);

/// Before/after ensemble comparison: per replicate, every model spec is
/// pretrained, the label-flip method is applied to each, and the score
/// ensembles of the base and retrained groups are evaluated on the test
/// split. The headline rows pool scores across replicates.
struct CompareSpec {
  SweepTask task;
  std::vector<ClassifierSpec> models;  // at least 2
  TrainConfig train;
  BiasPlan plan;  // retrain seed and warm start are filled per cell
  std::size_t replicates = 1;
  RngSeed base_seed{42};
  double train_fraction = 0.8;
  double val_fraction = 0.2;
  bool balance = true;
  double jitter = 0.05;
  double eval_threshold = 0.5;
};

struct CompareReport {
  MetricsReport before;  // pooled over all replicates' test scores
  MetricsReport after;
  std::vector<SweepRow> detail;  // per-replicate rows, parameter Before/After
  std::vector<CellArtifacts> cells;
  std::vector<ReplicateArtifacts> replicates;

  static std::string csv_header();
  /// Exactly two rows, Before and After.
  std::string to_csv() const;
  std::string to_markdown() const;
  std::string detail_csv() const;
};

CompareReport compare_before_after(const CompareSpec& spec);

/// Fig.-4-style export row: projected coordinates plus confusion outcome.
struct ScatterRow {
  ExampleId id = 0;
  double x = 0.0;
  double y = 0.0;
  int true_label = 0;
  int pred_label = 0;
  std::string outcome;  // TP, TN, FP or FN
  bool flipped = false;
};

/// Scores `data` with `model`, tags outcomes at `threshold` and projects
/// features to 2-D: identity for 2-D data, first two principal axes (largest
/// eigenvalues of the feature covariance, deterministic Jacobi sweep)
/// otherwise.
std::vector<ScatterRow> make_scatter(const Classifier& model, const Dataset& data,
                                     const std::vector<ExampleId>& flipped_ids,
                                     double threshold);

/// scatter.csv plus a self-contained scatter.svg under dir, one marker shape
/// per outcome, flipped examples ringed.
void export_scatter(const std::vector<ScatterRow>& rows, const std::string& dir);
void export_scatter(const Classifier& model, const Dataset& data,
                    const std::vector<ExampleId>& flipped_ids, double threshold,
                    const std::string& dir);

/// report.csv and report.md under dir.
void export_tables(const SweepReport& report, const std::string& dir);
void export_tables(const CompareReport& report, const std::string& dir);

/// The full directory layout: report.csv, report.md, scatter.csv,
/// scatter.svg, flips/<cell>.csv, models/<cell>.txt, data/r<k>_test.csv
/// (compare runs add detail.csv and skip per-cell flips files for cells
/// without flips).
void export_run_outputs(const SweepReport& report, const std::string& dir);
void export_run_outputs(const CompareReport& report, const std::string& dir);

}  // namespace flipbias

#include "flipbias/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "flipbias/kernels.hpp"
#include "flipbias/rng.hpp"

namespace flipbias {

namespace {

namespace fs = std::filesystem;

std::string fmt(const char* form, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), form, v);
  return buf;
}

std::string fmt_g(double v) { return fmt("%g", v); }
std::string fmt_f4(double v) { return fmt("%.4f", v); }
std::string fmt_f2(double v) { return fmt("%.2f", v); }

/// "0.2" -> "0p2", "1:50" -> "1_50"; keeps cell names filesystem-safe.
std::string file_token(std::string s) {
  for (char& c : s) {
    if (c == '.') {
      c = 'p';
    } else if (c == ':') {
      c = '_';
    }
  }
  return s;
}

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') {
      c = ';';
    }
  }
  return s;
}

/// Internal-bug escape hatch: hygiene violations must abort the run, never
/// degrade into error rows.
struct HygieneError : std::logic_error {
  using std::logic_error::logic_error;
};

void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
  }
}

void validate_task(const SweepTask& task, const ClassifierSpec& model) {
  model.validate();
  if (task.kind == SweepTask::Kind::gaussian) {
    if (task.gaussian.mean_neg.size() != model.feature_dim) {
      throw std::invalid_argument("task dimension " +
                                  std::to_string(task.gaussian.mean_neg.size()) +
                                  " does not match model feature_dim " +
                                  std::to_string(model.feature_dim));
    }
  } else {
    if (task.csv_path.empty()) {
      throw std::invalid_argument("csv task needs a path");
    }
    if (task.csv_schema.feature_columns.size() != model.feature_dim) {
      throw std::invalid_argument("csv schema has " +
                                  std::to_string(task.csv_schema.feature_columns.size()) +
                                  " feature columns, model expects " +
                                  std::to_string(model.feature_dim));
    }
  }
}

void validate_run_shape(std::size_t replicates, double train_fraction,
                        double val_fraction, double jitter, double eval_threshold) {
  if (replicates == 0) {
    throw std::invalid_argument("replicates must be >= 1");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0,1)");
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("val_fraction must lie in [0,1)");
  }
  if (!(jitter >= 0.0) || !std::isfinite(jitter)) {
    throw std::invalid_argument("jitter must be finite and >= 0");
  }
  require_unit(eval_threshold, "eval_threshold");
}

std::vector<std::string> ladder_tokens(const SweepSpec& spec) {
  std::vector<std::string> tokens;
  switch (spec.method) {
    case SweepMethod::label_flip:
      for (double f : spec.flip_ladder) {
        require_unit(f, "flip fraction");
        tokens.push_back(fmt_g(f));
      }
      break;
    case SweepMethod::class_weights:
      for (const WeightPair& w : spec.weight_ladder) {
        if (!(w.w_neg > 0.0) || !(w.w_pos > 0.0) || !std::isfinite(w.w_neg) ||
            !std::isfinite(w.w_pos)) {
          throw std::invalid_argument("class weights must be finite and > 0");
        }
        tokens.push_back(fmt_g(w.w_neg) + ":" + fmt_g(w.w_pos));
      }
      break;
    case SweepMethod::threshold:
      for (double t : spec.threshold_ladder) {
        require_unit(t, "threshold ladder value");
        tokens.push_back(fmt_g(t));
      }
      break;
  }
  if (tokens.empty()) {
    throw std::invalid_argument("the ladder for method " + to_string(spec.method) +
                                " is empty");
  }
  return tokens;
}

struct ReplicatePrep {
  RngSeed rep_seed;
  Dataset data;
  SplitResult split;
  Dataset train_set;
};

RngSeed replicate_seed(RngSeed base, std::size_t r) {
  return rng::derive(rng::derive(base, rng::stream::kReplicate),
                     static_cast<std::uint64_t>(r));
}

ReplicatePrep prepare_replicate(const SweepTask& task,
                                const std::optional<Dataset>& csv_data, RngSeed base_seed,
                                std::size_t r, double train_fraction, double val_fraction,
                                bool balance, double jitter) {
  ReplicatePrep prep;
  prep.rep_seed = replicate_seed(base_seed, r);
  if (task.kind == SweepTask::Kind::csv) {
    prep.data = *csv_data;
  } else {
    GaussianTaskSpec g = task.gaussian;
    g.seed = prep.rep_seed;
    prep.data = generate_gaussian_task(g);
  }
  SplitSpec split_spec;
  split_spec.train_fraction = train_fraction;
  split_spec.val_fraction_of_train = val_fraction;
  split_spec.seed = prep.rep_seed;
  prep.split = split_dataset(prep.data, split_spec);
  prep.train_set = balance
                       ? balance_by_oversampling(prep.split.train, jitter, prep.rep_seed,
                                                 prep.data.max_id() + 1)
                       : prep.split.train;
  return prep;
}

void assert_test_untouched(const Dataset& test, const Dataset& original) {
  for (const Example& ex : test.examples()) {
    const Example& src = original.by_id(ex.id);
    if (src.label != ex.label || src.features != ex.features) {
      throw HygieneError("hygiene: test example " + std::to_string(ex.id) +
                         " differs from the source data");
    }
  }
}

void assert_flips_disjoint(const FlipRecord& rec, const Dataset& test,
                           const std::unordered_set<ExampleId>& val_ids) {
  for (const FlipEntry& e : rec.entries) {
    if (test.contains(e.id)) {
      throw HygieneError("hygiene: flipped id " + std::to_string(e.id) +
                         " appears in the test split");
    }
    if (val_ids.count(e.id) != 0) {
      throw HygieneError("hygiene: flipped id " + std::to_string(e.id) +
                         " appears in the val split");
    }
  }
}

void fill_metrics(SweepRow& row, const MetricsReport& method_report,
                  const MetricsReport& base_report) {
  row.recall = method_report.recall;
  row.precision = method_report.precision;
  row.f1 = method_report.f1;
  row.auroc = method_report.auroc;
  row.base_recall = base_report.recall;
  row.base_precision = base_report.precision;
  row.base_f1 = base_report.f1;
}

using MetricField = double SweepRow::*;
constexpr std::array<MetricField, 7> kMetricFields = {
    &SweepRow::recall,         &SweepRow::precision, &SweepRow::f1,
    &SweepRow::auroc,          &SweepRow::base_recall,
    &SweepRow::base_precision, &SweepRow::base_f1};

double ordered_mean(const std::vector<double>& v, bool reversed) {
  double sum = 0.0;
  if (reversed) {
    for (auto it = v.rbegin(); it != v.rend(); ++it) {
      sum += *it;
    }
  } else {
    for (double x : v) {
      sum += x;
    }
  }
  return sum / static_cast<double>(v.size());
}

double ordered_var(const std::vector<double>& v, double mean, bool reversed) {
  double sum = 0.0;
  auto add = [&](double x) {
    const double d = x - mean;
    sum += d * d;
  };
  if (reversed) {
    for (auto it = v.rbegin(); it != v.rend(); ++it) {
      add(*it);
    }
  } else {
    for (double x : v) {
      add(x);
    }
  }
  return sum / static_cast<double>(v.size());
}

/// mean and population-std rows per parameter, cross-checked against a
/// second accumulation order to 1e-12.
std::vector<SweepRow> aggregate_rows(const std::vector<SweepRow>& rows,
                                     const std::vector<std::string>& params,
                                     std::size_t replicates) {
  std::vector<SweepRow> out;
  for (std::size_t li = 0; li < params.size(); ++li) {
    std::vector<const SweepRow*> ok;
    for (std::size_t r = 0; r < replicates; ++r) {
      const SweepRow& row = rows[li * replicates + r];
      if (row.status == "ok") {
        ok.push_back(&row);
      }
    }
    SweepRow mean_row;
    SweepRow std_row;
    mean_row.parameter = std_row.parameter = params[li];
    mean_row.replicate = "mean";
    std_row.replicate = "std";
    mean_row.seed = std_row.seed = "";
    const std::size_t errors = replicates - ok.size();
    mean_row.status = std_row.status =
        errors == 0 ? "ok" : "errors=" + std::to_string(errors);
    if (!ok.empty()) {
      for (MetricField field : kMetricFields) {
        std::vector<double> values;
        values.reserve(ok.size());
        for (const SweepRow* row : ok) {
          values.push_back(row->*field);
        }
        const double mean = ordered_mean(values, false);
        const double var = ordered_var(values, mean, false);
        if (std::fabs(mean - ordered_mean(values, true)) > 1e-12 ||
            std::fabs(var - ordered_var(values, mean, true)) > 1e-12) {
          throw std::runtime_error("aggregate consistency check failed");
        }
        mean_row.*field = mean;
        std_row.*field = std::sqrt(var);
      }
    }
    out.push_back(std::move(mean_row));
    out.push_back(std::move(std_row));
  }
  return out;
}

std::string row_csv(const std::string& method, const SweepRow& r) {
  return method + "," + r.parameter + "," + r.replicate + "," + r.seed + "," +
         fmt_f4(r.recall) + "," + fmt_f4(r.precision) + "," + fmt_f4(r.f1) + "," +
         fmt_f4(r.auroc) + "," + fmt_f4(r.base_recall) + "," +
         fmt_f4(r.base_precision) + "," + fmt_f4(r.base_f1) + "," +
         csv_safe(r.status);
}

/// Pipe table with a left-aligned first column and right-aligned numbers.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    width[i] = header[i].size();
  }
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      width[i] = std::max(width[i], row[i].size());
    }
  }
  auto pad_left = [](const std::string& s, std::size_t n) {
    return std::string(n - s.size(), ' ') + s;
  };
  auto pad_right = [](const std::string& s, std::size_t n) {
    return s + std::string(n - s.size(), ' ');
  };
  std::string out = "|";
  for (std::size_t i = 0; i < header.size(); ++i) {
    out += " " + pad_right(header[i], width[i]) + " |";
  }
  out += "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) {
    out += " " + std::string(width[i], '-') + " |";
  }
  out += "\n";
  for (const auto& row : rows) {
    out += "|";
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += " " +
             (i == 0 ? pad_right(row[i], width[i]) : pad_left(row[i], width[i])) +
             " |";
    }
    out += "\n";
  }
  return out;
}

std::string parameter_label(SweepMethod method) {
  switch (method) {
    case SweepMethod::label_flip:
      return "Percentage of change";
    case SweepMethod::class_weights:
      return "Class weights";
    case SweepMethod::threshold:
      return "Boundary line";
  }
  return "Parameter";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << content;
  if (!out.good()) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

std::string replicate_file(std::size_t r, const char* suffix) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "r%02zu%s", r, suffix);
  return buf;
}

void export_replicate_data(const std::vector<ReplicateArtifacts>& replicates,
                           const std::string& dir) {
  for (const ReplicateArtifacts& rep : replicates) {
    save_csv(rep.test, (fs::path(dir) / "data" / replicate_file(rep.replicate, "_test.csv")).string(),
             default_schema(rep.test.feature_dim()));
  }
}

void export_cells(const std::vector<CellArtifacts>& cells, const std::string& dir) {
  for (const CellArtifacts& cell : cells) {
    save_classifier(cell.model, (fs::path(dir) / "models" / (cell.name + ".txt")).string());
    if (cell.flips.has_value()) {
      write_file(fs::path(dir) / "flips" / (cell.name + ".csv"), cell.flips->to_csv());
    }
  }
}

void make_output_dirs(const std::string& dir) {
  fs::create_directories(fs::path(dir) / "flips");
  fs::create_directories(fs::path(dir) / "models");
  fs::create_directories(fs::path(dir) / "data");
}

}  // namespace

SweepMethod parse_method(const std::string& name) {
  if (name == "label_flip") return SweepMethod::label_flip;
  if (name == "class_weights") return SweepMethod::class_weights;
  if (name == "threshold") return SweepMethod::threshold;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected label_flip, class_weights or threshold)");
}

std::string to_string(SweepMethod method) {
  switch (method) {
    case SweepMethod::label_flip:
      return "label_flip";
    case SweepMethod::class_weights:
      return "class_weights";
    case SweepMethod::threshold:
      return "threshold";
  }
  return "unknown";
}

std::string SweepReport::csv_header() {
  return "method,parameter,replicate,seed,recall,precision,f1,auroc,"
         "base_recall,base_precision,base_f1,status";
}

std::string SweepReport::to_csv() const {
  std::string out = csv_header() + "\n";
  const std::string name = flipbias::to_string(method);
  for (const SweepRow& row : rows) {
    out += row_csv(name, row) + "\n";
  }
  for (const SweepRow& row : aggregates) {
    out += row_csv(name, row) + "\n";
  }
  return out;
}

std::string SweepReport::to_markdown() const {
  std::size_t replicate_count = 0;
  if (!rows.empty()) {
    for (const SweepRow& row : rows) {
      if (row.parameter == rows.front().parameter) {
        ++replicate_count;
      }
    }
  }
  std::vector<std::vector<std::string>> table;
  for (const SweepRow& row : aggregates) {
    if (row.replicate != "mean") {
      continue;
    }
    table.push_back({row.parameter, fmt_f2(row.recall), fmt_f2(row.precision),
                     fmt_f2(row.f1), fmt_f2(row.auroc)});
  }
  std::string out = "# Sweep: " + flipbias::to_string(method) + "\n\n";
  out += "Mean over " + std::to_string(replicate_count) + " replicate(s).\n\n";
  out += render_table({parameter_label(method), "Recall", "Precision", "F1 score",
                       "AUROC"},
                      table);
  return out;
}

SweepReport run_sweep(const SweepSpec& spec) {
  validate_task(spec.task, spec.model);
  validate_run_shape(spec.replicates, spec.train_fraction, spec.val_fraction,
                     spec.jitter, spec.eval_threshold);
  require_unit(spec.pool_threshold, "pool_threshold");
  const std::vector<std::string> params = ladder_tokens(spec);
  const std::size_t ladder_n = params.size();
  const std::size_t reps = spec.replicates;

  std::optional<Dataset> csv_data;
  if (spec.task.kind == SweepTask::Kind::csv) {
    csv_data = load_csv(spec.task.csv_path, spec.task.csv_schema);
  }

  SweepReport report;
  report.method = spec.method;
  report.rows.resize(ladder_n * reps);

  const double base_threshold =
      spec.method == SweepMethod::threshold ? 0.5 : spec.eval_threshold;

  for (std::size_t r = 0; r < reps; ++r) {
    const RngSeed rep_seed = replicate_seed(spec.base_seed, r);
    for (std::size_t li = 0; li < ladder_n; ++li) {
      SweepRow& row = report.rows[li * reps + r];
      row.parameter = params[li];
      row.replicate = std::to_string(r);
      row.seed = std::to_string(rep_seed.value);
    }

    ReplicatePrep prep;
    Classifier base;
    ScoreVector base_test_scores;
    MetricsReport base_report;
    std::unordered_set<ExampleId> val_ids;
    try {
      prep = prepare_replicate(spec.task, csv_data, spec.base_seed, r,
                               spec.train_fraction, spec.val_fraction, spec.balance,
                               spec.jitter);
      assert_test_untouched(prep.split.test, prep.data);
      TrainConfig base_cfg = spec.train;
      base_cfg.seed = rng::derive(rep_seed, rng::stream::kPretrain);
      base_cfg.warm_start.reset();
      base = train(prep.train_set, spec.model, base_cfg);
      base_test_scores = predict_scores(base, prep.split.test);
      base_report = evaluate(base_test_scores, prep.split.test, base_threshold);
      for (ExampleId id : prep.split.val.ids()) {
        val_ids.insert(id);
      }
    } catch (const HygieneError&) {
      throw;
    } catch (const std::exception& e) {
      for (std::size_t li = 0; li < ladder_n; ++li) {
        report.rows[li * reps + r].status = csv_safe(e.what());
      }
      continue;
    }

    ReplicateArtifacts rep_art;
    rep_art.replicate = r;
    rep_art.seed = rep_seed;
    rep_art.train = prep.train_set;
    rep_art.test = prep.split.test;
    rep_art.val_ids = prep.split.val.ids();
    rep_art.base_model = base;
    rep_art.base_report = base_report;
    report.replicates.push_back(std::move(rep_art));

    for (std::size_t li = 0; li < ladder_n; ++li) {
      SweepRow& row = report.rows[li * reps + r];
      try {
        CellArtifacts cell;
        cell.parameter = params[li];
        cell.replicate = r;
        cell.name = flipbias::to_string(spec.method) + "_" + file_token(params[li]) +
                    "_" + replicate_file(r, "");
        cell.eval_threshold = spec.eval_threshold;

        switch (spec.method) {
          case SweepMethod::label_flip: {
            const double fraction = spec.flip_ladder[li];
            BiasPlan plan;
            plan.direction = spec.direction;
            plan.flip_fraction = fraction;
            plan.policy = spec.policy;
            plan.pool_threshold = spec.pool_threshold;
            plan.retrain = spec.train;
            plan.retrain.seed = rng::derive(rep_seed, rng::stream::kRetrain);
            plan.retrain.warm_start = base;
            FlipRecord rec;
            if (fraction == 0.0) {
              // Zero flips leave the data untouched, so the retrained arm is
              // the base model itself; rerunning descent would only drift.
              cell.model = base;
              const Pool pool =
                  identify_pool(base, prep.train_set, plan.direction, plan.pool_threshold);
              rec.direction = plan.direction;
              rec.flip_fraction = 0.0;
              rec.source_matrix = pool.source_matrix;
            } else {
              auto [retrained, record] =
                  run_label_flip_method(base, prep.train_set, plan);
              cell.model = std::move(retrained);
              rec = std::move(record);
            }
            assert_flips_disjoint(rec, prep.split.test, val_ids);
            cell.flips = std::move(rec);
            cell.report = evaluate(predict_scores(cell.model, prep.split.test),
                                   prep.split.test, spec.eval_threshold);
            break;
          }
          case SweepMethod::class_weights: {
            const WeightPair w = spec.weight_ladder[li];
            TrainConfig cfg = spec.train;
            cfg.seed = rng::derive(rep_seed, rng::stream::kPretrain);
            cfg.warm_start.reset();
            cell.model = train_with_class_weights(prep.train_set, spec.model, cfg,
                                                  ClassWeights{w.w_neg, w.w_pos});
            cell.report = evaluate(predict_scores(cell.model, prep.split.test),
                                   prep.split.test, spec.eval_threshold);
            break;
          }
          case SweepMethod::threshold: {
            const double t = spec.threshold_ladder[li];
            cell.model = base;
            cell.eval_threshold = t;
            cell.report = evaluate(base_test_scores, prep.split.test, t);
            break;
          }
        }

        fill_metrics(row, cell.report, base_report);
        report.cells.push_back(std::move(cell));
      } catch (const HygieneError&) {
        throw;
      } catch (const std::exception& e) {
        row.status = csv_safe(e.what());
      }
    }
  }

  report.aggregates = aggregate_rows(report.rows, params, reps);
  return report;
}

std::string CompareReport::csv_header() { return "row," + MetricsReport::csv_header(); }

std::string CompareReport::to_csv() const {
  return csv_header() + "\nBefore," + before.csv_row() + "\nAfter," + after.csv_row() +
         "\n";
}

std::string CompareReport::to_markdown() const {
  std::vector<std::vector<std::string>> table;
  table.push_back({"Before", fmt_f2(before.recall), fmt_f2(before.precision),
                   fmt_f2(before.f1), fmt_f2(before.auroc)});
  table.push_back({"After", fmt_f2(after.recall), fmt_f2(after.precision),
                   fmt_f2(after.f1), fmt_f2(after.auroc)});
  std::string out = "# Ensemble comparison\n\n";
  out += "Scores pooled over " + std::to_string(replicates.size()) + " replicate(s).\n\n";
  out += render_table({"Model", "Recall", "Precision", "F1 score", "AUROC"}, table);
  return out;
}

std::string CompareReport::detail_csv() const {
  std::string out = SweepReport::csv_header() + "\n";
  for (const SweepRow& row : detail) {
    out += row_csv("compare", row) + "\n";
  }
  return out;
}

CompareReport compare_before_after(const CompareSpec& spec) {
  if (spec.models.size() < 2) {
    throw std::invalid_argument("comparison needs at least 2 model specs");
  }
  for (const ClassifierSpec& m : spec.models) {
    validate_task(spec.task, m);
  }
  validate_run_shape(spec.replicates, spec.train_fraction, spec.val_fraction,
                     spec.jitter, spec.eval_threshold);
  require_unit(spec.plan.flip_fraction, "flip_fraction");
  require_unit(spec.plan.pool_threshold, "pool_threshold");

  std::optional<Dataset> csv_data;
  if (spec.task.kind == SweepTask::Kind::csv) {
    csv_data = load_csv(spec.task.csv_path, spec.task.csv_schema);
  }

  CompareReport report;
  std::vector<double> pooled_before;
  std::vector<double> pooled_after;
  std::vector<int> pooled_labels;

  for (std::size_t r = 0; r < spec.replicates; ++r) {
    const ReplicatePrep prep =
        prepare_replicate(spec.task, csv_data, spec.base_seed, r, spec.train_fraction,
                          spec.val_fraction, spec.balance, spec.jitter);
    assert_test_untouched(prep.split.test, prep.data);
    std::unordered_set<ExampleId> val_ids;
    for (ExampleId id : prep.split.val.ids()) {
      val_ids.insert(id);
    }

    std::vector<Classifier> bases;
    std::vector<Classifier> afters;
    for (std::size_t j = 0; j < spec.models.size(); ++j) {
      TrainConfig cfg = spec.train;
      cfg.seed = rng::derive(rng::derive(prep.rep_seed, rng::stream::kPretrain),
                             static_cast<std::uint64_t>(j));
      cfg.warm_start.reset();
      Classifier base = train(prep.train_set, spec.models[j], cfg);

      BiasPlan plan = spec.plan;
      plan.retrain.seed = rng::derive(rng::derive(prep.rep_seed, rng::stream::kRetrain),
                                      static_cast<std::uint64_t>(j));
      plan.retrain.warm_start = base;
      Classifier after;
      FlipRecord rec;
      if (plan.flip_fraction == 0.0) {
        after = base;
        const Pool pool =
            identify_pool(base, prep.train_set, plan.direction, plan.pool_threshold);
        rec.direction = plan.direction;
        rec.flip_fraction = 0.0;
        rec.source_matrix = pool.source_matrix;
      } else {
        auto [retrained, record] = run_label_flip_method(base, prep.train_set, plan);
        after = std::move(retrained);
        rec = std::move(record);
      }
      assert_flips_disjoint(rec, prep.split.test, val_ids);

      const std::string suffix =
          "_m" + std::to_string(j) + "_" + replicate_file(r, "");
      CellArtifacts before_cell;
      before_cell.name = "before" + suffix;
      before_cell.parameter = "Before";
      before_cell.replicate = r;
      before_cell.eval_threshold = spec.eval_threshold;
      before_cell.model = base;
      before_cell.report = evaluate(predict_scores(base, prep.split.test),
                                    prep.split.test, spec.eval_threshold);
      CellArtifacts after_cell;
      after_cell.name = "after" + suffix;
      after_cell.parameter = "After";
      after_cell.replicate = r;
      after_cell.eval_threshold = spec.eval_threshold;
      after_cell.model = after;
      after_cell.flips = std::move(rec);
      after_cell.report = evaluate(predict_scores(after, prep.split.test),
                                   prep.split.test, spec.eval_threshold);
      report.cells.push_back(std::move(before_cell));
      report.cells.push_back(std::move(after_cell));

      bases.push_back(std::move(base));
      afters.push_back(std::move(after));
    }

    const ScoreVector before_scores = ensemble_scores(bases, prep.split.test);
    const ScoreVector after_scores = ensemble_scores(afters, prep.split.test);
    const MetricsReport before_rep =
        evaluate(before_scores, prep.split.test, spec.eval_threshold);
    const MetricsReport after_rep =
        evaluate(after_scores, prep.split.test, spec.eval_threshold);

    for (std::size_t i = 0; i < prep.split.test.size(); ++i) {
      pooled_before.push_back(before_scores.values()[i]);
      pooled_after.push_back(after_scores.values()[i]);
      pooled_labels.push_back(prep.split.test.at(i).label);
    }

    SweepRow before_row;
    before_row.parameter = "Before";
    before_row.replicate = std::to_string(r);
    before_row.seed = std::to_string(prep.rep_seed.value);
    fill_metrics(before_row, before_rep, before_rep);
    SweepRow after_row;
    after_row.parameter = "After";
    after_row.replicate = std::to_string(r);
    after_row.seed = std::to_string(prep.rep_seed.value);
    fill_metrics(after_row, after_rep, before_rep);
    report.detail.push_back(std::move(before_row));
    report.detail.push_back(std::move(after_row));

    ReplicateArtifacts rep_art;
    rep_art.replicate = r;
    rep_art.seed = prep.rep_seed;
    rep_art.train = prep.train_set;
    rep_art.test = prep.split.test;
    rep_art.val_ids = prep.split.val.ids();
    rep_art.base_model = bases.front();
    rep_art.base_report = before_rep;
    report.replicates.push_back(std::move(rep_art));
  }

  report.before = detail::evaluate_pairs(pooled_before, pooled_labels, spec.eval_threshold);
  report.after = detail::evaluate_pairs(pooled_after, pooled_labels, spec.eval_threshold);
  return report;
}

namespace {

/// First two principal axes of the feature matrix via cyclic Jacobi on the
/// population covariance; deterministic pivoting and sign convention.
std::vector<std::pair<double, double>> project_2d(const Dataset& data) {
  const std::size_t n = data.size();
  const std::size_t d = data.feature_dim();
  std::vector<std::pair<double, double>> coords(n);
  if (d == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      coords[i] = {data.at(i).features[0], 0.0};
    }
    return coords;
  }
  if (d == 2) {
    for (std::size_t i = 0; i < n; ++i) {
      coords[i] = {data.at(i).features[0], data.at(i).features[1]};
    }
    return coords;
  }

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      mean[j] += data.at(i).features[j];
    }
  }
  for (double& m : mean) {
    m /= static_cast<double>(n);
  }
  std::vector<std::vector<double>> a(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < d; ++p) {
      const double fp = data.at(i).features[p] - mean[p];
      for (std::size_t q = p; q < d; ++q) {
        a[p][q] += fp * (data.at(i).features[q] - mean[q]);
      }
    }
  }
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t q = p; q < d; ++q) {
      a[p][q] /= static_cast<double>(n);
      a[q][p] = a[p][q];
    }
  }

  std::vector<std::vector<double>> v(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    v[i][i] = 1.0;
  }
  for (std::size_t sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        off = std::max(off, std::fabs(a[p][q]));
      }
    }
    if (off < 1e-12) {
      break;
    }
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        if (std::fabs(a[p][q]) < 1e-300) {
          continue;
        }
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v[k][p];
          const double vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) {
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a[x][x] > a[y][y];
  });
  auto axis = [&](std::size_t which) {
    std::vector<double> e(d);
    for (std::size_t k = 0; k < d; ++k) {
      e[k] = v[k][order[which]];
    }
    std::size_t arg = 0;
    for (std::size_t k = 1; k < d; ++k) {
      if (std::fabs(e[k]) > std::fabs(e[arg])) {
        arg = k;
      }
    }
    if (e[arg] < 0.0) {
      for (double& x : e) {
        x = -x;
      }
    }
    return e;
  };
  const std::vector<double> e1 = axis(0);
  const std::vector<double> e2 = axis(1);
  const double m1 = kernels::dot(mean.data(), e1.data(), d);
  const double m2 = kernels::dot(mean.data(), e2.data(), d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* f = data.at(i).features.data();
    coords[i] = {kernels::dot(f, e1.data(), d) - m1,
                 kernels::dot(f, e2.data(), d) - m2};
  }
  return coords;
}

std::string scatter_csv(const std::vector<ScatterRow>& rows) {
  std::string out = "id,x,y,true_label,pred_label,outcome,flipped\n";
  char buf[128];
  for (const ScatterRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g,%d,%d,",
                  static_cast<unsigned long long>(r.id), r.x, r.y, r.true_label,
                  r.pred_label);
    out += buf;
    out += r.outcome + "," + (r.flipped ? "1" : "0") + "\n";
  }
  return out;
}

std::string scatter_svg(const std::vector<ScatterRow>& rows) {
  const double width = 720.0;
  const double height = 540.0;
  const double margin = 56.0;
  double min_x = rows.front().x, max_x = rows.front().x;
  double min_y = rows.front().y, max_y = rows.front().y;
  for (const ScatterRow& r : rows) {
    min_x = std::min(min_x, r.x);
    max_x = std::max(max_x, r.x);
    min_y = std::min(min_y, r.y);
    max_y = std::max(max_y, r.y);
  }
  if (max_x - min_x < 1e-12) {
    min_x -= 1.0;
    max_x += 1.0;
  }
  if (max_y - min_y < 1e-12) {
    min_y -= 1.0;
    max_y += 1.0;
  }
  const double pad_x = 0.05 * (max_x - min_x);
  const double pad_y = 0.05 * (max_y - min_y);
  min_x -= pad_x;
  max_x += pad_x;
  min_y -= pad_y;
  max_y += pad_y;
  auto sx = [&](double x) {
    return margin + (x - min_x) / (max_x - min_x) * (width - 2.0 * margin);
  };
  auto sy = [&](double y) {
    return height - margin - (y - min_y) / (max_y - min_y) * (height - 2.0 * margin);
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_g(width) +
         "\" height=\"" + fmt_g(height) + "\" viewBox=\"0 0 " + fmt_g(width) + " " +
         fmt_g(height) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + fmt_g(width) + "\" height=\"" +
         fmt_g(height) + "\" fill=\"white\"/>\n";
  out += "<rect x=\"" + fmt_f2(margin) + "\" y=\"" + fmt_f2(margin) + "\" width=\"" +
         fmt_f2(width - 2 * margin) + "\" height=\"" + fmt_f2(height - 2 * margin) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = min_x + (max_x - min_x) * i / 4.0;
    const double fy = min_y + (max_y - min_y) * i / 4.0;
    out += "<text x=\"" + fmt_f2(sx(fx)) + "\" y=\"" + fmt_f2(height - margin + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\" fill=\"#444\">" + fmt_f2(fx) +
           "</text>\n";
    out += "<text x=\"" + fmt_f2(margin - 8) + "\" y=\"" + fmt_f2(sy(fy) + 4) +
           "\" font-size=\"11\" text-anchor=\"end\" fill=\"#444\">" + fmt_f2(fy) +
           "</text>\n";
  }

  for (const ScatterRow& r : rows) {
    const std::string cx = fmt_f2(sx(r.x));
    const std::string cy = fmt_f2(sy(r.y));
    if (r.outcome == "TP") {
      out += "<circle cx=\"" + cx + "\" cy=\"" + cy + "\" r=\"3.5\" fill=\"#2166ac\"/>\n";
    } else if (r.outcome == "TN") {
      out += "<circle cx=\"" + cx + "\" cy=\"" + cy +
             "\" r=\"3.5\" fill=\"none\" stroke=\"#878787\"/>\n";
    } else if (r.outcome == "FP") {
      const double x = sx(r.x);
      const double y = sy(r.y);
      out += "<path d=\"M" + fmt_f2(x - 3.5) + " " + fmt_f2(y - 3.5) + " L" +
             fmt_f2(x + 3.5) + " " + fmt_f2(y + 3.5) + " M" + fmt_f2(x - 3.5) + " " +
             fmt_f2(y + 3.5) + " L" + fmt_f2(x + 3.5) + " " + fmt_f2(y - 3.5) +
             "\" stroke=\"#b2182b\" stroke-width=\"1.6\"/>\n";
    } else {
      const double x = sx(r.x);
      const double y = sy(r.y);
      out += "<path d=\"M" + fmt_f2(x) + " " + fmt_f2(y - 4.2) + " L" +
             fmt_f2(x - 4.0) + " " + fmt_f2(y + 3.4) + " L" + fmt_f2(x + 4.0) + " " +
             fmt_f2(y + 3.4) + " Z\" fill=\"#e08214\"/>\n";
    }
    if (r.flipped) {
      out += "<circle cx=\"" + cx + "\" cy=\"" + cy +
             "\" r=\"7\" fill=\"none\" stroke=\"#000\" stroke-width=\"1\"/>\n";
    }
  }

  const double lx = width - margin - 150.0;
  double ly = margin + 14.0;
  auto legend_text = [&](const std::string& label) {
    std::string t = "<text x=\"" + fmt_f2(lx + 14) + "\" y=\"" + fmt_f2(ly + 4) +
                    "\" font-size=\"12\" fill=\"#222\">" + label + "</text>\n";
    ly += 18.0;
    return t;
  };
  out += "<circle cx=\"" + fmt_f2(lx) + "\" cy=\"" + fmt_f2(ly) +
         "\" r=\"3.5\" fill=\"#2166ac\"/>\n" + legend_text("true positive");
  out += "<circle cx=\"" + fmt_f2(lx) + "\" cy=\"" + fmt_f2(ly) +
         "\" r=\"3.5\" fill=\"none\" stroke=\"#878787\"/>\n" +
         legend_text("true negative");
  out += "<path d=\"M" + fmt_f2(lx - 3.5) + " " + fmt_f2(ly - 3.5) + " L" +
         fmt_f2(lx + 3.5) + " " + fmt_f2(ly + 3.5) + " M" + fmt_f2(lx - 3.5) + " " +
         fmt_f2(ly + 3.5) + " L" + fmt_f2(lx + 3.5) + " " + fmt_f2(ly - 3.5) +
         "\" stroke=\"#b2182b\" stroke-width=\"1.6\"/>\n" +
         legend_text("false positive");
  out += "<path d=\"M" + fmt_f2(lx) + " " + fmt_f2(ly - 4.2) + " L" + fmt_f2(lx - 4.0) +
         " " + fmt_f2(ly + 3.4) + " L" + fmt_f2(lx + 4.0) + " " + fmt_f2(ly + 3.4) +
         "\" fill=\"#e08214\"/>\n" + legend_text("false negative");
  out += "<circle cx=\"" + fmt_f2(lx) + "\" cy=\"" + fmt_f2(ly) +
         "\" r=\"7\" fill=\"none\" stroke=\"#000\"/>\n" + legend_text("label flipped");
  out += "</svg>\n";
  return out;
}

}  // namespace

std::vector<ScatterRow> make_scatter(const Classifier& model, const Dataset& data,
                                     const std::vector<ExampleId>& flipped_ids,
                                     double threshold) {
  if (data.empty()) {
    throw std::invalid_argument("scatter: empty dataset");
  }
  require_unit(threshold, "threshold");
  const ScoreVector scores = predict_scores(model, data);
  const std::vector<std::pair<double, double>> coords = project_2d(data);
  std::unordered_set<ExampleId> flipped(flipped_ids.begin(), flipped_ids.end());

  std::vector<ScatterRow> rows;
  rows.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Example& ex = data.at(i);
    ScatterRow row;
    row.id = ex.id;
    row.x = coords[i].first;
    row.y = coords[i].second;
    row.true_label = ex.label;
    row.pred_label = scores.values()[i] > threshold ? 1 : 0;
    if (row.pred_label == 1) {
      row.outcome = row.true_label == 1 ? "TP" : "FP";
    } else {
      row.outcome = row.true_label == 1 ? "FN" : "TN";
    }
    row.flipped = flipped.count(ex.id) != 0;
    rows.push_back(std::move(row));
  }
  return rows;
}

void export_scatter(const std::vector<ScatterRow>& rows, const std::string& dir) {
  if (rows.empty()) {
    throw std::invalid_argument("scatter: no rows to export");
  }
  fs::create_directories(dir);
  write_file(fs::path(dir) / "scatter.csv", scatter_csv(rows));
  write_file(fs::path(dir) / "scatter.svg", scatter_svg(rows));
}

void export_scatter(const Classifier& model, const Dataset& data,
                    const std::vector<ExampleId>& flipped_ids, double threshold,
                    const std::string& dir) {
  export_scatter(make_scatter(model, data, flipped_ids, threshold), dir);
}

void export_tables(const SweepReport& report, const std::string& dir) {
  fs::create_directories(dir);
  write_file(fs::path(dir) / "report.csv", report.to_csv());
  write_file(fs::path(dir) / "report.md", report.to_markdown());
}

void export_tables(const CompareReport& report, const std::string& dir) {
  fs::create_directories(dir);
  write_file(fs::path(dir) / "report.csv", report.to_csv());
  write_file(fs::path(dir) / "report.md", report.to_markdown());
}

void export_run_outputs(const SweepReport& report, const std::string& dir) {
  make_output_dirs(dir);
  export_tables(report, dir);
  export_cells(report.cells, dir);
  export_replicate_data(report.replicates, dir);
  for (const ReplicateArtifacts& rep : report.replicates) {
    save_classifier(rep.base_model,
                    (fs::path(dir) / "models" / replicate_file(rep.replicate, "_base.txt"))
                        .string());
  }
  if (!report.replicates.empty()) {
    const ReplicateArtifacts& rep0 = report.replicates.front();
    std::vector<ExampleId> flipped;
    for (const CellArtifacts& cell : report.cells) {
      if (cell.replicate == 0 && cell.flips.has_value()) {
        flipped = cell.flips->flipped_ids();  // ladder order: the last wins
      }
    }
    export_scatter(rep0.base_model, rep0.train, flipped, rep0.base_report.threshold,
                   dir);
  }
}

void export_run_outputs(const CompareReport& report, const std::string& dir) {
  make_output_dirs(dir);
  export_tables(report, dir);
  write_file(fs::path(dir) / "detail.csv", report.detail_csv());
  export_cells(report.cells, dir);
  export_replicate_data(report.replicates, dir);
  if (!report.replicates.empty()) {
    const ReplicateArtifacts& rep0 = report.replicates.front();
    std::vector<ExampleId> flipped;
    for (const CellArtifacts& cell : report.cells) {
      if (cell.replicate == 0 && cell.flips.has_value() && flipped.empty()) {
        flipped = cell.flips->flipped_ids();
      }
    }
    export_scatter(rep0.base_model, rep0.train, flipped, rep0.base_report.threshold,
                   dir);
  }
}

}  // namespace flipbias

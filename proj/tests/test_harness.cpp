#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "flipbias/config.hpp"
#include "flipbias/harness.hpp"

using namespace flipbias;

namespace {

SweepSpec small_sweep() {
  SweepSpec spec;
  spec.task.gaussian.n_per_class = 60;
  spec.task.gaussian.imbalance_ratio = 2.0;
  spec.model.feature_dim = 2;
  spec.train.epochs = 120;
  spec.replicates = 2;
  spec.base_seed = RngSeed{7};
  return spec;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    lines.push_back(line);
  }
  return lines;
}

std::size_t count_files(const std::filesystem::path& dir) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) ++n;
  }
  return n;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("method names round-trip") {
  CHECK(parse_method("label_flip") == SweepMethod::label_flip);
  CHECK(parse_method("class_weights") == SweepMethod::class_weights);
  CHECK(parse_method("threshold") == SweepMethod::threshold);
  CHECK(to_string(SweepMethod::threshold) == "threshold");
  CHECK_THROWS_AS(parse_method("magic"), std::invalid_argument);
}

TEST_CASE("sweep: zero flip fraction reproduces the base model's row") {
  SweepSpec spec = small_sweep();
  spec.flip_ladder = {0.0};
  const SweepReport report = run_sweep(spec);
  REQUIRE(report.rows.size() == 2);
  for (const SweepRow& row : report.rows) {
    CHECK(row.status == "ok");
    CHECK(row.recall == row.base_recall);
    CHECK(row.precision == row.base_precision);
    CHECK(row.f1 == row.base_f1);
  }
  // the zero cell reuses the base parameters outright
  REQUIRE(report.cells.size() == 2);
  REQUIRE(report.replicates.size() == 2);
  CHECK(report.cells[0].model == report.replicates[0].base_model);
}

TEST_CASE("sweep: rows come out parameter-major with stable labels") {
  SweepSpec spec = small_sweep();
  spec.flip_ladder = {0.0, 1.0};
  const SweepReport report = run_sweep(spec);
  REQUIRE(report.rows.size() == 4);
  CHECK(report.rows[0].parameter == "0");
  CHECK(report.rows[0].replicate == "0");
  CHECK(report.rows[1].parameter == "0");
  CHECK(report.rows[1].replicate == "1");
  CHECK(report.rows[2].parameter == "1");
  CHECK(report.rows[3].parameter == "1");
  // within a parameter, replicates share base metrics column-for-column
  CHECK(report.rows[0].base_f1 == report.rows[2].base_f1);
  CHECK(report.rows[1].base_f1 == report.rows[3].base_f1);
  REQUIRE(report.aggregates.size() == 4);  // mean + std per parameter
  CHECK(report.aggregates[0].replicate == "mean");
  CHECK(report.aggregates[1].replicate == "std");
}

TEST_CASE("sweep: aggregates recompute from the rows") {
  SweepSpec spec = small_sweep();
  spec.replicates = 3;
  spec.flip_ladder = {0.4, 1.0};
  const SweepReport report = run_sweep(spec);
  for (std::size_t p = 0; p < 2; ++p) {
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
      const double v = report.rows[p * 3 + r].recall;
      sum += v;
      sq += v * v;
    }
    const double mean = sum / 3.0;
    const double var = sq / 3.0 - mean * mean;
    const SweepRow& mean_row = report.aggregates[p * 2];
    const SweepRow& std_row = report.aggregates[p * 2 + 1];
    CHECK(mean_row.replicate == "mean");
    CHECK(std::abs(mean_row.recall - mean) < 1e-12);
    CHECK(std::abs(std_row.recall - std::sqrt(std::max(0.0, var))) < 1e-9);
  }
}

TEST_CASE("sweep: threshold ladder rows have non-increasing recall") {
  SweepSpec spec = small_sweep();
  spec.method = SweepMethod::threshold;
  spec.threshold_ladder = {0.0, 0.25, 0.5, 0.75, 1.0};
  spec.replicates = 2;
  const SweepReport report = run_sweep(spec);
  REQUIRE(report.rows.size() == 10);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t p = 1; p < 5; ++p) {
      const SweepRow& tighter = report.rows[p * 2 + r];
      const SweepRow& looser = report.rows[(p - 1) * 2 + r];
      CHECK(tighter.status == "ok");
      CHECK(tighter.recall <= looser.recall);
    }
  }
  // auroc is threshold-free, so it is constant within a replicate
  CHECK(report.rows[0].auroc == report.rows[8].auroc);
}

TEST_CASE("sweep: class-weight ladder accepts explicit pairs") {
  SweepSpec spec = small_sweep();
  spec.method = SweepMethod::class_weights;
  spec.weight_ladder = {{1.0, 1.0}, {1.0, 10.0}};
  const SweepReport report = run_sweep(spec);
  REQUIRE(report.rows.size() == 4);
  CHECK(report.rows[0].parameter == "1:1");
  CHECK(report.rows[2].parameter == "1:10");
  // unit weights match the base model exactly
  CHECK(report.rows[0].recall == report.rows[0].base_recall);
  CHECK(report.rows[0].f1 == report.rows[0].base_f1);
}

TEST_CASE("sweep: byte-identical on rerun") {
  const SweepSpec spec = small_sweep();
  const std::string a = run_sweep(spec).to_csv();
  const std::string b = run_sweep(spec).to_csv();
  CHECK(a == b);
  CHECK_FALSE(a.empty());
}

TEST_CASE("sweep: flipped ids stay out of the held-out splits") {
  SweepSpec spec = small_sweep();
  spec.direction = Direction::minimize_fp;  // exercises flips of minted ids too
  spec.flip_ladder = {1.0};
  spec.replicates = 2;
  const SweepReport report = run_sweep(spec);
  REQUIRE(report.cells.size() == 2);
  for (const CellArtifacts& cell : report.cells) {
    REQUIRE(cell.flips.has_value());
    const ReplicateArtifacts& rep = report.replicates[cell.replicate];
    for (ExampleId id : cell.flips->flipped_ids()) {
      CHECK(rep.train.contains(id));
      CHECK_FALSE(rep.test.contains(id));
      for (ExampleId val_id : rep.val_ids) {
        CHECK(id != val_id);
      }
    }
  }
}

TEST_CASE("sweep: csv header and row counts line up") {
  CHECK(SweepReport::csv_header() ==
        "method,parameter,replicate,seed,recall,precision,f1,auroc,"
        "base_recall,base_precision,base_f1,status");
  SweepSpec spec = small_sweep();
  spec.flip_ladder = {0.0, 0.5, 1.0};
  spec.replicates = 2;
  const SweepReport report = run_sweep(spec);
  const std::vector<std::string> lines = split_lines(report.to_csv());
  // header + 6 data rows + 6 aggregate rows
  REQUIRE(lines.size() == 13);
  CHECK(lines[0] == SweepReport::csv_header());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    CHECK(lines[i].rfind("label_flip,", 0) == 0);
  }
  const std::string md = report.to_markdown();
  CHECK(md.find("| 0.5") != std::string::npos);
  CHECK(md.find("Recall") != std::string::npos);
}

TEST_CASE("sweep: csv task source gives every replicate the same pool") {
  GaussianTaskSpec gen;
  gen.n_per_class = 50;
  gen.seed = RngSeed{97};
  const Dataset data = generate_gaussian_task(gen);
  TempDir dir("flipbias_csv_task_test");
  const std::string csv_path = (dir.path / "task.csv").string();
  save_csv(data, csv_path, default_schema(2));

  SweepSpec spec;
  spec.task.kind = SweepTask::Kind::csv;
  spec.task.csv_path = csv_path;
  spec.task.csv_schema = default_schema(2);
  spec.model.feature_dim = 2;
  spec.train.epochs = 80;
  spec.flip_ladder = {0.0};
  spec.replicates = 2;
  spec.balance = false;
  const SweepReport report = run_sweep(spec);
  REQUIRE(report.replicates.size() == 2);
  // different splits per replicate, same underlying ids overall
  std::set<ExampleId> seen_a;
  std::set<ExampleId> seen_b;
  for (ExampleId id : report.replicates[0].test.ids()) seen_a.insert(id);
  for (ExampleId id : report.replicates[1].test.ids()) seen_b.insert(id);
  CHECK(seen_a != seen_b);
  for (ExampleId id : seen_a) CHECK(data.contains(id));
}

TEST_CASE("sweep: export writes the documented layout") {
  SweepSpec spec = small_sweep();
  spec.flip_ladder = {0.0, 1.0};
  spec.replicates = 2;
  const SweepReport report = run_sweep(spec);
  TempDir dir("flipbias_export_test");
  export_run_outputs(report, dir.path.string());

  CHECK(std::filesystem::exists(dir.path / "report.csv"));
  CHECK(std::filesystem::exists(dir.path / "report.md"));
  CHECK(std::filesystem::exists(dir.path / "scatter.csv"));
  CHECK(std::filesystem::exists(dir.path / "scatter.svg"));
  CHECK(count_files(dir.path / "models") == 4 + 2);  // cells + per-replicate base
  CHECK(count_files(dir.path / "data") == 2);
  // every label_flip cell records its flips, even the empty fraction-0 ones
  CHECK(count_files(dir.path / "flips") == 4);

  std::ifstream in(dir.path / "report.csv");
  std::stringstream buffer;
  buffer << in.rdbuf();
  CHECK(buffer.str() == report.to_csv());
}

TEST_CASE("scatter: outcomes recompute from the model and 2-D coords are raw") {
  SweepSpec spec = small_sweep();
  spec.replicates = 1;
  spec.flip_ladder = {1.0};
  const SweepReport report = run_sweep(spec);
  const ReplicateArtifacts& rep = report.replicates[0];
  const CellArtifacts& cell = report.cells[0];
  REQUIRE(cell.flips.has_value());
  const std::vector<ScatterRow> rows =
      make_scatter(cell.model, rep.test, cell.flips->flipped_ids(), 0.5);
  REQUIRE(rows.size() == rep.test.size());
  const ScoreVector scores = predict_scores(cell.model, rep.test);
  ConfusionMatrix from_rows;
  for (const ScatterRow& row : rows) {
    const Example& ex = rep.test.by_id(row.id);
    CHECK(row.x == ex.features[0]);
    CHECK(row.y == ex.features[1]);
    CHECK(row.true_label == ex.label);
    CHECK(row.pred_label == (scores.value_of(row.id) > 0.5 ? 1 : 0));
    if (row.true_label == 1) {
      (row.pred_label == 1 ? from_rows.tp : from_rows.fn) += 1;
    } else {
      (row.pred_label == 1 ? from_rows.fp : from_rows.tn) += 1;
    }
    const char* expect = row.true_label == 1 ? (row.pred_label == 1 ? "TP" : "FN")
                                             : (row.pred_label == 1 ? "FP" : "TN");
    CHECK(row.outcome == expect);
  }
  CHECK(from_rows == confusion_at_threshold(scores, rep.test, 0.5));
}

TEST_CASE("scatter: high-dimensional data is projected, not truncated") {
  // 4-D data with all the variance in the last two coordinates; the
  // projection must recover it rather than read dims 0 and 1
  std::vector<Example> examples;
  rng::Engine engine(RngSeed{31});
  for (ExampleId id = 0; id < 60; ++id) {
    const double a = engine.normal() * 3.0;
    const double b = engine.normal();
    examples.push_back({id, {0.001 * engine.normal(), 0.001 * engine.normal(), a, b},
                        a > 0.0 ? 1 : 0});
  }
  const Dataset d(std::move(examples), 4);
  Classifier model;
  model.spec.feature_dim = 4;
  model.params = {0.0, 0.0, 1.0, 0.0, 0.0};
  const std::vector<ScatterRow> rows = make_scatter(model, d, {}, 0.5);
  double var_x = 0.0;
  double mean_x = 0.0;
  for (const ScatterRow& row : rows) mean_x += row.x;
  mean_x /= static_cast<double>(rows.size());
  for (const ScatterRow& row : rows) var_x += (row.x - mean_x) * (row.x - mean_x);
  var_x /= static_cast<double>(rows.size());
  CHECK(var_x > 1.0);  // the 3-sigma axis, not the 0.001 noise
}

TEST_CASE("scatter: export emits csv and svg with flip rings") {
  const Dataset d(std::vector<Example>{{0, {0.0, 0.0}, 0},
                                       {1, {2.0, 2.0}, 1},
                                       {2, {2.0, 0.0}, 0},
                                       {3, {0.0, 2.0}, 1}},
                  2);
  Classifier model;
  model.spec.feature_dim = 2;
  model.params = {1.0, 1.0, -2.0};
  TempDir dir("flipbias_scatter_test");
  export_scatter(model, d, {2}, 0.5, dir.path.string());
  std::ifstream csv(dir.path / "scatter.csv");
  std::stringstream buffer;
  buffer << csv.rdbuf();
  CHECK(buffer.str().find("id,x,y,true_label,pred_label,outcome,flipped") == 0);
  CHECK(buffer.str().find("2,2,0,0,") != std::string::npos);
  std::ifstream svg_in(dir.path / "scatter.svg");
  std::stringstream svg;
  svg << svg_in.rdbuf();
  CHECK(svg.str().find("<svg") != std::string::npos);
  CHECK(svg.str().find("</svg>") != std::string::npos);
}

TEST_CASE("compare: zero flip fraction makes before equal after") {
  CompareSpec spec;
  spec.task.gaussian.n_per_class = 50;
  ClassifierSpec logistic;
  logistic.feature_dim = 2;
  ClassifierSpec mlp;
  mlp.kind = ClassifierSpec::Kind::mlp;
  mlp.hidden_layers = {4};
  mlp.feature_dim = 2;
  spec.models = {logistic, mlp};
  spec.train.epochs = 100;
  spec.plan.flip_fraction = 0.0;
  spec.plan.retrain = spec.train;
  spec.replicates = 2;
  const CompareReport report = compare_before_after(spec);
  CHECK(report.before.recall == report.after.recall);
  CHECK(report.before.f1 == report.after.f1);
  CHECK(report.before.auroc == report.after.auroc);

  const std::vector<std::string> lines = split_lines(report.to_csv());
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "row," + MetricsReport::csv_header());
  CHECK(lines[1].rfind("Before,", 0) == 0);
  CHECK(lines[2].rfind("After,", 0) == 0);
  CHECK(report.detail.size() == 4);  // Before/After per replicate
}

TEST_CASE("compare: full fn flips move the pooled ensemble toward recall") {
  CompareSpec spec;
  spec.task.gaussian.n_per_class = 80;
  ClassifierSpec logistic;
  logistic.feature_dim = 2;
  ClassifierSpec mlp;
  mlp.kind = ClassifierSpec::Kind::mlp;
  mlp.hidden_layers = {8};
  mlp.feature_dim = 2;
  spec.models = {logistic, mlp};
  spec.train.epochs = 150;
  spec.plan.flip_fraction = 1.0;
  spec.plan.direction = Direction::minimize_fn;
  spec.plan.retrain = spec.train;
  spec.replicates = 2;
  const CompareReport report = compare_before_after(spec);
  CHECK(report.after.recall >= report.before.recall);
  // two model kinds per replicate, before and after
  CHECK(report.cells.size() == 2 * 2 * 2);
  TempDir dir("flipbias_compare_export");
  export_run_outputs(report, dir.path.string());
  CHECK(std::filesystem::exists(dir.path / "report.csv"));
  CHECK(std::filesystem::exists(dir.path / "detail.csv"));
  CHECK(std::filesystem::exists(dir.path / "scatter.svg"));
}

TEST_CASE("config: defaults cover every registry key") {
  const RunConfig config = RunConfig::from_string("");
  for (const RunConfig::KeyDoc& doc : RunConfig::registry()) {
    CHECK(config.get(doc.key) == doc.fallback);
  }
  CHECK(config.mode() == "sweep");
  CHECK_THROWS_AS(config.get("no_such_key"), ConfigError);
}

TEST_CASE("config: parse errors carry line numbers") {
  CHECK_THROWS_WITH_AS(RunConfig::from_string("mode=sweep\nbogus_key=1\n"),
                       doctest::Contains("bogus_key"), ConfigError);
  CHECK_THROWS_WITH_AS(RunConfig::from_string("mode=sweep\nmode=compare\n"),
                       doctest::Contains("duplicate"), ConfigError);
  CHECK_THROWS_WITH_AS(RunConfig::from_string("just a line\n"),
                       doctest::Contains("key=value"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_string("replicates=three\n").to_sweep_spec(),
                  ConfigError);
}

TEST_CASE("config: comments and whitespace are tolerated") {
  const RunConfig config = RunConfig::from_string(
      "# heading comment\n"
      "  seed = 99  # trailing note\n"
      "\n"
      "epochs=10\n");
  CHECK(config.get("seed") == "99");
  CHECK(config.get("epochs") == "10");
}

TEST_CASE("config: resolved text round-trips") {
  const RunConfig config = RunConfig::from_string(
      "mode=sweep\nmethod=class_weights\nladder=1:1,1:5\nreplicates=3\n");
  const std::string resolved = config.resolved_text();
  const RunConfig back = RunConfig::from_string(resolved);
  CHECK(back.resolved_text() == resolved);
  for (const RunConfig::KeyDoc& doc : RunConfig::registry()) {
    CHECK(back.get(doc.key) == config.get(doc.key));
  }
}

TEST_CASE("config: sweep spec reflects the keys") {
  const RunConfig config = RunConfig::from_string(
      "task=gaussian\nn_per_class=30\nimbalance=2\nsep=2.5\ndim=3\n"
      "model=mlp:4\nmethod=label_flip\nladder=0,1\ndirection=minimize_fp\n"
      "policy=seeded_random\nreplicates=4\nseed=11\nbalance=false\n"
      "eval_threshold=0.4\n");
  const SweepSpec spec = config.to_sweep_spec();
  CHECK(spec.task.kind == SweepTask::Kind::gaussian);
  CHECK(spec.task.gaussian.n_per_class == 30);
  CHECK(spec.task.gaussian.imbalance_ratio == 2.0);
  CHECK(spec.task.gaussian.mean_pos == std::vector<double>{2.5, 2.5, 2.5});
  CHECK(spec.model.kind == ClassifierSpec::Kind::mlp);
  CHECK(spec.model.hidden_layers == std::vector<std::size_t>{4});
  CHECK(spec.model.feature_dim == 3);
  CHECK(spec.flip_ladder == std::vector<double>{0.0, 1.0});
  CHECK(spec.direction == Direction::minimize_fp);
  CHECK(spec.policy == SelectionPolicy::seeded_random);
  CHECK(spec.replicates == 4);
  CHECK(spec.base_seed.value == 11);
  CHECK_FALSE(spec.balance);
  CHECK(spec.eval_threshold == 0.4);
}

TEST_CASE("config: empty ladder key falls back per method") {
  const RunConfig flips = RunConfig::from_string("method=label_flip\n");
  CHECK(flips.to_sweep_spec().flip_ladder ==
        std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  const RunConfig weights = RunConfig::from_string("method=class_weights\n");
  const std::vector<WeightPair> ladder = weights.to_sweep_spec().weight_ladder;
  REQUIRE(ladder.size() == 5);
  CHECK(ladder[0].w_pos == 1.0);
  CHECK(ladder[4].w_pos == 50.0);
  const RunConfig thresholds = RunConfig::from_string("method=threshold\n");
  CHECK(thresholds.to_sweep_spec().threshold_ladder ==
        std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5});
}

TEST_CASE("config: weight ladders parse colon pairs") {
  const RunConfig config = RunConfig::from_string(
      "method=class_weights\nladder=1:1,2:5,1:50\n");
  const std::vector<WeightPair> ladder = config.to_sweep_spec().weight_ladder;
  REQUIRE(ladder.size() == 3);
  CHECK(ladder[1].w_neg == 2.0);
  CHECK(ladder[1].w_pos == 5.0);
  CHECK(ladder[2].w_pos == 50.0);
  CHECK_THROWS_AS(RunConfig::from_string("method=class_weights\nladder=1:\n")
                      .to_sweep_spec(),
                  ConfigError);
}

TEST_CASE("config: compare spec needs at least two models") {
  CHECK_THROWS_WITH_AS(
      RunConfig::from_string("mode=compare\nmodels=logistic\n").to_compare_spec(),
      doctest::Contains("at least 2"), ConfigError);
  const RunConfig config = RunConfig::from_string(
      "mode=compare\nmodels=logistic,mlp:4,mlp:8\nflip_fraction=0.5\n");
  const CompareSpec spec = config.to_compare_spec();
  REQUIRE(spec.models.size() == 3);
  CHECK(spec.models[0].kind == ClassifierSpec::Kind::logistic);
  CHECK(spec.models[2].hidden_layers == std::vector<std::size_t>{8});
  CHECK(spec.plan.flip_fraction == 0.5);
}

TEST_CASE("parse_model_spec: accepted spellings and failures") {
  CHECK(parse_model_spec("logistic", 2).kind == ClassifierSpec::Kind::logistic);
  CHECK(parse_model_spec("mlp", 2).hidden_layers == std::vector<std::size_t>{8});
  CHECK(parse_model_spec("mlp:16", 2).hidden_layers == std::vector<std::size_t>{16});
  CHECK(parse_model_spec("mlp:8x4", 3).hidden_layers ==
        std::vector<std::size_t>{8, 4});
  CHECK(parse_model_spec("mlp:8x4", 3).feature_dim == 3);
  CHECK_THROWS_AS(parse_model_spec("forest", 2), ConfigError);
  CHECK_THROWS_AS(parse_model_spec("mlp:", 2), ConfigError);
  CHECK_THROWS_AS(parse_model_spec("mlp:0", 2), ConfigError);
  CHECK_THROWS_AS(parse_model_spec("mlp:8y4", 2), ConfigError);
}

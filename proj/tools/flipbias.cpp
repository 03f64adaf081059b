#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "flipbias/config.hpp"
#include "flipbias/csv_io.hpp"
#include "flipbias/datagen.hpp"
#include "flipbias/harness.hpp"
#include "flipbias/metrics.hpp"
#include "flipbias/model.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kRuntimeExit = 3;

struct GenerateArgs {
  std::size_t n_per_class = 100;
  double sep = 1.5;
  double imbalance = 1.0;
  double cov = 1.0;
  std::size_t dim = 2;
  std::uint64_t seed = 42;
  std::string out;
};

struct RunArgs {
  std::string config;
  std::string out = "out";
};

struct EvalArgs {
  std::string model;
  std::string data;
  double threshold = 0.5;
};

void do_generate(const GenerateArgs& args) {
  flipbias::GaussianTaskSpec spec;
  spec.n_per_class = args.n_per_class;
  spec.mean_neg.assign(args.dim, 0.0);
  spec.mean_pos.assign(args.dim, args.sep);
  spec.cov_scale = args.cov;
  spec.imbalance_ratio = args.imbalance;
  spec.seed = flipbias::RngSeed{args.seed};
  const flipbias::Dataset data = flipbias::generate_gaussian_task(spec);
  flipbias::save_csv(data, args.out, flipbias::default_schema(args.dim));
  std::cout << "wrote " << args.out << " (" << data.size() << " rows, "
            << data.positive_count() << " positive)\n";
}

void do_run(const RunArgs& args) {
  const flipbias::RunConfig config = flipbias::RunConfig::from_file(args.config);
  const std::string mode = config.mode();
  if (mode != "sweep" && mode != "compare") {
    throw flipbias::ConfigError("config key 'mode': unknown value '" + mode + "'");
  }

  std::filesystem::create_directories(args.out);
  {
    const std::filesystem::path path = std::filesystem::path(args.out) / "config.resolved.cfg";
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write " + path.string());
    }
    out << config.resolved_text();
  }

  if (mode == "sweep") {
    const flipbias::SweepReport report = flipbias::run_sweep(config.to_sweep_spec());
    flipbias::export_run_outputs(report, args.out);
  } else {
    const flipbias::CompareReport report =
        flipbias::compare_before_after(config.to_compare_spec());
    flipbias::export_run_outputs(report, args.out);
  }
  std::cout << "wrote " << (std::filesystem::path(args.out) / "report.csv").string()
            << "\n";
}

void do_eval(const EvalArgs& args) {
  const flipbias::Classifier model = flipbias::load_classifier(args.model);
  const flipbias::Dataset data =
      flipbias::load_csv(args.data, flipbias::default_schema(model.spec.feature_dim));
  const flipbias::MetricsReport report =
      flipbias::evaluate(flipbias::predict_scores(model, data), data, args.threshold);
  std::cout << flipbias::MetricsReport::csv_header() << "\n" << report.csv_row() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binary classification toolkit: error-biased retraining and baselines"};
  app.require_subcommand(1);

  GenerateArgs gen_args;
  CLI::App* gen = app.add_subcommand("generate", "write a synthetic two-cluster CSV");
  gen->add_option("--n-per-class", gen_args.n_per_class, "positive examples")
      ->capture_default_str();
  gen->add_option("--sep", gen_args.sep, "positive-cluster mean offset per axis")
      ->capture_default_str();
  gen->add_option("--imbalance", gen_args.imbalance, "negatives per positive")
      ->capture_default_str();
  gen->add_option("--cov", gen_args.cov, "cluster standard deviation")
      ->capture_default_str();
  gen->add_option("--dim", gen_args.dim, "feature dimension")->capture_default_str();
  gen->add_option("--seed", gen_args.seed, "generator seed")->capture_default_str();
  gen->add_option("--out", gen_args.out, "output CSV path")->required();

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "execute a sweep or comparison config");
  run->add_option("--config", run_args.config, "key=value config file")->required();
  run->add_option("--out", run_args.out, "output directory")->capture_default_str();

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved model on a CSV");
  eval->add_option("--model", eval_args.model, "model file")->required();
  eval->add_option("--data", eval_args.data, "dataset CSV (x0..x<d-1>,label)")
      ->required();
  eval->add_option("--threshold", eval_args.threshold, "decision threshold")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      do_generate(gen_args);
    } else if (run->parsed()) {
      do_run(run_args);
    } else if (eval->parsed()) {
      do_eval(eval_args);
    }
  } catch (const flipbias::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeExit;
  }
  return 0;
}

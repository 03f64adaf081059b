#include "flipbias/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace flipbias {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep)) {
    out.push_back(trim(item));
  }
  return out;
}

double parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size() || !std::isfinite(v)) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
  }
}

}  // namespace

const std::vector<RunConfig::KeyDoc>& RunConfig::registry() {
  static const std::vector<KeyDoc> keys = {
      {"mode", "sweep", "sweep (one method over a ladder) or compare (ensemble before/after)"},
      {"task", "gaussian", "gaussian (synthetic clusters) or csv (fixed file)"},
      {"csv_path", "", "dataset file, required when task=csv"},
      {"csv_label_column", "label", "label column name for task=csv"},
      {"csv_has_header", "true", "whether the CSV carries a header row"},
      {"csv_features", "", "comma-separated feature column names; empty means x0..x<dim-1>"},
      {"dim", "2", "feature dimension"},
      {"n_per_class", "100", "synthetic positives; negatives are n_per_class*imbalance"},
      {"imbalance", "3", "negatives per positive in the synthetic task"},
      {"sep", "1.5", "positive-cluster mean offset added on every axis"},
      {"cov_scale", "1", "isotropic standard deviation of each cluster"},
      {"model", "logistic", "sweep-mode model: logistic, mlp or mlp:<h1>x<h2>..."},
      {"models", "logistic,mlp:8", "compare-mode model list, comma separated"},
      {"epochs", "400", "gradient-descent epochs"},
      {"learning_rate", "0.5", "fixed learning rate (0 freezes the parameters)"},
      {"batch_size", "32", "mini-batch size"},
      {"w_neg", "1", "negative-class loss weight for base training"},
      {"w_pos", "1", "positive-class loss weight for base training"},
      {"method", "label_flip", "sweep method: label_flip, class_weights or threshold"},
      {"ladder", "", "method parameters; empty picks the method's default ladder"},
      {"direction", "minimize_fn", "minimize_fn (flip FPs) or minimize_fp (flip FNs)"},
      {"policy", "score_ranked", "flip selection: score_ranked or seeded_random"},
      {"flip_fraction", "1", "flip fraction for compare mode"},
      {"pool_threshold", "0.5", "threshold used to collect the wrong-case pool"},
      {"replicates", "1", "independently seeded repetitions"},
      {"seed", "42", "base seed; everything else derives from it"},
      {"train_fraction", "0.8", "share of the data kept for train+val"},
      {"val_fraction", "0.2", "share of the train pool held out for validation"},
      {"balance", "true", "oversample the minority class before training"},
      {"jitter", "0.05", "oversampling jitter, in per-feature standard deviations"},
      {"eval_threshold", "0.5", "decision threshold used for reported metrics"},
  };
  return keys;
}

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig config;
  for (const KeyDoc& doc : registry()) {
    config.values_[doc.key] = doc.fallback;
  }

  std::map<std::string, bool> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (config.values_.find(key) == config.values_.end()) {
      throw ConfigError("unknown config key '" + key + "' on line " +
                        std::to_string(line_no));
    }
    if (seen[key]) {
      throw ConfigError("duplicate config key '" + key + "' on line " +
                        std::to_string(line_no));
    }
    seen[key] = true;
    config.values_[key] = value;
  }
  return config;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  return it->second;
}

std::string RunConfig::resolved_text() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key + "=" + value + "\n";
  }
  return out;
}

double RunConfig::number(const std::string& key) const {
  return parse_number(key, get(key));
}

std::size_t RunConfig::count(const std::string& key) const {
  const double v = number(key);
  if (v < 0.0 || v != std::floor(v) || v > 1e15) {
    throw ConfigError("config key '" + key + "': '" + get(key) +
                      "' is not a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::seed_value(const std::string& key) const {
  const std::string& s = get(key);
  try {
    if (s.empty() || s[0] == '-') {
      throw std::invalid_argument(s);
    }
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) {
      throw std::invalid_argument(s);
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + s +
                      "' is not an unsigned integer");
  }
}

bool RunConfig::flag(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1") {
    return true;
  }
  if (s == "false" || s == "0") {
    return false;
  }
  throw ConfigError("config key '" + key + "': '" + s + "' is not a boolean");
}

ClassifierSpec parse_model_spec(const std::string& text, std::size_t feature_dim) {
  ClassifierSpec spec;
  spec.feature_dim = feature_dim;
  if (text == "logistic") {
    spec.kind = ClassifierSpec::Kind::logistic;
    return spec;
  }
  if (text == "mlp") {
    spec.kind = ClassifierSpec::Kind::mlp;
    spec.hidden_layers = {8};
    return spec;
  }
  if (text.rfind("mlp:", 0) == 0) {
    spec.kind = ClassifierSpec::Kind::mlp;
    for (const std::string& part : split_list(text.substr(4), 'x')) {
      const double v = parse_number("model", part);
      if (v < 1.0 || v != std::floor(v)) {
        throw ConfigError("model '" + text + "': hidden size '" + part +
                          "' is not a positive integer");
      }
      spec.hidden_layers.push_back(static_cast<std::size_t>(v));
    }
    if (spec.hidden_layers.empty()) {
      throw ConfigError("model '" + text + "' lists no hidden sizes");
    }
    return spec;
  }
  throw ConfigError("unknown model '" + text +
                    "' (expected logistic, mlp or mlp:<h1>x<h2>...)");
}

namespace {

SweepTask make_task(const RunConfig& config) {
  SweepTask task;
  const std::string kind = config.get("task");
  if (kind == "gaussian") {
    task.kind = SweepTask::Kind::gaussian;
  } else if (kind == "csv") {
    task.kind = SweepTask::Kind::csv;
  } else {
    throw ConfigError("config key 'task': unknown value '" + kind + "'");
  }
  return task;
}

}  // namespace

SweepSpec RunConfig::to_sweep_spec() const {
  if (mode() != "sweep") {
    throw ConfigError("mode is '" + mode() + "', expected sweep");
  }
  SweepSpec spec;
  spec.task = make_task(*this);

  std::size_t dim = count("dim");
  if (dim == 0) {
    throw ConfigError("config key 'dim' must be >= 1");
  }
  if (spec.task.kind == SweepTask::Kind::gaussian) {
    GaussianTaskSpec& g = spec.task.gaussian;
    g.n_per_class = count("n_per_class");
    g.imbalance_ratio = number("imbalance");
    g.cov_scale = number("cov_scale");
    const double sep = number("sep");
    g.mean_neg.assign(dim, 0.0);
    g.mean_pos.assign(dim, sep);
  } else {
    spec.task.csv_path = get("csv_path");
    if (spec.task.csv_path.empty()) {
      throw ConfigError("config key 'csv_path' is required when task=csv");
    }
    const std::string features = get("csv_features");
    spec.task.csv_schema =
        features.empty() ? default_schema(dim)
                         : CsvSchema{split_list(features, ','), get("csv_label_column"),
                                     true};
    spec.task.csv_schema.label_column = get("csv_label_column");
    spec.task.csv_schema.has_header = flag("csv_has_header");
    dim = spec.task.csv_schema.feature_columns.size();
  }

  try {
    spec.model = parse_model_spec(get("model"), dim);
    spec.method = parse_method(get("method"));
    spec.direction = parse_direction(get("direction"));
    spec.policy = parse_policy(get("policy"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  spec.train.epochs = count("epochs");
  spec.train.learning_rate = number("learning_rate");
  spec.train.batch_size = count("batch_size");
  spec.train.weights = ClassWeights{number("w_neg"), number("w_pos")};

  std::string ladder = get("ladder");
  if (ladder.empty()) {
    switch (spec.method) {
      case SweepMethod::label_flip:
        ladder = "0,0.2,0.4,0.6,0.8,1";
        break;
      case SweepMethod::class_weights:
        ladder = "1:1,1:2,1:10,1:25,1:50";
        break;
      case SweepMethod::threshold:
        ladder = "0,0.1,0.2,0.3,0.4,0.5";
        break;
    }
  }
  spec.flip_ladder.clear();
  spec.weight_ladder.clear();
  spec.threshold_ladder.clear();
  for (const std::string& token : split_list(ladder, ',')) {
    if (token.empty()) {
      throw ConfigError("config key 'ladder': empty entry");
    }
    if (spec.method == SweepMethod::class_weights) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) {
        throw ConfigError("config key 'ladder': weight entry '" + token +
                          "' must look like w_neg:w_pos");
      }
      spec.weight_ladder.push_back(
          WeightPair{parse_number("ladder", trim(token.substr(0, colon))),
                     parse_number("ladder", trim(token.substr(colon + 1)))});
    } else if (spec.method == SweepMethod::label_flip) {
      spec.flip_ladder.push_back(parse_number("ladder", token));
    } else {
      spec.threshold_ladder.push_back(parse_number("ladder", token));
    }
  }

  spec.pool_threshold = number("pool_threshold");
  spec.replicates = count("replicates");
  spec.base_seed = RngSeed{seed_value("seed")};
  spec.train_fraction = number("train_fraction");
  spec.val_fraction = number("val_fraction");
  spec.balance = flag("balance");
  spec.jitter = number("jitter");
  spec.eval_threshold = number("eval_threshold");
  return spec;
}

CompareSpec RunConfig::to_compare_spec() const {
  if (mode() != "compare") {
    throw ConfigError("mode is '" + mode() + "', expected compare");
  }
  SweepSpec base;  // reuse the sweep plumbing for the shared fields
  {
    RunConfig copy = *this;
    copy.values_["mode"] = "sweep";
    copy.values_["method"] = "label_flip";
    copy.values_["ladder"] = "";
    base = copy.to_sweep_spec();
  }

  CompareSpec spec;
  spec.task = base.task;
  spec.train = base.train;
  spec.replicates = base.replicates;
  spec.base_seed = base.base_seed;
  spec.train_fraction = base.train_fraction;
  spec.val_fraction = base.val_fraction;
  spec.balance = base.balance;
  spec.jitter = base.jitter;
  spec.eval_threshold = base.eval_threshold;

  const std::size_t dim = base.model.feature_dim;
  for (const std::string& token : split_list(get("models"), ',')) {
    if (token.empty()) {
      throw ConfigError("config key 'models': empty entry");
    }
    spec.models.push_back(parse_model_spec(token, dim));
  }
  if (spec.models.size() < 2) {
    throw ConfigError("config key 'models' needs at least 2 entries for compare mode");
  }

  spec.plan.direction = base.direction;
  spec.plan.policy = base.policy;
  spec.plan.pool_threshold = base.pool_threshold;
  spec.plan.flip_fraction = number("flip_fraction");
  spec.plan.retrain = base.train;
  return spec;
}

}  // namespace flipbias

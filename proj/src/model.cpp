#include "flipbias/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "flipbias/kernels.hpp"

namespace flipbias {

namespace {

constexpr double kScoreClamp = 1e-7;

double clamp_score(double s) {
  if (s < kScoreClamp) return kScoreClamp;
  if (s > 1.0 - kScoreClamp) return 1.0 - kScoreClamp;
  return s;
}

double loss_term(double score, int label, const ClassWeights& w) {
  const double s = clamp_score(score);
  return label == 1 ? -w.w_pos * std::log(s) : -w.w_neg * std::log(1.0 - s);
}

/// Per-layer views into the flat parameter vector.
struct LayerView {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weights_offset = 0;  // row-major out x in
  std::size_t bias_offset = 0;
};

std::vector<LayerView> layout(const ClassifierSpec& spec) {
  const std::vector<std::size_t> dims = spec.layer_dims();
  std::vector<LayerView> views;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    LayerView v;
    v.in = dims[l];
    v.out = dims[l + 1];
    v.weights_offset = offset;
    v.bias_offset = offset + v.in * v.out;
    offset = v.bias_offset + v.out;
    views.push_back(v);
  }
  return views;
}

/// Reusable per-example forward/backward scratch.
struct Workspace {
  std::vector<LayerView> layers;
  std::vector<std::vector<double>> acts;    // acts[l] = output of layer l
  std::vector<std::vector<double>> deltas;  // dL/dz per layer

  explicit Workspace(const ClassifierSpec& spec) : layers(layout(spec)) {
    for (const LayerView& v : layers) {
      acts.emplace_back(v.out, 0.0);
      deltas.emplace_back(v.out, 0.0);
    }
  }

  /// Returns the sigmoid output; fills acts.
  double forward(const std::vector<double>& params, const double* input) {
    const double* prev = input;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const LayerView& v = layers[l];
      std::vector<double>& act = acts[l];
      const bool is_output = l + 1 == layers.size();
      for (std::size_t j = 0; j < v.out; ++j) {
        const double z = kernels::dot(&params[v.weights_offset + j * v.in], prev, v.in) +
                         params[v.bias_offset + j];
        act[j] = is_output ? detail::sigmoid(z) : std::tanh(z);
      }
      prev = act.data();
    }
    return acts.back()[0];
  }

  /// Accumulates dLoss/dparams for one example into grad; weight is the
  /// example's class weight. Must run right after forward() on the same
  /// example.
  void backward(const std::vector<double>& params, const double* input,
                double score, int label, double weight,
                std::vector<double>& grad) {
    deltas.back()[0] = weight * (score - static_cast<double>(label));
    for (std::size_t l = layers.size(); l-- > 0;) {
      const LayerView& v = layers[l];
      const double* prev = l == 0 ? input : acts[l - 1].data();
      const std::vector<double>& delta = deltas[l];
      for (std::size_t j = 0; j < v.out; ++j) {
        kernels::axpy(delta[j], prev, &grad[v.weights_offset + j * v.in], v.in);
        grad[v.bias_offset + j] += delta[j];
      }
      if (l == 0) {
        break;
      }
      std::vector<double>& prev_delta = deltas[l - 1];
      std::fill(prev_delta.begin(), prev_delta.end(), 0.0);
      for (std::size_t j = 0; j < v.out; ++j) {
        kernels::axpy(delta[j], &params[v.weights_offset + j * v.in],
                      prev_delta.data(), v.in);
      }
      const std::vector<double>& prev_act = acts[l - 1];
      for (std::size_t k = 0; k < prev_delta.size(); ++k) {
        prev_delta[k] *= 1.0 - prev_act[k] * prev_act[k];  // tanh'
      }
    }
  }
};

void require_dims(const ClassifierSpec& spec, const Dataset& data,
                  const char* what) {
  if (spec.feature_dim != data.feature_dim()) {
    throw std::invalid_argument(std::string(what) + ": model feature_dim " +
                                std::to_string(spec.feature_dim) +
                                " does not match data feature_dim " +
                                std::to_string(data.feature_dim()));
  }
}

void require_finite_params(const std::vector<double>& params, const char* what) {
  for (double p : params) {
    if (!std::isfinite(p)) {
      throw std::runtime_error(std::string(what) + ": non-finite parameter");
    }
  }
}

double full_loss(const Classifier& model, const Dataset& data,
                 const ClassWeights& weights) {
  Workspace ws(model.spec);
  double sum = 0.0;
  for (const Example& ex : data.examples()) {
    sum += loss_term(ws.forward(model.params, ex.features.data()), ex.label, weights);
  }
  return sum / static_cast<double>(data.size());
}

}  // namespace

namespace detail {

double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> random_params(const ClassifierSpec& spec, RngSeed seed) {
  rng::Engine engine(rng::derive(seed, rng::stream::kInit));
  std::vector<double> params(spec.param_count());
  std::size_t offset = 0;
  const std::vector<std::size_t> dims = spec.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = 0.5 / std::sqrt(static_cast<double>(dims[l]));
    const std::size_t count = dims[l] * dims[l + 1] + dims[l + 1];
    for (std::size_t i = 0; i < count; ++i) {
      params[offset++] = engine.uniform(-bound, bound);
    }
  }
  return params;
}

std::vector<double> loss_gradient(const Classifier& model, const Dataset& data,
                                  const ClassWeights& weights) {
  Workspace ws(model.spec);
  std::vector<double> grad(model.params.size(), 0.0);
  for (const Example& ex : data.examples()) {
    const double score = ws.forward(model.params, ex.features.data());
    const double w = ex.label == 1 ? weights.w_pos : weights.w_neg;
    ws.backward(model.params, ex.features.data(), score, ex.label, w, grad);
  }
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (double& g : grad) {
    g *= inv_n;
  }
  return grad;
}

}  // namespace detail

std::vector<std::size_t> ClassifierSpec::layer_dims() const {
  std::vector<std::size_t> dims;
  dims.push_back(feature_dim);
  dims.insert(dims.end(), hidden_layers.begin(), hidden_layers.end());
  dims.push_back(1);
  return dims;
}

std::size_t ClassifierSpec::param_count() const {
  const std::vector<std::size_t> dims = layer_dims();
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    count += dims[l] * dims[l + 1] + dims[l + 1];
  }
  return count;
}

void ClassifierSpec::validate() const {
  if (feature_dim == 0) {
    throw std::invalid_argument("spec: feature_dim must be >= 1");
  }
  if (kind == Kind::logistic && !hidden_layers.empty()) {
    throw std::invalid_argument("spec: logistic must have no hidden layers");
  }
  if (kind == Kind::mlp) {
    if (hidden_layers.empty()) {
      throw std::invalid_argument("spec: mlp needs at least one hidden layer");
    }
    for (std::size_t w : hidden_layers) {
      if (w == 0) {
        throw std::invalid_argument("spec: hidden layer width must be >= 1");
      }
    }
  }
}

Classifier train(const Dataset& data, const ClassifierSpec& spec,
                 const TrainConfig& config) {
  spec.validate();
  if (data.empty()) {
    throw std::invalid_argument("train: dataset is empty");
  }
  require_dims(spec, data, "train");
  if (config.epochs == 0) {
    throw std::invalid_argument("train: epochs must be >= 1");
  }
  if (config.batch_size == 0) {
    throw std::invalid_argument("train: batch_size must be >= 1");
  }
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw std::invalid_argument("train: learning_rate must be finite and >= 0");
  }
  if (!(config.weights.w_neg > 0.0 && config.weights.w_pos > 0.0)) {
    throw std::invalid_argument("train: class weights must be > 0");
  }
  if (config.warm_start && config.warm_start->spec != spec) {
    throw std::invalid_argument("train: warm_start spec does not match");
  }
  if (config.warm_start && config.warm_start->params.size() != spec.param_count()) {
    throw std::invalid_argument("train: warm_start parameter count does not match spec");
  }

  std::vector<double> params;
  if (config.warm_start) {
    params = config.warm_start->params;
  } else if (spec.kind == ClassifierSpec::Kind::logistic) {
    params.assign(spec.param_count(), 0.0);
  } else {
    params = detail::random_params(spec, config.seed);
  }

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
  }
  rng::Engine order_engine(rng::derive(config.seed, rng::stream::kOrder));

  Workspace ws(spec);
  std::vector<double> grad(params.size(), 0.0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_engine.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(begin + config.batch_size, n);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = begin; k < end; ++k) {
        const Example& ex = data.at(order[k]);
        const double score = ws.forward(params, ex.features.data());
        loss_sum += loss_term(score, ex.label, config.weights);
        const double w = ex.label == 1 ? config.weights.w_pos : config.weights.w_neg;
        ws.backward(params, ex.features.data(), score, ex.label, w, grad);
      }
      const double step = -config.learning_rate / static_cast<double>(end - begin);
      kernels::axpy(step, grad.data(), params.data(), params.size());
    }
    if (!std::isfinite(loss_sum / static_cast<double>(n))) {
      throw std::runtime_error("train: non-finite loss in epoch " +
                               std::to_string(epoch) + " (learning rate too high?)");
    }
  }
  require_finite_params(params, "train");
  return Classifier{spec, std::move(params)};
}

ScoreVector predict_scores(const Classifier& model, const Dataset& data) {
  model.spec.validate();
  require_dims(model.spec, data, "predict");
  if (model.params.size() != model.spec.param_count()) {
    throw std::invalid_argument("predict: parameter count does not match spec");
  }
  Workspace ws(model.spec);
  std::vector<ExampleId> ids;
  std::vector<double> values;
  ids.reserve(data.size());
  values.reserve(data.size());
  for (const Example& ex : data.examples()) {
    ids.push_back(ex.id);
    values.push_back(ws.forward(model.params, ex.features.data()));
  }
  return ScoreVector(std::move(ids), std::move(values));
}

double weighted_bce_loss(const ScoreVector& scores, const Dataset& data,
                         const ClassWeights& weights) {
  scores.require_matches(data);
  if (data.empty()) {
    throw std::invalid_argument("loss: dataset is empty");
  }
  double sum = 0.0;
  for (const Example& ex : data.examples()) {
    sum += loss_term(scores.value_of(ex.id), ex.label, weights);
  }
  return sum / static_cast<double>(data.size());
}

double gradient_check(const ClassifierSpec& spec, const Dataset& data,
                      const ClassWeights& weights, RngSeed seed) {
  spec.validate();
  require_dims(spec, data, "gradient_check");
  Classifier model{spec, detail::random_params(spec, seed)};
  const std::vector<double> analytic = detail::loss_gradient(model, data, weights);

  constexpr double kStep = 1e-5;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const double saved = model.params[i];
    model.params[i] = saved + kStep;
    const double up = full_loss(model, data, weights);
    model.params[i] = saved - kStep;
    const double down = full_loss(model, data, weights);
    model.params[i] = saved;
    const double fd = (up - down) / (2.0 * kStep);
    const double rel = std::abs(analytic[i] - fd) /
                       std::max(1e-6, std::abs(analytic[i]) + std::abs(fd));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

void save_classifier(const Classifier& model, std::ostream& out) {
  out << (model.spec.kind == ClassifierSpec::Kind::logistic ? "logistic" : "mlp");
  out << ' ' << model.spec.feature_dim;
  for (std::size_t w : model.spec.hidden_layers) {
    out << ' ' << w;
  }
  out << '\n';
  char buf[64];
  for (double p : model.params) {
    std::snprintf(buf, sizeof(buf), "%.17g", p);
    out << buf << '\n';
  }
}

void save_classifier(const Classifier& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("model: cannot write " + path);
  }
  save_classifier(model, out);
  if (!out.good()) {
    throw std::runtime_error("model: write failed for " + path);
  }
}

Classifier load_classifier(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw std::runtime_error("model: empty model file");
  }
  std::istringstream hs(header);
  std::string kind;
  hs >> kind;
  Classifier model;
  if (kind == "logistic") {
    model.spec.kind = ClassifierSpec::Kind::logistic;
  } else if (kind == "mlp") {
    model.spec.kind = ClassifierSpec::Kind::mlp;
  } else {
    throw std::runtime_error("model: unknown kind '" + kind + "'");
  }
  if (!(hs >> model.spec.feature_dim)) {
    throw std::runtime_error("model: missing feature_dim in header");
  }
  std::size_t width = 0;
  while (hs >> width) {
    model.spec.hidden_layers.push_back(width);
  }
  model.spec.validate();

  const std::size_t expected = model.spec.param_count();
  model.params.reserve(expected);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    try {
      model.params.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw std::runtime_error("model: bad parameter line '" + line + "'");
    }
  }
  if (model.params.size() != expected) {
    throw std::runtime_error("model: expected " + std::to_string(expected) +
                             " parameters, found " + std::to_string(model.params.size()));
  }
  return model;
}

Classifier load_classifier(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("model: cannot read " + path);
  }
  return load_classifier(in);
}

}  // namespace flipbias

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flipbias/dataset.hpp"
#include "flipbias/rng.hpp"

namespace flipbias {

/// Architecture description. Hidden layers use tanh, the output unit is a
/// single sigmoid; logistic regression is the no-hidden-layer case.
struct ClassifierSpec {
  enum class Kind { logistic, mlp };

  Kind kind = Kind::logistic;
  std::vector<std::size_t> hidden_layers;  // empty for logistic
  std::size_t feature_dim = 0;

  /// [feature_dim, hidden..., 1]
  std::vector<std::size_t> layer_dims() const;
  std::size_t param_count() const;
  void validate() const;

  bool operator==(const ClassifierSpec&) const = default;
};

/// Trained (or initialized) model: spec plus one flat parameter vector. Per
/// layer the weights come first, row-major (out x in), then the biases.
struct Classifier {
  ClassifierSpec spec;
  std::vector<double> params;

  bool operator==(const Classifier&) const = default;
};

struct ClassWeights {
  double w_neg = 1.0;
  double w_pos = 1.0;
};

struct TrainConfig {
  std::size_t epochs = 400;
  double learning_rate = 0.5;  // 0 is allowed and leaves parameters untouched
  std::size_t batch_size = 32;
  ClassWeights weights;
  RngSeed seed;
  std::optional<Classifier> warm_start;
};

/// Mini-batch gradient descent on the weighted binary cross-entropy. Fixed
/// learning rate, seeded shuffling, deterministic bit-for-bit in the seed.
/// Throws on dimension mismatch and when an epoch loss turns non-finite.
Classifier train(const Dataset& data, const ClassifierSpec& spec,
                 const TrainConfig& config);

/// One sigmoid score per example, in dataset order.
ScoreVector predict_scores(const Classifier& model, const Dataset& data);

/// Mean over examples of -[w_pos*y*ln(s) + w_neg*(1-y)*ln(1-s)], scores
/// clamped to [1e-7, 1-1e-7] before the logarithms.
double weighted_bce_loss(const ScoreVector& scores, const Dataset& data,
                         const ClassWeights& weights);

/// Compares the backpropagated gradient of the weighted loss against central
/// finite differences (step 1e-5) at a seeded random parameter point. Returns
/// the max over parameters of |ga-gd| / max(1e-6, |ga|+|gd|).
double gradient_check(const ClassifierSpec& spec, const Dataset& data,
                      const ClassWeights& weights, RngSeed seed);

/// Flat text persistence: one header line ("logistic <dim>" or
/// "mlp <dim> <h1> <h2> ..."), then one parameter per line with 17
/// significant digits. Round-trips doubles exactly.
void save_classifier(const Classifier& model, std::ostream& out);
void save_classifier(const Classifier& model, const std::string& path);
Classifier load_classifier(std::istream& in);
Classifier load_classifier(const std::string& path);

namespace detail {
/// Analytic full-batch gradient of the mean weighted BCE, exposed for tests.
std::vector<double> loss_gradient(const Classifier& model, const Dataset& data,
                                  const ClassWeights& weights);
/// Seeded uniform init in +-0.5/sqrt(fan_in) for every parameter.
std::vector<double> random_params(const ClassifierSpec& spec, RngSeed seed);
double sigmoid(double z);
}  // namespace detail

}  // namespace flipbias

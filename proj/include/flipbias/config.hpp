#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "flipbias/harness.hpp"

namespace flipbias {

/// Configuration-schema violations: unknown/duplicate keys, bad values,
/// wrong mode. The CLI maps this to its config exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key=value run configuration. '#' starts a comment, blank lines are
/// skipped, unknown and duplicate keys are hard errors, and every key has a
/// documented default (see registry()).
class RunConfig {
 public:
  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  const std::string& get(const std::string& key) const;
  std::string mode() const { return get("mode"); }

  /// Every key with its effective value, sorted, one key=value line each;
  /// parses back into an identical configuration.
  std::string resolved_text() const;

  SweepSpec to_sweep_spec() const;
  CompareSpec to_compare_spec() const;

  struct KeyDoc {
    const char* key;
    const char* fallback;
    const char* doc;
  };
  static const std::vector<KeyDoc>& registry();

 private:
  double number(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t seed_value(const std::string& key) const;
  bool flag(const std::string& key) const;

  std::map<std::string, std::string> values_;
};

/// "logistic", "mlp" or "mlp:<h1>x<h2>x..."; bare "mlp" means mlp:8.
ClassifierSpec parse_model_spec(const std::string& text, std::size_t feature_dim);

}  // namespace flipbias

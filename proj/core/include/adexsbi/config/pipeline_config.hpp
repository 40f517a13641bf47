#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "adexsbi/classifier/classifier.hpp"
#include "adexsbi/dataset/record.hpp"
#include "adexsbi/nde/estimator.hpp"

namespace adexsbi::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSizes {
  std::size_t initial = 5000;
  std::size_t training = 20000;
  std::size_t validation = 200;
};

struct ClassifierConfig {
  classifier::TrainOptions train;
  classifier::LabelRange label_range;
  double max_fnr = 0.05;
  /// Share of the initial dataset held out for choosing the threshold.
  double held_out_fraction = 0.2;
};

struct NdeConfig {
  nde::ConditioningMode mode = nde::ConditioningMode::kHandcrafted;
  std::size_t epochs_handcrafted = 20;
  std::size_t epochs_summary = 10;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double validation_fraction = 0.05;
  std::size_t blocks_handcrafted = 10;
  std::size_t blocks_summary = 8;
  std::size_t hidden = 128;
  std::size_t hidden_layers = 2;
  double clamp = 1.9;
};

struct InferenceConfig {
  std::size_t posterior_samples = 1000;
  std::size_t ppc_reference_trials = 100;
  std::size_t sbc_datasets = 200;
  std::size_t sbc_posterior = 99;
  std::size_t sbc_bins = 20;
  std::size_t amortized_k = 8;
  std::size_t amortized_samples = 10000;
};

struct Seeds {
  std::uint64_t initial = 1;
  std::uint64_t classifier = 2;
  std::uint64_t training = 3;
  std::uint64_t validation = 4;
  std::uint64_t nde = 5;
  std::uint64_t inference = 6;
};

struct PipelineConfig {
  dataset::SimulationConfig simulation;
  DatasetSizes sizes;
  /// Firing-rate band in Hz used for the in-range fraction report.
  double rate_min_hz = 1e3;
  double rate_max_hz = 40e3;
  ClassifierConfig classifier;
  NdeConfig nde;
  InferenceConfig inference;
  Seeds seeds;
  std::size_t jobs = 1;
};

/// Surrogate defaults: physical ranges chosen so the simulator reproduces
/// the qualitative regime (few in-range responses under the uniform prior).
PipelineConfig default_config();

/// Throws ConfigError naming the first problem.
void validate(const PipelineConfig& config);

std::string to_json(const PipelineConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig from_json(const std::string& text);

/// Applies ADEXSBI_<PATH> overrides (path segments joined by '_', upper case)
/// from `env` onto the JSON text of a config; values parse as JSON, falling
/// back to plain strings. Returns the keys that were applied.
std::map<std::string, std::string> apply_env_overrides(std::string& config_json,
                                                       const std::map<std::string, std::string>& env);

/// Environment variables starting with ADEXSBI_.
std::map<std::string, std::string> collect_env();

}  // namespace adexsbi::config

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "adexsbi/dataset/storage.hpp"
#include "adexsbi/nde/estimator.hpp"

namespace adexsbi::inference {

struct AmortizedOptions {
  std::size_t k = 8;
  std::size_t n_samples = 10000;
  /// Inclusive in-stimulus spike-count range for eligible observations.
  std::size_t min_spikes = 2;
  std::size_t max_spikes = 70;
  double absolute_tolerance = 1.0;
  double relative_tolerance = 0.2;
  std::uint64_t seed = 0;
};

/// |predicted - target| within the absolute or the relative tolerance.
bool spike_count_agrees(std::size_t target, std::size_t predicted, double absolute_tolerance = 1.0,
                        double relative_tolerance = 0.2);

struct AmortizedCase {
  std::size_t record_index = 0;
  hw::CodeVector target_code;
  hw::CodeVector map_code;
  double map_log_prob = 0.0;
  std::size_t clipped_samples = 0;
  std::size_t target_spikes = 0;
  std::size_t predicted_spikes = 0;
  bool predictive_pathological = false;
  bool agrees = false;
  features::RegularTrace target_trace;
  features::RegularTrace predictive_trace;
};

struct AmortizedReport {
  std::vector<AmortizedCase> cases;
  std::size_t eligible = 0;

  std::size_t agreements() const;
};

/// Picks k eligible validation records at random, draws n posterior samples
/// for each, simulates the MAP sample once and compares in-stimulus spike
/// counts. `validation` must be loaded with spikes and traces.
AmortizedReport amortized_eval(const nde::PosteriorEstimator& estimator, const dataset::Dataset& validation,
                               const dataset::SimulationConfig& config, const AmortizedOptions& options);

/// report.csv plus one trace CSV per case (time, target, predictive).
void write_amortized_report(const std::filesystem::path& dir, const AmortizedReport& report);

}  // namespace adexsbi::inference

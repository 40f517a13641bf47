#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adexsbi/features/features.hpp"
#include "adexsbi/hw/calibration.hpp"
#include "adexsbi/sim/adex.hpp"

namespace adexsbi::dataset {

/// Everything needed to turn a code vector into an observation.
struct SimulationConfig {
  hw::CalibrationTable table;
  hw::FixedParams fixed;
  double onset = 0.3e-3;
  double duration = 1.0e-3;
  double experiment_length = 1.6e-3;
  double dt = 0.2e-6;
  double noise_sigma = 0.0;
  features::FeatureOptions feature_options;

  sim::Stimulus stimulus() const;
};

struct DatasetRecord {
  std::size_t index = 0;
  hw::CodeVector code;
  std::uint64_t seed = 0;
  /// Simulation aborted (runaway or non-finite); trace and spikes are empty.
  bool pathological = false;
  features::RegularTrace trace;
  std::vector<double> spike_times;
  features::FeatureVector features;
};

/// Simulates one record. Aborted simulations produce a flagged record rather
/// than an exception.
DatasetRecord simulate_record(const hw::CodeVector& code, const SimulationConfig& config, std::uint64_t seed,
                              std::size_t index = 0);

/// Number of spikes inside the stimulus window.
std::size_t stimulus_spike_count(const DatasetRecord& record, const SimulationConfig& config);
std::size_t stimulus_spike_count(std::span<const double> spikes, const sim::Stimulus& stimulus);

}  // namespace adexsbi::dataset

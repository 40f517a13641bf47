#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "adexsbi/dataset/record.hpp"
#include "adexsbi/features/features.hpp"

namespace adexsbi::inference {

/// Linear-interpolation quantile of sorted data: position (n - 1) * p.
double quantile_sorted(std::span<const double> sorted, double p);

struct BoxStats {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  /// Farthest data points within 1.5 IQR of the box.
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::size_t count = 0;
};

/// Throws std::invalid_argument on empty input.
BoxStats box_stats(std::span<const double> values);

struct PredictiveSimulation {
  std::vector<dataset::DatasetRecord> records;
  std::size_t pathological = 0;

  /// Features of the non-pathological records.
  std::vector<features::FeatureVector> features() const;
};

/// Simulates every code `trials_per_code` times with fresh seeds derived from
/// (seed, predictive stream, running index). Traces are kept.
PredictiveSimulation posterior_predictive(std::span<const hw::CodeVector> codes,
                                          const dataset::SimulationConfig& config, std::uint64_t seed,
                                          std::size_t trials_per_code = 1, std::size_t jobs = 1);

struct FeatureCheck {
  features::Feature feature;
  double target = 0.0;
  bool target_valid = false;
  /// Empty when fewer than four valid predictive values exist.
  std::optional<BoxStats> predictive;
  std::optional<BoxStats> reference;
  bool target_in_iqr = false;
};

struct PPCReport {
  std::array<FeatureCheck, features::kNumFeatures> features{};
  std::size_t predictive_count = 0;
  std::size_t reference_count = 0;
  std::size_t pathological_excluded = 0;
};

/// Quartile summary of each feature over the valid predictive (and reference)
/// values. Requires at least four predictive samples.
PPCReport ppc_report(const features::FeatureVector& target, std::span<const features::FeatureVector> predictive,
                     std::span<const features::FeatureVector> reference = {});

void write_ppc_csv(const std::filesystem::path& path, const PPCReport& report);

}  // namespace adexsbi::inference

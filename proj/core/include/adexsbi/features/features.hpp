#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "adexsbi/sim/adex.hpp"

namespace adexsbi::features {

inline constexpr std::size_t kGridPoints = 10000;

/// Membrane voltage on a uniform grid t_i = t0 + i * (t_end - t0) / (n - 1).
/// Stored in single precision, matching the on-disk trace format.
struct RegularTrace {
  double t0 = 0.0;
  double t_end = 0.0;
  std::vector<float> voltages;

  std::size_t size() const { return voltages.size(); }
  double spacing() const { return (t_end - t0) / static_cast<double>(voltages.size() - 1); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * spacing(); }
};

/// Linear interpolation of a simulated trace onto `n_points` samples spanning
/// [0, experiment_length].
RegularTrace interpolate_trace(const sim::Trace& trace, std::size_t n_points = kGridPoints);

enum class Feature : std::size_t {
  kRate = 0,
  kLatency,
  kIsiFirst,
  kIsiLast,
  kIsiMean,
  kCvIsi,
  kAdaptation,
  kV0,
  kVMin,
  kFastTrough,
  kSlowTrough,
  kSlowTroughTime,
};
inline constexpr std::size_t kNumFeatures = 12;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "rate",     "latency",    "isi_first", "isi_last",   "isi_mean",   "cv_isi",
    "adaptation", "v_0",      "v_min",     "v_fast_trough", "v_slow_trough", "slow_trough_time"};

/// Features that can be undefined (too few spikes) and carry a validity flag
/// when used as conditioning input.
inline constexpr std::array<Feature, 9> kSpikeDependent = {
    Feature::kLatency, Feature::kIsiFirst, Feature::kIsiLast,   Feature::kIsiMean,       Feature::kCvIsi,
    Feature::kAdaptation, Feature::kFastTrough, Feature::kSlowTrough, Feature::kSlowTroughTime};

struct FeatureVector {
  std::array<double, kNumFeatures> values{};
  std::array<bool, kNumFeatures> valid{};

  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  bool is_valid(Feature f) const { return valid[static_cast<std::size_t>(f)]; }
  void set(Feature f, double v, bool ok) {
    values[static_cast<std::size_t>(f)] = v;
    valid[static_cast<std::size_t>(f)] = ok;
  }
};

struct FeatureOptions {
  /// Fraction of the first inter-spike window that counts as the fast trough.
  double fast_trough_fraction = 0.1;
};

struct TroughFeatures {
  double v_fast = 0.0;
  double v_slow = 0.0;
  double slow_time_fraction = 0.0;
  bool fast_valid = false;
  bool slow_valid = false;
};

/// Spikes with onset <= t < onset + duration.
std::vector<double> stimulus_spikes(std::span<const double> spikes, const sim::Stimulus& stimulus);

/// Mean over consecutive pairs of (ISI[i+1] - ISI[i]) / (ISI[i+1] + ISI[i]);
/// empty when fewer than two intervals are given.
std::optional<double> adaptation_index(std::span<const double> isis);

TroughFeatures trough_features(const RegularTrace& trace, std::span<const double> spikes,
                               const sim::Stimulus& stimulus, const FeatureOptions& options = {});

/// All twelve features. Undefined spike-dependent features are flagged invalid
/// and hold sentinels: time-like -> stimulus duration, voltage-like -> V_0,
/// ratios -> 0.
FeatureVector extract_features(const RegularTrace& trace, std::span<const double> spikes,
                               const sim::Stimulus& stimulus, const FeatureOptions& options = {});

}  // namespace adexsbi::features

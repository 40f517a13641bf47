#include "adexsbi/features/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace adexsbi::features {

RegularTrace interpolate_trace(const sim::Trace& trace, std::size_t n_points) {
  if (trace.voltages.size() < 2) throw std::invalid_argument("interpolate_trace: need at least two samples");
  if (n_points < 2) throw std::invalid_argument("interpolate_trace: need at least two grid points");
  RegularTrace out;
  out.t0 = 0.0;
  out.t_end = trace.stimulus.experiment_length;
  out.voltages.resize(n_points);
  const auto& v = trace.voltages;
  const std::size_t last = v.size() - 1;
  const double h = (out.t_end - out.t0) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double pos = (out.t0 + static_cast<double>(i) * h) / trace.dt;
    auto k = static_cast<std::size_t>(std::floor(pos));
    double value;
    if (k >= last) {
      value = v[last];
    } else {
      const double frac = pos - static_cast<double>(k);
      value = v[k] + frac * (v[k + 1] - v[k]);
    }
    out.voltages[i] = static_cast<float>(value);
  }
  return out;
}

std::vector<double> stimulus_spikes(std::span<const double> spikes, const sim::Stimulus& stimulus) {
  std::vector<double> out;
  for (double t : spikes) {
    if (t >= stimulus.onset && t < stimulus.offset()) out.push_back(t);
  }
  return out;
}

std::optional<double> adaptation_index(std::span<const double> isis) {
  if (isis.size() < 2) return std::nullopt;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < isis.size(); ++i) {
    acc += (isis[i + 1] - isis[i]) / (isis[i + 1] + isis[i]);
  }
  return acc / static_cast<double>(isis.size() - 1);
}

namespace {

// Minimum over grid samples with lo < t <= hi (or lo < t < hi when
// `open_right`), returning the value and its time.
std::optional<std::pair<double, double>> window_min(const RegularTrace& tr, double lo, double hi, bool open_right) {
  const double h = tr.spacing();
  const auto first = static_cast<std::ptrdiff_t>(std::floor((lo - tr.t0) / h));
  const auto last = static_cast<std::ptrdiff_t>(std::ceil((hi - tr.t0) / h));
  std::optional<std::pair<double, double>> best;
  for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(first, 0);
       i <= std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(tr.size()) - 1); ++i) {
    const double t = tr.time(static_cast<std::size_t>(i));
    if (!(t > lo)) continue;
    if (open_right ? !(t < hi) : !(t <= hi)) continue;
    const double v = tr.voltages[static_cast<std::size_t>(i)];
    if (!best || v < best->first) best = std::make_pair(v, t);
  }
  return best;
}

}  // namespace

TroughFeatures trough_features(const RegularTrace& trace, std::span<const double> spikes,
                               const sim::Stimulus& stimulus, const FeatureOptions& options) {
  TroughFeatures out;
  const std::vector<double> in_stim = stimulus_spikes(spikes, stimulus);
  if (in_stim.empty()) return out;
  const double t1 = in_stim[0];
  const bool has_isi = in_stim.size() >= 2;
  const double window_end = has_isi ? in_stim[1] : stimulus.offset();
  const double width = window_end - t1;
  if (!(width > 0.0)) return out;
  const double split = t1 + options.fast_trough_fraction * width;
  if (auto fast = window_min(trace, t1, split, /*open_right=*/false)) {
    out.v_fast = fast->first;
    out.fast_valid = true;
  }
  if (!has_isi) return out;
  if (auto slow = window_min(trace, split, window_end, /*open_right=*/true)) {
    out.v_slow = slow->first;
    out.slow_time_fraction = std::clamp((slow->second - t1) / width, 0.0, 1.0);
    out.slow_valid = true;
  }
  return out;
}

FeatureVector extract_features(const RegularTrace& trace, std::span<const double> spikes,
                               const sim::Stimulus& stimulus, const FeatureOptions& options) {
  FeatureVector fv;
  const std::vector<double> s = stimulus_spikes(spikes, stimulus);
  const std::size_t n = s.size();
  const double duration = stimulus.duration;

  fv.set(Feature::kRate, duration > 0.0 ? static_cast<double>(n) / duration : 0.0, true);

  // Baseline and post-stimulus minimum.
  double v0_sum = 0.0;
  std::size_t v0_count = 0;
  double vmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double t = trace.time(i);
    const double v = trace.voltages[i];
    if (t < stimulus.onset) {
      v0_sum += v;
      ++v0_count;
    }
    if (t >= stimulus.offset()) vmin = std::min(vmin, v);
  }
  const double v0 = v0_count > 0 ? v0_sum / static_cast<double>(v0_count)
                                 : (trace.size() > 0 ? static_cast<double>(trace.voltages[0]) : 0.0);
  fv.set(Feature::kV0, v0, v0_count > 0);
  fv.set(Feature::kVMin, std::isfinite(vmin) ? vmin : v0, std::isfinite(vmin));

  fv.set(Feature::kLatency, n >= 1 ? s[0] - stimulus.onset : duration, n >= 1);

  std::vector<double> isis;
  for (std::size_t i = 1; i < n; ++i) isis.push_back(s[i] - s[i - 1]);
  if (!isis.empty()) {
    const double mean = (s[n - 1] - s[0]) / static_cast<double>(n - 1);
    double var = 0.0;
    for (double d : isis) var += (d - mean) * (d - mean);
    var /= static_cast<double>(isis.size());
    fv.set(Feature::kIsiFirst, isis.front(), true);
    fv.set(Feature::kIsiLast, isis.back(), true);
    fv.set(Feature::kIsiMean, mean, true);
    fv.set(Feature::kCvIsi, std::sqrt(var) / mean, true);
  } else {
    fv.set(Feature::kIsiFirst, duration, false);
    fv.set(Feature::kIsiLast, duration, false);
    fv.set(Feature::kIsiMean, duration, false);
    fv.set(Feature::kCvIsi, 0.0, false);
  }
  const auto adapt = adaptation_index(isis);
  fv.set(Feature::kAdaptation, adapt.value_or(0.0), adapt.has_value());

  const TroughFeatures tf = trough_features(trace, spikes, stimulus, options);
  fv.set(Feature::kFastTrough, tf.fast_valid ? tf.v_fast : v0, tf.fast_valid);
  fv.set(Feature::kSlowTrough, tf.slow_valid ? tf.v_slow : v0, tf.slow_valid);
  fv.set(Feature::kSlowTroughTime, tf.slow_valid ? tf.slow_time_fraction : 0.0, tf.slow_valid);
  return fv;
}

}  // namespace adexsbi::features

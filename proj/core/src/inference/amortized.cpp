#include "adexsbi/inference/amortized.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/inference/posterior.hpp"

namespace adexsbi::inference {

bool spike_count_agrees(std::size_t target, std::size_t predicted, double absolute_tolerance,
                        double relative_tolerance) {
  const double diff = std::abs(static_cast<double>(predicted) - static_cast<double>(target));
  return diff <= absolute_tolerance || diff <= relative_tolerance * static_cast<double>(target);
}

std::size_t AmortizedReport::agreements() const {
  std::size_t n = 0;
  for (const auto& c : cases) n += c.agrees ? 1 : 0;
  return n;
}

AmortizedReport amortized_eval(const nde::PosteriorEstimator& estimator, const dataset::Dataset& validation,
                               const dataset::SimulationConfig& config, const AmortizedOptions& options) {
  const sim::Stimulus stim = config.stimulus();
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < validation.records.size(); ++i) {
    const auto& r = validation.records[i];
    if (r.pathological) continue;
    const std::size_t n = dataset::stimulus_spike_count(r.spike_times, stim);
    if (n >= options.min_spikes && n <= options.max_spikes) eligible.push_back(i);
  }
  if (eligible.size() < options.k) {
    throw std::invalid_argument("amortized_eval: only " + std::to_string(eligible.size()) +
                                " eligible validation records, need " + std::to_string(options.k));
  }
  Rng pick(derive_seed(options.seed, streams::kSelection, 0));
  for (std::size_t i = 0; i < options.k; ++i) {
    const int j = uniform_int(pick, static_cast<int>(i), static_cast<int>(eligible.size() - 1));
    std::swap(eligible[i], eligible[static_cast<std::size_t>(j)]);
  }

  AmortizedReport rep;
  rep.eligible = eligible.size();
  for (std::size_t c = 0; c < options.k; ++c) {
    const auto& rec = validation.records[eligible[c]];
    AmortizedCase cs;
    cs.record_index = rec.index;
    cs.target_code = rec.code;
    cs.target_trace = rec.trace;
    cs.target_spikes = dataset::stimulus_spike_count(rec.spike_times, stim);
    const PosteriorSampleSet samples = posterior_samples(estimator, nde::Observation::from_record(rec),
                                                         options.n_samples, derive_seed(options.seed, streams::kPosterior, c));
    const std::size_t best = select_map_index(samples.log_prob);
    cs.map_code = samples.codes[best];
    cs.map_log_prob = samples.log_prob[best];
    cs.clipped_samples = samples.clipped_count();
    const dataset::DatasetRecord pred =
        dataset::simulate_record(cs.map_code, config, derive_seed(options.seed, streams::kPredictive, c), c);
    cs.predictive_pathological = pred.pathological;
    cs.predictive_trace = pred.trace;
    cs.predicted_spikes = dataset::stimulus_spike_count(pred.spike_times, stim);
    cs.agrees = !pred.pathological && spike_count_agrees(cs.target_spikes, cs.predicted_spikes,
                                                         options.absolute_tolerance, options.relative_tolerance);
    spdlog::info("amortized case {}: record {} target {} spikes, MAP predictive {} spikes{}", c, cs.record_index,
                 cs.target_spikes, cs.predicted_spikes, cs.agrees ? "" : " (miss)");
    rep.cases.push_back(std::move(cs));
  }
  return rep;
}

void write_amortized_report(const std::filesystem::path& dir, const AmortizedReport& report) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "amortized_report.csv", std::ios::trunc);
  out << "case,record,target_spikes,predicted_spikes,agrees,map_log_prob,clipped_samples";
  for (auto n : hw::kParamNames) out << ",target_" << n;
  for (auto n : hw::kParamNames) out << ",map_" << n;
  out << '\n' << std::setprecision(10);
  for (std::size_t c = 0; c < report.cases.size(); ++c) {
    const auto& cs = report.cases[c];
    out << c << ',' << cs.record_index << ',' << cs.target_spikes << ',' << cs.predicted_spikes << ','
        << (cs.agrees ? 1 : 0) << ',' << cs.map_log_prob << ',' << cs.clipped_samples;
    for (int v : cs.target_code.values()) out << ',' << v;
    for (int v : cs.map_code.values()) out << ',' << v;
    out << '\n';

    std::ofstream tr(dir / ("trace_case" + std::to_string(c) + ".csv"), std::ios::trunc);
    tr << "time,target,predictive\n" << std::setprecision(8);
    const auto& a = cs.target_trace;
    const auto& b = cs.predictive_trace;
    for (std::size_t i = 0; i < a.size(); ++i) {
      tr << a.time(i) << ',' << a.voltages[i] << ',';
      if (i < b.size()) tr << b.voltages[i];
      tr << '\n';
    }
  }
}

}  // namespace adexsbi::inference

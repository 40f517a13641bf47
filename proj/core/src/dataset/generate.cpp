#include <algorithm>
#include <atomic>
#include <thread>

#include <spdlog/spdlog.h>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/dataset/record.hpp"
#include "adexsbi/dataset/storage.hpp"

namespace adexsbi::dataset {

sim::Stimulus SimulationConfig::stimulus() const {
  return sim::make_step_stimulus(onset, duration, fixed.i_max, experiment_length);
}

DatasetRecord simulate_record(const hw::CodeVector& code, const SimulationConfig& config, std::uint64_t seed,
                              std::size_t index) {
  DatasetRecord rec;
  rec.index = index;
  rec.code = code;
  rec.seed = seed;
  const sim::Stimulus stim = config.stimulus();
  const sim::PhysicalParams params = hw::decode(code, config.table, config.fixed);
  try {
    const sim::Trace trace = sim::simulate(params, stim, config.dt, {config.noise_sigma, seed});
    rec.trace = features::interpolate_trace(trace);
    rec.spike_times = trace.spike_times;
    // Extract from the stored single-precision trace so the features can be
    // recomputed from disk.
    rec.features = features::extract_features(rec.trace, rec.spike_times, stim, config.feature_options);
  } catch (const sim::SimulationError& e) {
    rec.pathological = true;
    rec.trace = features::RegularTrace{0.0, config.experiment_length, {}};
    rec.spike_times.clear();
    rec.features = features::FeatureVector{};
    spdlog::debug("record {}: {}", index, e.what());
  }
  return rec;
}

std::size_t stimulus_spike_count(std::span<const double> spikes, const sim::Stimulus& stimulus) {
  return static_cast<std::size_t>(std::count_if(spikes.begin(), spikes.end(), [&](double t) {
    return t >= stimulus.onset && t < stimulus.offset();
  }));
}

std::size_t stimulus_spike_count(const DatasetRecord& record, const SimulationConfig& config) {
  return stimulus_spike_count(record.spike_times, config.stimulus());
}

std::vector<DatasetRecord> simulate_records(std::span<const hw::CodeVector> codes, const SimulationConfig& config,
                                            std::uint64_t master_seed, std::size_t first_index, std::size_t jobs) {
  std::vector<DatasetRecord> out(codes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < codes.size(); i = next.fetch_add(1)) {
      const std::size_t index = first_index + i;
      out[i] = simulate_record(codes[i], config, derive_seed(master_seed, streams::kRecord, index), index);
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(codes.size(), 1));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  return out;
}

DatasetManifest generate_dataset(std::span<const hw::CodeVector> codes, const SimulationConfig& config,
                                 const std::filesystem::path& out, const GenerationInfo& info) {
  if (codes.empty()) throw std::invalid_argument("generate_dataset: no codes");
  DatasetWriter writer(out);
  constexpr std::size_t kBlock = 512;
  std::size_t pathological = 0;
  for (std::size_t start = 0; start < codes.size(); start += kBlock) {
    const std::size_t len = std::min(kBlock, codes.size() - start);
    const auto block = simulate_records(codes.subspan(start, len), config, info.master_seed, start, info.jobs);
    for (const DatasetRecord& r : block) {
      pathological += r.pathological ? 1 : 0;
      writer.append(r);
    }
    spdlog::debug("generate_dataset: {} / {} records", start + len, codes.size());
  }
  if (pathological > 0) spdlog::warn("generate_dataset: {} pathological records flagged", pathological);
  GenerationInfo resolved = info;
  if (resolved.config_snapshot.empty()) resolved.config_snapshot = simulation_config_to_json(config);
  return writer.finish(resolved);
}

}  // namespace adexsbi::dataset

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adexsbi/hw/calibration.hpp"
#include "adexsbi/nde/estimator.hpp"

namespace adexsbi::inference {

struct PosteriorSampleSet {
  std::string observation_id;
  std::string model_id;
  std::uint64_t seed = 0;
  /// Draws rounded to integer codes after clipping to [0, 1022].
  std::vector<hw::CodeVector> codes;
  /// Unclipped real-valued draws [n, 7].
  nn::Tensor theta;
  /// Flow log density at each real-valued draw.
  std::vector<double> log_prob;
  std::vector<bool> clipped;

  std::size_t size() const { return codes.size(); }
  std::size_t clipped_count() const;
};

/// Clips to the code box and rounds to the nearest integer code.
hw::CodeVector to_code(std::span<const double> theta, bool* clipped = nullptr);

PosteriorSampleSet samples_from_flow(const nde::FlowModel& flow, const nn::Tensor& condition, std::size_t n,
                                     std::uint64_t seed);

PosteriorSampleSet posterior_samples(const nde::PosteriorEstimator& estimator, const nde::Observation& observation,
                                     std::size_t n, std::uint64_t seed);

/// Index of the largest log_prob; ties go to the lowest index. Non-finite
/// entries are ignored; throws std::invalid_argument if none is finite.
std::size_t select_map_index(std::span<const double> log_probs);
hw::CodeVector select_map_sample(const PosteriorSampleSet& samples);

void write_samples_csv(const std::filesystem::path& path, const PosteriorSampleSet& samples);
PosteriorSampleSet read_samples_csv(const std::filesystem::path& path);

}  // namespace adexsbi::inference

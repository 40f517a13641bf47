#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "adexsbi/hw/calibration.hpp"

namespace adexsbi::dataset {

struct PriorBox {
  int lo = hw::kCodeMin;
  int hi = hw::kCodeMax;
};

/// Independent uniform integer draws per component.
std::vector<hw::CodeVector> sample_prior(std::size_t n, std::uint64_t seed, PriorBox box = {});

/// Maps a batch of codes to acceptance probabilities.
using CodeScorer = std::function<std::vector<double>(std::span<const hw::CodeVector>)>;

class ConstrainedSamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConstrainedOptions {
  std::size_t batch = 4096;
  /// Draws after which the acceptance rate is checked.
  std::size_t probe_draws = 10000;
  double min_acceptance = 1e-4;
  PriorBox box;
};

struct ConstrainedSample {
  std::vector<hw::CodeVector> codes;
  std::size_t draws = 0;
  double acceptance_rate = 0.0;
};

/// Rejection sampling from the uniform prior: keeps codes scored >= threshold
/// until n are accepted. Draws follow the same stream as sample_prior, so a
/// threshold of 0 reproduces sample_prior(n, seed).
ConstrainedSample constrained_sample(const CodeScorer& scorer, double threshold, std::size_t n, std::uint64_t seed,
                                     const ConstrainedOptions& options = {});

}  // namespace adexsbi::dataset

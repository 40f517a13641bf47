#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/dataset/prior.hpp"
#include "adexsbi/dataset/record.hpp"
#include "adexsbi/nde/estimator.hpp"

namespace adexsbi::inference {

/// One SBC round: theta* from the prior, then posterior draws for data
/// simulated at theta*.
struct SbcProblem {
  std::size_t dim = 0;
  std::function<std::vector<double>(Rng&)> prior;
  /// Simulates an observation at theta and returns n posterior draws, each a
  /// `dim`-vector.
  std::function<std::vector<std::vector<double>>(const std::vector<double>& theta, std::size_t n, Rng&)>
      simulate_and_sample;
};

struct SbcOptions {
  std::size_t n_datasets = 200;
  std::size_t n_posterior = 99;
  std::size_t bins = 20;
  std::uint64_t seed = 0;
};

struct SbcParameter {
  std::vector<std::size_t> ranks;
  std::vector<std::size_t> histogram;
  double chi_square = 0.0;
  double p_value = 1.0;
};

struct SbcReport {
  std::size_t n_datasets = 0;
  std::size_t n_posterior = 0;
  std::size_t bins = 0;
  std::vector<SbcParameter> parameters;
};

/// Rank of theta_star among the draws: the number of draws strictly below it.
std::size_t sbc_rank(double theta_star, std::span<const double> draws);

/// Bins ranks in [0, n_posterior] into `bins` equal-width bins over the
/// n_posterior + 1 possible values and tests uniformity with Pearson's
/// chi-square (bins - 1 degrees of freedom).
SbcParameter rank_statistics(std::vector<std::size_t> ranks, std::size_t n_posterior, std::size_t bins);

SbcReport sbc(const SbcProblem& problem, const SbcOptions& options);

/// SBC problem for a trained estimator on the simulator. The prior draws
/// codes uniformly, or from the classifier-constrained prior when `scorer`
/// is given.
SbcProblem adex_sbc_problem(const nde::PosteriorEstimator& estimator, const dataset::SimulationConfig& config,
                            dataset::CodeScorer scorer = {}, double threshold = 0.0);

void write_sbc_csv(const std::filesystem::path& dir, const SbcReport& report,
                   std::span<const std::string> parameter_names = {});

}  // namespace adexsbi::inference

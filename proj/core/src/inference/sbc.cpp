#include "adexsbi/inference/sbc.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <fstream>
#include <stdexcept>

#include "adexsbi/inference/posterior.hpp"

namespace adexsbi::inference {

std::size_t sbc_rank(double theta_star, std::span<const double> draws) {
  std::size_t r = 0;
  for (double d : draws) r += d < theta_star ? 1 : 0;
  return r;
}

SbcParameter rank_statistics(std::vector<std::size_t> ranks, std::size_t n_posterior, std::size_t bins) {
  if (bins < 2) throw std::invalid_argument("rank_statistics: need at least two bins");
  if (ranks.empty()) throw std::invalid_argument("rank_statistics: no ranks");
  SbcParameter p;
  p.histogram.assign(bins, 0);
  const std::size_t values = n_posterior + 1;
  for (std::size_t r : ranks) {
    if (r > n_posterior) throw std::out_of_range("rank_statistics: rank exceeds n_posterior");
    ++p.histogram[r * bins / values];
  }
  // Expected counts follow the number of rank values mapped to each bin, so
  // uneven splits (values not divisible by bins) stay unbiased.
  const double n = static_cast<double>(ranks.size());
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = (b * values + bins - 1) / bins;
    const std::size_t hi = ((b + 1) * values + bins - 1) / bins;
    const double expected = n * static_cast<double>(hi - lo) / static_cast<double>(values);
    if (expected <= 0.0) continue;
    const double d = static_cast<double>(p.histogram[b]) - expected;
    p.chi_square += d * d / expected;
  }
  boost::math::chi_squared dist(static_cast<double>(bins - 1));
  p.p_value = boost::math::cdf(boost::math::complement(dist, p.chi_square));
  p.ranks = std::move(ranks);
  return p;
}

SbcReport sbc(const SbcProblem& problem, const SbcOptions& options) {
  if (problem.dim == 0 || !problem.prior || !problem.simulate_and_sample) {
    throw std::invalid_argument("sbc: incomplete problem definition");
  }
  std::vector<std::vector<std::size_t>> ranks(problem.dim);
  for (std::size_t i = 0; i < options.n_datasets; ++i) {
    Rng rng(derive_seed(options.seed, streams::kSbc, i));
    const std::vector<double> theta = problem.prior(rng);
    const auto draws = problem.simulate_and_sample(theta, options.n_posterior, rng);
    if (theta.size() != problem.dim || draws.size() != options.n_posterior) {
      throw std::logic_error("sbc: problem returned wrongly sized draws");
    }
    std::vector<double> column(options.n_posterior);
    for (std::size_t k = 0; k < problem.dim; ++k) {
      for (std::size_t j = 0; j < draws.size(); ++j) column[j] = draws[j].at(k);
      ranks[k].push_back(sbc_rank(theta[k], column));
    }
  }
  SbcReport rep;
  rep.n_datasets = options.n_datasets;
  rep.n_posterior = options.n_posterior;
  rep.bins = options.bins;
  for (auto& r : ranks) rep.parameters.push_back(rank_statistics(std::move(r), options.n_posterior, options.bins));
  return rep;
}

SbcProblem adex_sbc_problem(const nde::PosteriorEstimator& estimator, const dataset::SimulationConfig& config,
                            dataset::CodeScorer scorer, double threshold) {
  SbcProblem p;
  p.dim = hw::kNumFree;
  p.prior = [scorer, threshold](Rng& rng) {
    const std::uint64_t s = rng();
    hw::CodeVector code;
    if (scorer && threshold > 0.0) {
      dataset::ConstrainedOptions opt;
      opt.batch = 256;
      code = dataset::constrained_sample(scorer, threshold, 1, s, opt).codes.front();
    } else {
      code = dataset::sample_prior(1, s).front();
    }
    const auto r = code.as_reals();
    return std::vector<double>(r.begin(), r.end());
  };
  p.simulate_and_sample = [&estimator, config](const std::vector<double>& theta, std::size_t n, Rng& rng) {
    const hw::CodeVector code = to_code(theta);
    dataset::DatasetRecord rec = dataset::simulate_record(code, config, rng());
    // Aborted runs are conditioned on exactly as stored on disk.
    if (rec.pathological) rec.trace.voltages.assign(features::kGridPoints, 0.0f);
    std::vector<std::vector<double>> draws;
    const PosteriorSampleSet s = posterior_samples(estimator, nde::Observation::from_record(rec), n, rng());
    draws.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = s.theta.row(i);
      draws.emplace_back(row.begin(), row.end());
    }
    return draws;
  };
  return p;
}

void write_sbc_csv(const std::filesystem::path& dir, const SbcReport& report,
                   std::span<const std::string> parameter_names) {
  std::filesystem::create_directories(dir);
  auto name = [&](std::size_t k) {
    return k < parameter_names.size() ? parameter_names[k] : "theta" + std::to_string(k);
  };
  std::ofstream summary(dir / "sbc_summary.csv", std::ios::trunc);
  summary << "parameter,chi_square,p_value,n_datasets,n_posterior,bins\n";
  for (std::size_t k = 0; k < report.parameters.size(); ++k) {
    const auto& p = report.parameters[k];
    summary << name(k) << ',' << p.chi_square << ',' << p.p_value << ',' << report.n_datasets << ','
            << report.n_posterior << ',' << report.bins << '\n';
  }
  std::ofstream hist(dir / "sbc_histograms.csv", std::ios::trunc);
  hist << "parameter,bin,count\n";
  for (std::size_t k = 0; k < report.parameters.size(); ++k) {
    for (std::size_t b = 0; b < report.parameters[k].histogram.size(); ++b) {
      hist << name(k) << ',' << b << ',' << report.parameters[k].histogram[b] << '\n';
    }
  }
  std::ofstream ranks(dir / "sbc_ranks.csv", std::ios::trunc);
  ranks << "dataset";
  for (std::size_t k = 0; k < report.parameters.size(); ++k) ranks << ',' << name(k);
  ranks << '\n';
  for (std::size_t i = 0; i < report.n_datasets; ++i) {
    ranks << i;
    for (const auto& p : report.parameters) ranks << ',' << p.ranks[i];
    ranks << '\n';
  }
}

}  // namespace adexsbi::inference

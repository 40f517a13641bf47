#pragma once

#include <cstdint>
#include <string>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/nde/flow.hpp"
#include "adexsbi/sim/adex.hpp"

// Checks shared by the unit suites and the acceptance binary. Each returns a
// verdict plus the measured numbers behind it.
namespace adexsbi::testing {

struct Verdict {
  bool pass = false;
  std::string detail;
};

/// Every op in op_catalog() on `instances` random draws.
Verdict check_gradients(std::size_t instances, std::uint64_t seed);

/// Round-trip error and log-det-vs-numerical-Jacobian for a randomly
/// perturbed flow with `blocks` coupling blocks.
struct FlowAccuracy {
  double max_roundtrip = 0.0;
  double max_logdet_error = 0.0;
  std::size_t kink_redraws = 0;
};
FlowAccuracy flow_accuracy(std::size_t blocks, std::size_t draws, std::uint64_t seed);
Verdict check_flow(std::size_t draws, std::uint64_t seed);

/// Adds noise to every conditioner weight so the flow is far from identity.
void perturb_flow(nde::FlowModel& flow, Rng& rng, double output_scale);

/// Conjugate Gaussian toy: theta ~ N(0, I_d), x = theta + sigma * eps.
/// The posterior is N(x / (1 + sigma^2), sigma^2 / (1 + sigma^2) I).
struct GaussianRecovery {
  double mean_error = 0.0;       // average Euclidean error of the posterior mean
  double covariance_error = 0.0; // average relative Frobenius error
};
GaussianRecovery gaussian_posterior_recovery(std::uint64_t seed, std::size_t dim = 3, double sigma = 0.5,
                                             std::size_t held_out = 50);
Verdict check_gaussian_posterior(std::uint64_t seed);

/// Sub-threshold LIF-regime parameters: tau_m = 100 us, no adaptation and an
/// exponential term that is negligible below V_T.
sim::PhysicalParams lif_params();
/// Tonic-spiking parameter set used for the dt-halving check.
sim::PhysicalParams spiking_params();
/// Largest |V_sim - V_closed_form| / (I / g_l) over the whole trace.
double lif_relative_error(double dt);
struct DtHalving {
  std::size_t spikes_coarse = 0;
  std::size_t spikes_fine = 0;
  double max_shift = 0.0;
};
DtHalving dt_halving(double dt);
Verdict check_simulator();

Verdict check_feature_fixture();

/// Exact (or shifted) posterior sampler on a 1-D Gaussian model in code units.
double sbc_p_value(std::uint64_t seed, double shift);
Verdict check_sbc(std::uint64_t seed);

}  // namespace adexsbi::testing

#include <vector>

#include "adexsbi/features/features.hpp"

namespace adexsbi::testing {

/// Spikes at 0.4/0.6/0.9 ms under a 0.3 ms onset, 1 ms step, on a 10000-point
/// grid over 1.6 ms. The trace is 0.5 V before onset, 0.6 V during the step
/// and 0.55 V afterwards, with single-sample dips to 0.45 V at 0.41 ms (fast
/// trough), 0.40 V at 0.50 ms (slow trough) and 0.35 V at 1.45 ms.
struct FeatureFixture {
  features::RegularTrace trace;
  std::vector<double> spikes;
  sim::Stimulus stimulus;
};
FeatureFixture feature_fixture();
std::size_t grid_index(const features::RegularTrace& trace, double t);

}  // namespace adexsbi::testing

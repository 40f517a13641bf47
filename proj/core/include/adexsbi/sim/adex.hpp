#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace adexsbi::sim {

/// AdEx parameters in SI units (hardware time, no acceleration factor).
struct PhysicalParams {
  double c_m = 0.0;        // membrane capacitance [F]
  double g_l = 0.0;        // leak conductance [S]
  double v_l = 0.0;        // leak potential [V]
  double v_t = 0.0;        // exponential threshold [V]
  double v_th = 0.0;       // hard threshold / spike detection [V]
  double v_r = 0.0;        // reset potential [V]
  double delta_t = 0.0;    // exponential slope factor [V]
  double a = 0.0;          // sub-threshold adaptation [S]
  double b = 0.0;          // spike-triggered adaptation increment [A]
  double tau_w = 0.0;      // adaptation time constant C_w / g_tau_w [s]
  double tau_ref = 0.0;    // refractory period [s]
  double c_w = 0.0;        // adaptation capacitance [F]

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
  double tau_m() const { return c_m / g_l; }
};

/// Step current: `amplitude` on [onset, onset + duration), zero elsewhere.
struct Stimulus {
  double onset = 0.0;
  double duration = 0.0;
  double amplitude = 0.0;
  double experiment_length = 0.0;

  double current(double t) const { return (t >= onset && t < onset + duration) ? amplitude : 0.0; }
  double offset() const { return onset + duration; }
};

Stimulus make_step_stimulus(double onset, double duration, double amplitude, double experiment_length);

/// Additive white current noise. Each step receives an increment of
/// sigma_current * sqrt(dt) * N(0, 1) [A s].
struct NoiseConfig {
  double sigma_current = 0.0;
  std::uint64_t seed = 0;
};

struct NeuronState {
  double v = 0.0;
  double w = 0.0;
  double refractory_remaining = 0.0;
};

struct StepResult {
  NeuronState state;
  bool spiked = false;
  /// Position of the threshold crossing inside the step, in [0, 1].
  double crossing_fraction = 0.0;
};

/// Membrane samples on the simulation grid t_k = k * dt, k = 0..n_steps,
/// plus sub-step refined spike times.
struct Trace {
  double dt = 0.0;
  std::vector<double> voltages;
  std::vector<double> spike_times;
  Stimulus stimulus;

  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
};

class SimulationError : public std::runtime_error {
 public:
  enum class Kind { kNonFinite, kRunaway };
  SimulationError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Exponent cap applied to (V - V_T) / Delta_T before exponentiation.
inline constexpr double kExpArgumentCap = 20.0;

/// One explicit Euler-Maruyama step. `noise_increment` is the integrated
/// noise current over the step [A s]. Resets and refractory handling follow
/// the AdEx jump conditions; w keeps evolving while V is clamped.
StepResult step_state(const NeuronState& state, const PhysicalParams& p, double current, double dt,
                      double noise_increment);

/// Spike-count ceiling above which a run is aborted as pathological.
double runaway_spike_limit(const PhysicalParams& p, double experiment_length);

/// Simulates from V = V_l, w = 0. Deterministic in (params, stimulus, dt, seed).
Trace simulate(const PhysicalParams& params, const Stimulus& stimulus, double dt, const NoiseConfig& noise);

}  // namespace adexsbi::sim

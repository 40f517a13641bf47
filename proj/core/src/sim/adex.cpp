#include "adexsbi/sim/adex.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "adexsbi/common/rng.hpp"

namespace adexsbi::sim {

void PhysicalParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("physical params: ") + what);
  };
  require(c_m > 0.0, "C_m must be positive");
  require(g_l >= 0.0, "g_l must be non-negative");
  require(delta_t > 0.0, "Delta_T must be positive");
  require(tau_w > 0.0, "tau_w must be positive");
  require(tau_ref >= 0.0, "tau_ref must be non-negative");
  require(v_r < v_th, "V_r must lie below V_th");
  for (double v : {c_m, g_l, v_l, v_t, v_th, v_r, delta_t, a, b, tau_w, tau_ref}) {
    require(std::isfinite(v), "all parameters must be finite");
  }
}

Stimulus make_step_stimulus(double onset, double duration, double amplitude, double experiment_length) {
  if (!(onset >= 0.0) || !(duration >= 0.0) || !(onset + duration <= experiment_length) ||
      !std::isfinite(amplitude)) {
    throw std::invalid_argument("stimulus: require 0 <= onset and onset + duration <= experiment_length");
  }
  return Stimulus{onset, duration, amplitude, experiment_length};
}

namespace {

struct Drift {
  double dv;  // [V/s]
  double dw;  // [A/s]
};

Drift drift(double v, double w, const PhysicalParams& p, double current) {
  const double arg = std::min((v - p.v_t) / p.delta_t, kExpArgumentCap);
  return {(p.g_l * (p.v_l - v) + p.g_l * p.delta_t * std::exp(arg) + current - w) / p.c_m,
          (p.a * (v - p.v_l) - w) / p.tau_w};
}

// While V is clamped at V_r the adaptation ODE is linear and solved exactly.
double clamped_w(double w, const PhysicalParams& p, double h) {
  const double w_inf = p.a * (p.v_r - p.v_l);
  return w_inf + (w - w_inf) * std::exp(-h / p.tau_w);
}

// Substeps are only refined once the exponential term takes over.
constexpr double kUpswingArg = -10.0;
constexpr double kUpswingMaxDv = 0.25;  // per substep, in units of Delta_T
constexpr int kMaxSubsteps = 4096;

}  // namespace

StepResult step_state(const NeuronState& s, const PhysicalParams& p, double current, double dt,
                      double noise_increment) {
  StepResult out;
  if (s.refractory_remaining >= dt) {
    out.state.v = p.v_r;
    out.state.w = clamped_w(s.w, p, dt);
    out.state.refractory_remaining = s.refractory_remaining - dt;
    return out;
  }
  // The clamp may end inside this step; only the remainder is integrated
  // freely, starting from V_r.
  const double held = std::max(0.0, s.refractory_remaining);
  double v = held > 0.0 ? p.v_r : s.v;
  double w = held > 0.0 ? clamped_w(s.w, p, held) : s.w;
  double elapsed = held;
  const double noise_rate = noise_increment / (p.c_m * dt);  // [V/s] spread over the step

  // Heun predictor-corrector on the drift; the noise increment enters
  // additively as in Euler-Maruyama.
  for (int sub = 0; elapsed < dt; ++sub) {
    const Drift k1 = drift(v, w, p, current);
    double h = dt - elapsed;
    if ((v - p.v_t) / p.delta_t > kUpswingArg && sub < kMaxSubsteps && std::abs(k1.dv) * h > kUpswingMaxDv * p.delta_t) {
      h = kUpswingMaxDv * p.delta_t / std::abs(k1.dv);
    }
    const Drift k2 = drift(v + h * (k1.dv + noise_rate), w + h * k1.dw, p, current);
    const double v_next = v + 0.5 * h * (k1.dv + k2.dv) + h * noise_rate;
    const double w_next = w + 0.5 * h * (k1.dw + k2.dw);
    if (!std::isfinite(v_next) || !std::isfinite(w_next)) {
      throw SimulationError(SimulationError::Kind::kNonFinite, "adex: non-finite state after step");
    }
    if (v_next >= p.v_th) {
      const double rise = v_next - v;
      const double f = rise > 0.0 ? std::clamp((p.v_th - v) / rise, 0.0, 1.0) : 0.0;
      out.spiked = true;
      out.crossing_fraction = std::clamp((elapsed + f * h) / dt, 0.0, 1.0);
      // Reset at the crossing; the refractory clock starts there too.
      out.state.v = p.v_r;
      out.state.w = clamped_w(w + f * (w_next - w) + p.b, p, (1.0 - out.crossing_fraction) * dt);
      out.state.refractory_remaining = std::max(0.0, p.tau_ref - (1.0 - out.crossing_fraction) * dt);
      return out;
    }
    v = v_next;
    w = w_next;
    elapsed += h;
  }
  out.state.v = v;
  out.state.w = w;
  return out;
}

double runaway_spike_limit(const PhysicalParams& p, double experiment_length) {
  const double ref_rate = p.tau_ref > 0.0 ? 1.0 / p.tau_ref : 0.0;
  double rate = ref_rate + p.g_l / p.c_m;
  if (rate <= 0.0) rate = 1.0 / experiment_length;
  return 10.0 * experiment_length * rate;
}

Trace simulate(const PhysicalParams& params, const Stimulus& stimulus, double dt, const NoiseConfig& noise) {
  params.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
  if (noise.sigma_current < 0.0) throw std::invalid_argument("simulate: noise sigma must be non-negative");
  if (params.g_l > 0.0 && dt > params.tau_m() / 20.0) {
    spdlog::warn("simulate: dt {:.3g} s exceeds tau_m/20 = {:.3g} s", dt, params.tau_m() / 20.0);
  }
  const auto n_steps = static_cast<std::size_t>(std::llround(stimulus.experiment_length / dt));
  const double spike_limit = runaway_spike_limit(params, stimulus.experiment_length);

  Trace trace;
  trace.dt = dt;
  trace.stimulus = stimulus;
  trace.voltages.reserve(n_steps + 1);

  Rng rng(noise.seed);
  const double noise_scale = noise.sigma_current * std::sqrt(dt);
  NeuronState state{params.v_l, 0.0, 0.0};
  trace.voltages.push_back(state.v);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    // Draw every step so the noise stream does not depend on spiking history.
    const double xi = noise_scale > 0.0 ? noise_scale * standard_normal(rng) : 0.0;
    const StepResult r = step_state(state, params, stimulus.current(t), dt, xi);
    if (r.spiked) {
      const double ts = t + r.crossing_fraction * dt;
      if (trace.spike_times.empty() || ts > trace.spike_times.back()) {
        trace.spike_times.push_back(ts);
      } else {
        trace.spike_times.push_back(std::nextafter(trace.spike_times.back(), std::numeric_limits<double>::infinity()));
      }
      if (static_cast<double>(trace.spike_times.size()) > spike_limit) {
        throw SimulationError(SimulationError::Kind::kRunaway,
                              "adex: runaway spiking (" + std::to_string(trace.spike_times.size()) + " spikes)");
      }
    }
    state = r.state;
    trace.voltages.push_back(state.v);
  }
  return trace;
}

}  // namespace adexsbi::sim

#include "adexsbi/hw/calibration.hpp"

#include <algorithm>
#include <cmath>

namespace adexsbi::hw {
namespace {

void check_code(int c) {
  if (c < kCodeMin || c > kCodeMax) {
    throw CodeRangeError("code " + std::to_string(c) + " outside [0, 1022]");
  }
}

// Position of a physical value on the code axis, as a real number.
double code_position(const ParameterRange& r, double value) {
  const double span = static_cast<double>(kCodeMax - kCodeMin);
  if (r.kind == MapKind::kLog) {
    return span * std::log(value / r.physical_min) / std::log(r.physical_max / r.physical_min);
  }
  return span * (value - r.physical_min) / (r.physical_max - r.physical_min);
}

}  // namespace

CodeVector::CodeVector(const std::array<int, kNumFree>& codes) : codes_(codes) {
  for (int c : codes_) check_code(c);
}

std::array<double, kNumFree> CodeVector::as_reals() const {
  std::array<double, kNumFree> out{};
  for (std::size_t i = 0; i < kNumFree; ++i) out[i] = codes_[i];
  return out;
}

void CalibrationTable::validate() const {
  for (std::size_t i = 0; i < kNumFree; ++i) {
    const auto& r = ranges[i];
    if (!(r.physical_min < r.physical_max)) {
      throw std::invalid_argument("calibration: " + std::string(kParamNames[i]) + " needs physical_min < physical_max");
    }
    if (r.kind == MapKind::kLog && !(r.physical_min > 0.0)) {
      throw std::invalid_argument("calibration: log map for " + std::string(kParamNames[i]) + " needs positive range");
    }
  }
  if (!(ranges[static_cast<std::size_t>(Param::kGTauW)].physical_min > 0.0)) {
    throw std::invalid_argument("calibration: g_tau_w minimum must be positive");
  }
}

double decode_component(const ParameterRange& r, int code) {
  check_code(code);
  const double frac = static_cast<double>(code - kCodeMin) / static_cast<double>(kCodeMax - kCodeMin);
  if (code == kCodeMax) return r.physical_max;
  if (r.kind == MapKind::kLog) return r.physical_min * std::pow(r.physical_max / r.physical_min, frac);
  return r.physical_min + frac * (r.physical_max - r.physical_min);
}

int encode_component(const ParameterRange& r, double value) {
  // Slack absorbs rounding from derived quantities such as C_w / tau_w.
  const double slack = 1e-9 * (r.physical_max - r.physical_min);
  if (!(value >= r.physical_min - slack && value <= r.physical_max + slack)) {
    throw CodeRangeError("physical value " + std::to_string(value) + " outside calibrated range");
  }
  // nearbyint under the default rounding mode rounds halfway cases to even.
  const double pos = std::nearbyint(code_position(r, value));
  return std::clamp(static_cast<int>(pos), kCodeMin, kCodeMax);
}

double free_value(const sim::PhysicalParams& p, Param which) {
  switch (which) {
    case Param::kGl:
      return p.g_l;
    case Param::kVr:
      return p.v_r;
    case Param::kDeltaT:
      return p.delta_t;
    case Param::kVt:
      return p.v_t;
    case Param::kA:
      return p.a;
    case Param::kB:
      return p.b;
    case Param::kGTauW:
      return p.c_w / p.tau_w;
  }
  return 0.0;
}

sim::PhysicalParams decode(const CodeVector& code, const CalibrationTable& table, const FixedParams& fixed) {
  auto val = [&](Param p) { return decode_component(table[p], code[p]); };
  sim::PhysicalParams out;
  out.c_m = fixed.c_m;
  out.v_l = fixed.v_l;
  out.v_th = fixed.v_th;
  out.tau_ref = fixed.tau_ref;
  out.c_w = fixed.c_w;
  out.g_l = val(Param::kGl);
  out.v_r = val(Param::kVr);
  out.delta_t = val(Param::kDeltaT);
  out.v_t = val(Param::kVt);
  out.a = val(Param::kA);
  out.b = val(Param::kB);
  out.tau_w = fixed.c_w / val(Param::kGTauW);
  return out;
}

CodeVector encode(const sim::PhysicalParams& params, const CalibrationTable& table) {
  std::array<int, kNumFree> codes{};
  for (std::size_t i = 0; i < kNumFree; ++i) {
    const auto which = static_cast<Param>(i);
    codes[i] = encode_component(table.ranges[i], free_value(params, which));
  }
  return CodeVector(codes);
}

}  // namespace adexsbi::hw

#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "adexsbi/sim/adex.hpp"

namespace adexsbi::hw {

inline constexpr int kCodeMin = 0;
inline constexpr int kCodeMax = 1022;
inline constexpr std::size_t kNumFree = 7;

/// The seven configurable parameters, in inference order.
enum class Param : std::size_t { kGl = 0, kVr, kDeltaT, kVt, kA, kB, kGTauW };

inline constexpr std::array<std::string_view, kNumFree> kParamNames = {"g_l", "v_r", "delta_t", "v_t",
                                                                        "a",   "b",   "g_tau_w"};

class CodeRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Seven digital parameter codes, each in [0, 1022].
class CodeVector {
 public:
  CodeVector() = default;
  explicit CodeVector(const std::array<int, kNumFree>& codes);

  int operator[](std::size_t i) const { return codes_[i]; }
  int operator[](Param p) const { return codes_[static_cast<std::size_t>(p)]; }
  const std::array<int, kNumFree>& values() const { return codes_; }
  std::array<double, kNumFree> as_reals() const;

  friend bool operator==(const CodeVector&, const CodeVector&) = default;

 private:
  std::array<int, kNumFree> codes_{};
};

enum class MapKind { kAffine, kLog };

struct ParameterRange {
  double physical_min = 0.0;
  double physical_max = 1.0;
  MapKind kind = MapKind::kAffine;
};

struct CalibrationTable {
  std::array<ParameterRange, kNumFree> ranges{};

  /// Throws std::invalid_argument unless every map is strictly increasing.
  void validate() const;
  const ParameterRange& operator[](Param p) const { return ranges[static_cast<std::size_t>(p)]; }
};

/// Parameters held constant across all experiments.
struct FixedParams {
  double c_m = 0.0;
  double v_l = 0.0;
  double v_th = 0.0;
  double tau_ref = 0.0;
  double i_max = 0.0;
  double c_w = 0.0;
};

double decode_component(const ParameterRange& range, int code);
/// Nearest code for a physical value; exact ties go to the even code.
int encode_component(const ParameterRange& range, double value);

sim::PhysicalParams decode(const CodeVector& code, const CalibrationTable& table, const FixedParams& fixed);
/// Inverse of decode for the free parameters; g_tau_w is recovered as C_w / tau_w.
CodeVector encode(const sim::PhysicalParams& params, const CalibrationTable& table);

/// Physical value of free parameter `p` as it appears in PhysicalParams.
double free_value(const sim::PhysicalParams& params, Param p);

}  // namespace adexsbi::hw

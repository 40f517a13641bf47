#include "adexsbi/inference/ppc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/dataset/storage.hpp"

namespace adexsbi::inference {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
  const double pos = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("box_stats: empty input");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  BoxStats b;
  b.count = s.size();
  b.q1 = quantile_sorted(s, 0.25);
  b.median = quantile_sorted(s, 0.5);
  b.q3 = quantile_sorted(s, 0.75);
  const double reach = 1.5 * (b.q3 - b.q1);
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  for (double v : s) {
    if (v >= b.q1 - reach) {
      b.whisker_low = std::min(v, b.q1);
      break;
    }
  }
  for (auto it = s.rbegin(); it != s.rend(); ++it) {
    if (*it <= b.q3 + reach) {
      b.whisker_high = std::max(*it, b.q3);
      break;
    }
  }
  return b;
}

std::vector<features::FeatureVector> PredictiveSimulation::features() const {
  std::vector<features::FeatureVector> out;
  for (const auto& r : records) {
    if (!r.pathological) out.push_back(r.features);
  }
  return out;
}

PredictiveSimulation posterior_predictive(std::span<const hw::CodeVector> codes,
                                          const dataset::SimulationConfig& config, std::uint64_t seed,
                                          std::size_t trials_per_code, std::size_t jobs) {
  if (trials_per_code == 0) throw std::invalid_argument("posterior_predictive: trials_per_code must be positive");
  std::vector<hw::CodeVector> expanded;
  expanded.reserve(codes.size() * trials_per_code);
  for (const auto& c : codes) {
    for (std::size_t t = 0; t < trials_per_code; ++t) expanded.push_back(c);
  }
  PredictiveSimulation out;
  out.records = dataset::simulate_records(expanded, config, derive_seed(seed, streams::kPredictive, 0), 0, jobs);
  for (const auto& r : out.records) out.pathological += r.pathological ? 1 : 0;
  return out;
}

namespace {

std::optional<BoxStats> feature_box(std::span<const features::FeatureVector> rows, features::Feature f) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.is_valid(f)) v.push_back(r[f]);
  }
  if (v.size() < 4) return std::nullopt;
  return box_stats(v);
}

}  // namespace

PPCReport ppc_report(const features::FeatureVector& target, std::span<const features::FeatureVector> predictive,
                     std::span<const features::FeatureVector> reference) {
  if (predictive.size() < 4) throw std::invalid_argument("ppc_report: need at least four predictive samples");
  PPCReport rep;
  rep.predictive_count = predictive.size();
  rep.reference_count = reference.size();
  for (std::size_t k = 0; k < features::kNumFeatures; ++k) {
    const auto f = static_cast<features::Feature>(k);
    FeatureCheck& c = rep.features[k];
    c.feature = f;
    c.target = target[f];
    c.target_valid = target.is_valid(f);
    c.predictive = feature_box(predictive, f);
    if (!reference.empty()) c.reference = feature_box(reference, f);
    c.target_in_iqr = c.target_valid && c.predictive && c.target >= c.predictive->q1 && c.target <= c.predictive->q3;
  }
  return rep;
}

void write_ppc_csv(const std::filesystem::path& path, const PPCReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "feature,target,target_valid,n,q1,median,q3,whisker_low,whisker_high,target_in_iqr,"
         "ref_n,ref_q1,ref_median,ref_q3,ref_whisker_low,ref_whisker_high\n";
  out << std::setprecision(10);
  auto box = [&](const std::optional<BoxStats>& b) {
    if (!b) {
      out << "0,,,,,";
      return;
    }
    out << b->count << ',' << b->q1 << ',' << b->median << ',' << b->q3 << ',' << b->whisker_low << ','
        << b->whisker_high;
  };
  for (const auto& c : report.features) {
    out << features::kFeatureNames[static_cast<std::size_t>(c.feature)] << ',' << c.target << ','
        << (c.target_valid ? 1 : 0) << ',';
    box(c.predictive);
    out << ',' << (c.target_in_iqr ? 1 : 0) << ',';
    box(c.reference);
    out << '\n';
  }
}

}  // namespace adexsbi::inference

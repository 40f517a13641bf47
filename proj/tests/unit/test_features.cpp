#include <gtest/gtest.h>
#include <spdlog/sinks/ringbuffer_sink.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <numbers>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/features/features.hpp"
#include "adexsbi/features/standardize.hpp"
#include "criteria.hpp"

namespace ft = adexsbi::features;
using ft::Feature;
using adexsbi::testing::feature_fixture;
using adexsbi::testing::grid_index;

namespace {

adexsbi::sim::Trace sampled(double dt, double length, const std::function<double(double)>& f) {
  adexsbi::sim::Trace tr;
  tr.dt = dt;
  tr.stimulus = adexsbi::sim::make_step_stimulus(0.3e-3, 1e-3, 0.0, length);
  const auto n = static_cast<std::size_t>(std::llround(length / dt)) + 1;
  tr.voltages.resize(n);
  for (std::size_t k = 0; k < n; ++k) tr.voltages[k] = f(tr.time(k));
  return tr;
}

}  // namespace

TEST(Interpolate, ConstantAndRampExact) {
  const auto c = ft::interpolate_trace(sampled(0.2e-6, 1.6e-3, [](double) { return 0.25; }));
  ASSERT_EQ(c.size(), ft::kGridPoints);
  EXPECT_EQ(c.t0, 0.0);
  EXPECT_EQ(c.t_end, 1.6e-3);
  for (float v : c.voltages) EXPECT_EQ(v, 0.25f);

  const auto r = ft::interpolate_trace(sampled(0.2e-6, 1.6e-3, [](double t) { return 100.0 * t; }));
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(r.voltages[i], 100.0 * r.time(i), 1e-7);
}

TEST(Interpolate, SinusoidWithinMicroFraction) {
  const double amp = 0.1, w = 2.0 * std::numbers::pi * 1000.0;
  const auto s = ft::interpolate_trace(sampled(0.2e-6, 1.6e-3, [&](double t) { return amp * std::sin(w * t); }));
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(s.voltages[i] - amp * std::sin(w * s.time(i))));
  EXPECT_LT(worst, 1e-6 * amp);
}

TEST(Features, FixtureMatchesHandComputedValues) {
  const auto v = adexsbi::testing::check_feature_fixture();
  EXPECT_TRUE(v.pass) << v.detail;
}

TEST(Features, AdaptationIndexExamples) {
  const std::vector<double> constant = {1.0, 1.0, 1.0};
  const std::vector<double> growing = {1.0, 1.5};
  const std::vector<double> doubling = {1.0, 2.0, 4.0};
  EXPECT_DOUBLE_EQ(*ft::adaptation_index(constant), 0.0);
  EXPECT_DOUBLE_EQ(*ft::adaptation_index(growing), 0.2);
  EXPECT_DOUBLE_EQ(*ft::adaptation_index(doubling), 1.0 / 3.0);
  EXPECT_FALSE(ft::adaptation_index(std::vector<double>{1.0}).has_value());
}

TEST(Features, SpikesOutsideStimulusIgnored) {
  auto f = feature_fixture();
  auto with_extra = f.spikes;
  with_extra.insert(with_extra.begin(), 0.1e-3);
  with_extra.push_back(f.stimulus.offset());
  with_extra.push_back(1.5e-3);
  const auto a = ft::extract_features(f.trace, f.spikes, f.stimulus);
  const auto b = ft::extract_features(f.trace, with_extra, f.stimulus);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.valid, b.valid);
}

TEST(Troughs, DoubleDipSplitsFastAndSlow) {
  auto f = feature_fixture();
  const auto t = ft::trough_features(f.trace, f.spikes, f.stimulus);
  ASSERT_TRUE(t.fast_valid);
  ASSERT_TRUE(t.slow_valid);
  EXPECT_EQ(t.v_fast, 0.45f);
  EXPECT_EQ(t.v_slow, 0.40f);
  // A deeper dip inside the fast window does not leak into the slow trough.
  f.trace.voltages[grid_index(f.trace, 0.405e-3)] = 0.30f;
  const auto u = ft::trough_features(f.trace, f.spikes, f.stimulus);
  EXPECT_EQ(u.v_fast, 0.30f);
  EXPECT_EQ(u.v_slow, 0.40f);
}

TEST(Troughs, SingleSpikeOnlyFastTroughValid) {
  const auto f = feature_fixture();
  const std::vector<double> one = {0.4e-3};
  const auto fv = ft::extract_features(f.trace, one, f.stimulus);
  EXPECT_TRUE(fv.is_valid(Feature::kLatency));
  EXPECT_TRUE(fv.is_valid(Feature::kFastTrough));
  EXPECT_FALSE(fv.is_valid(Feature::kSlowTrough));
  EXPECT_FALSE(fv.is_valid(Feature::kSlowTroughTime));
  EXPECT_FALSE(fv.is_valid(Feature::kIsiFirst));
  EXPECT_FALSE(fv.is_valid(Feature::kAdaptation));
  // Fast window spans 10% of [t1, offset): 0.41 ms lies inside it.
  EXPECT_EQ(fv[Feature::kFastTrough], 0.45f);
}

class FeatureInvariants : public ::testing::TestWithParam<int> {};

TEST_P(FeatureInvariants, HoldOnRandomSpikeTrains) {
  adexsbi::Rng rng(adexsbi::derive_seed(99, 1, static_cast<std::uint64_t>(GetParam())));
  auto f = feature_fixture();
  const std::size_t n = 3 + static_cast<std::size_t>(adexsbi::uniform_int(rng, 0, 20));
  std::vector<double> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(f.stimulus.onset + adexsbi::uniform01(rng) * f.stimulus.duration);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  const auto fv = ft::extract_features(f.trace, s, f.stimulus);

  // Mean ISI telescopes.
  EXPECT_NEAR(fv[Feature::kIsiMean], (s.back() - s.front()) / static_cast<double>(s.size() - 1), 1e-15);
  const double a = fv[Feature::kAdaptation];
  EXPECT_GT(a, -1.0);
  EXPECT_LT(a, 1.0);
  EXPECT_GE(fv[Feature::kCvIsi], 0.0);
  EXPECT_GE(fv[Feature::kSlowTroughTime], 0.0);
  EXPECT_LE(fv[Feature::kSlowTroughTime], 1.0);
  EXPECT_LE(fv[Feature::kFastTrough], fv[Feature::kV0] + 0.1 + 1e-6);

  // Shifting spikes and stimulus together leaves spike timing features unchanged.
  const double shift = 0.05e-3;
  auto shifted_stim = f.stimulus;
  shifted_stim.onset += shift;
  std::vector<double> s2 = s;
  for (double& t : s2) t += shift;
  const auto g = ft::extract_features(f.trace, s2, shifted_stim);
  for (Feature k : {Feature::kRate, Feature::kLatency, Feature::kIsiFirst, Feature::kIsiLast, Feature::kIsiMean,
                    Feature::kCvIsi, Feature::kAdaptation}) {
    EXPECT_NEAR(g[k], fv[k], 1e-9 * std::max(1.0, std::abs(fv[k]))) << ft::kFeatureNames[static_cast<std::size_t>(k)];
  }

  // A constant voltage offset moves voltage features and nothing else.
  auto raised = f.trace;
  for (float& v : raised.voltages) v += 0.125f;
  const auto h = ft::extract_features(raised, s, f.stimulus);
  for (std::size_t k = 0; k < ft::kNumFeatures; ++k) {
    const auto feat = static_cast<Feature>(k);
    const bool voltage = feat == Feature::kV0 || feat == Feature::kVMin || feat == Feature::kFastTrough ||
                         feat == Feature::kSlowTrough;
    EXPECT_NEAR(h.values[k], fv.values[k] + (voltage ? 0.125 : 0.0), 1e-6) << ft::kFeatureNames[k];
  }
}

INSTANTIATE_TEST_SUITE_P(Random, FeatureInvariants, ::testing::Range(0, 25));

TEST(Standardize, ConstantColumnsBecomeZeroWithWarning) {
  auto sink = std::make_shared<spdlog::sinks::ringbuffer_sink_mt>(32);
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(std::make_shared<spdlog::logger>("capture", sink));
  const auto f = feature_fixture();
  const auto fv = ft::extract_features(f.trace, f.spikes, f.stimulus);
  const std::vector<ft::FeatureVector> batch(5, fv);
  const auto st = ft::standardize_features(batch);
  spdlog::set_default_logger(previous);

  EXPECT_EQ(st.record.degenerate.size(), ft::kNumFeatures);
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (std::size_t j = 0; j < ft::kNumFeatures; ++j) EXPECT_EQ(st.rows.at(i, j), 0.0);
  bool warned = false;
  for (const auto& line : sink->last_formatted()) warned = warned || line.find("zero spread") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(Standardize, ZeroMeanUnitSpreadAndRoundTrip) {
  adexsbi::Rng rng(4);
  std::vector<ft::FeatureVector> batch(200);
  for (auto& fv : batch) {
    for (std::size_t j = 0; j < ft::kNumFeatures; ++j) fv.values[j] = (j + 1) * 3.0 + (j + 1) * adexsbi::standard_normal(rng);
    for (std::size_t j = 0; j < ft::kNumFeatures; ++j) fv.valid[j] = adexsbi::uniform01(rng) < 0.7;
  }
  const auto st = ft::standardize_features(batch);
  ASSERT_EQ(st.rows.dim(1), ft::kConditionDim);
  for (std::size_t j = 0; j < ft::kNumFeatures; ++j) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) m += st.rows.at(i, j);
    m /= static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) v += (st.rows.at(i, j) - m) * (st.rows.at(i, j) - m);
    v /= static_cast<double>(batch.size());
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-12);
  }
  const auto back = ft::destandardize_features(st.rows, st.record);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < ft::kNumFeatures; ++j) EXPECT_NEAR(back[i].values[j], batch[i].values[j], 1e-12 * (j + 10));
    for (Feature k : ft::kSpikeDependent) EXPECT_EQ(back[i].is_valid(k), batch[i].is_valid(k));
  }
  // Reapplying the stored record reproduces the fitted rows.
  const auto again = ft::standardize_features(batch, st.record);
  for (std::size_t i = 0; i < again.size(); ++i) EXPECT_EQ(again.data()[i], st.rows.data()[i]);
}

TEST(Standardize, WrongRecordWidthRejected) {
  const std::vector<ft::FeatureVector> batch(2);
  EXPECT_THROW(ft::standardize_features(batch, adexsbi::Normalizer::identity(3)), std::invalid_argument);
  EXPECT_THROW(ft::standardize_features(std::vector<ft::FeatureVector>{}), std::invalid_argument);
}

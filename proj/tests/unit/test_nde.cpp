#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/config/pipeline_config.hpp"
#include "adexsbi/dataset/prior.hpp"
#include "adexsbi/dataset/storage.hpp"
#include "adexsbi/nde/estimator.hpp"
#include "criteria.hpp"

namespace nde = adexsbi::nde;
namespace nn = adexsbi::nn;
namespace fs = std::filesystem;

namespace {

nde::FlowModel perturbed_flow(std::size_t dim, std::size_t cond, std::size_t blocks, std::uint64_t seed,
                              double scale = 0.05) {
  nde::FlowSpec spec;
  spec.dim = dim;
  spec.cond_dim = cond;
  spec.blocks = blocks;
  spec.hidden = 16;
  spec.seed = seed;
  nde::FlowModel flow(spec);
  adexsbi::Rng rng(seed + 1);
  adexsbi::testing::perturb_flow(flow, rng, scale);
  return flow;
}

nn::Tensor random_rows(std::size_t n, std::size_t d, adexsbi::Rng& rng, double scale = 1.0) {
  nn::Tensor t(nn::Shape{n, d});
  for (double& x : t.data()) x = scale * adexsbi::standard_normal(rng);
  return t;
}

fs::path scratch(const std::string& tag) {
  const auto p = fs::temp_directory_path() / ("adexsbi_nde_" + tag);
  fs::remove_all(p);
  return p;
}

double std_normal_log_density_oracle(std::span<const double> z) {
  double acc = 0.0;
  for (double x : z) acc += -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
  return acc;
}

}  // namespace

TEST(Flow, IdentityAtInitialisation) {
  nde::FlowSpec spec;
  spec.dim = 7;
  spec.cond_dim = 5;
  spec.blocks = 4;
  spec.hidden = 16;
  nde::FlowModel flow(spec);
  adexsbi::Rng rng(3);
  const auto theta = random_rows(20, 7, rng);
  const auto cond = random_rows(20, 5, rng);
  const auto f = flow.flow_forward(theta, cond);
  for (std::size_t i = 0; i < theta.size(); ++i) EXPECT_EQ(f.z.data()[i], theta.data()[i]);
  for (double ld : f.log_det) EXPECT_EQ(ld, 0.0);
  const auto lp = flow.log_prob(theta, cond);
  for (std::size_t r = 0; r < 20; ++r) EXPECT_NEAR(lp[r], std_normal_log_density_oracle(theta.row(r)), 1e-12);
}

TEST(Flow, InverseAndLogDetMatchNumericalJacobian) {
  const auto acc = adexsbi::testing::flow_accuracy(4, 50, 17);
  EXPECT_LT(acc.max_roundtrip, 1e-10);
  EXPECT_LT(acc.max_logdet_error, 1e-6);
}

TEST(Flow, DensityIntegratesToOneOnTwoDimensionalModel) {
  // Midpoint quadrature of exp(log q) over [-9, 9]^2.
  auto flow = perturbed_flow(2, 1, 3, 5, 0.2);
  const double lo = -9.0, h = 0.03;
  const auto m = static_cast<std::size_t>(18.0 / h);
  nn::Tensor grid(nn::Shape{m * m, 2}), cond(nn::Shape{m * m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      grid.at(i * m + j, 0) = lo + (static_cast<double>(i) + 0.5) * h;
      grid.at(i * m + j, 1) = lo + (static_cast<double>(j) + 0.5) * h;
      cond.at(i * m + j, 0) = 0.7;
    }
  }
  double mass = 0.0;
  for (double lp : flow.log_prob(grid, cond)) mass += std::exp(lp) * h * h;
  EXPECT_NEAR(mass, 1.0, 2e-3);
}

TEST(Flow, NormalisersEnterLogProbAsJacobian) {
  auto flow = perturbed_flow(3, 2, 2, 9);
  adexsbi::Rng rng(1);
  const auto theta = random_rows(10, 3, rng);
  const auto cond = random_rows(10, 2, rng);
  const auto base = flow.log_prob(theta, cond);
  // Rescaling theta by 2 around 1 and the normaliser by the same map changes
  // the density by -sum log 2.
  nn::Tensor scaled = theta;
  for (double& x : scaled.data()) x = 1.0 + 2.0 * x;
  flow.theta_norm.mean = {1.0, 1.0, 1.0};
  flow.theta_norm.scale = {2.0, 2.0, 2.0};
  const auto moved = flow.log_prob(scaled, cond);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(moved[i], base[i] - 3.0 * std::log(2.0), 1e-12);
}

TEST(Flow, SamplesCarryTheirLogProb) {
  const auto flow = perturbed_flow(7, 4, 4, 21);
  adexsbi::Rng rng(2);
  const auto cond = random_rows(1, 4, rng);
  adexsbi::Rng a(8), b(8);
  const auto s = flow.sample(cond, 200, a);
  const auto t = flow.sample(cond, 200, b);
  EXPECT_EQ(s.theta.data()[0], t.theta.data()[0]);
  nn::Tensor rep(nn::Shape{200, 4});
  for (std::size_t r = 0; r < 200; ++r)
    for (std::size_t c = 0; c < 4; ++c) rep.at(r, c) = cond.at(0, c);
  const auto lp = flow.log_prob(s.theta, rep);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_NEAR(s.log_prob[i], lp[i], 1e-9);
}

TEST(Flow, ShapeMismatchRejected) {
  const auto flow = perturbed_flow(3, 2, 2, 1);
  adexsbi::Rng rng(1);
  EXPECT_ANY_THROW(flow.log_prob(random_rows(4, 2, rng), random_rows(4, 2, rng)));
  EXPECT_ANY_THROW(flow.log_prob(random_rows(4, 3, rng), random_rows(3, 2, rng)));
}

TEST(Flow, SaveLoadRoundTrip) {
  auto flow = perturbed_flow(7, 3, 3, 4);
  flow.theta_norm.mean = {1, 2, 3, 4, 5, 6, 7};
  flow.theta_norm.scale = {2, 2, 2, 2, 2, 2, 3};
  const auto dir = scratch("flow");
  flow.save(dir);
  const auto back = nde::FlowModel::load(dir);
  fs::remove_all(dir);
  adexsbi::Rng rng(5);
  const auto theta = random_rows(16, 7, rng, 3.0);
  const auto cond = random_rows(16, 3, rng);
  EXPECT_EQ(back.log_prob(theta, cond), flow.log_prob(theta, cond));
  EXPECT_EQ(back.spec().blocks, 3u);
}

TEST(Flow, TrainingLowersValidationLoss) {
  // theta = 2 * c + noise in one dimension per coordinate.
  adexsbi::Rng rng(6);
  const std::size_t n = 2000;
  const auto cond = random_rows(n, 2, rng);
  nn::Tensor theta(nn::Shape{n, 2});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < 2; ++c) theta.at(r, c) = 2.0 * cond.at(r, c) + 0.3 * adexsbi::standard_normal(rng);
  nde::FlowSpec spec;
  spec.dim = 2;
  spec.cond_dim = 2;
  spec.blocks = 4;
  spec.hidden = 32;
  nde::FlowModel flow(spec);
  nde::StaticConditions enc(cond);
  nde::FlowTrainOptions opt;
  opt.epochs = 8;
  opt.batch_size = 64;
  opt.seed = 1;
  const auto report = nde::train_flow(flow, theta, enc, opt);
  ASSERT_EQ(report.epochs.size(), 8u);
  EXPECT_FALSE(report.halted);
  EXPECT_EQ(report.train_size + report.validation_size, n);
  double best = INFINITY;
  for (const auto& e : report.epochs) best = std::min(best, e.validation_nll);
  EXPECT_EQ(report.best_validation_nll, best);
  EXPECT_LT(best, report.epochs.front().validation_nll + 1e-12);
  // The conditional law has sd 0.3 per coordinate: NLL ~ 2 * (0.5 log(2 pi 0.09) + 0.5) = 0.43.
  EXPECT_LT(best, 1.0);
}

TEST(SummaryNet, ShapesFollowConvolutionArithmetic) {
  nde::SummaryNetSpec spec;
  spec.hidden = 8;
  spec.seed = 3;
  EXPECT_EQ(spec.conv1_length(), (10000 - 8) / 4 + 1);
  EXPECT_EQ(spec.conv2_length(), (spec.conv1_length() - 4) / 2 + 1);
  nde::SummaryNet net(spec);
  adexsbi::features::RegularTrace tr;
  tr.t_end = 1.6e-3;
  tr.voltages.assign(10000, 0.5f);
  for (std::size_t i = 0; i < tr.size(); ++i) tr.voltages[i] += 0.05f * std::sin(0.01f * static_cast<float>(i));
  const auto s = net.summarize(tr);
  EXPECT_EQ(s.size(), 14u);
  for (double v : s) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(net.summarize(tr), s);
  tr.voltages.pop_back();
  EXPECT_THROW(net.summarize(tr), std::invalid_argument);
}

TEST(Estimator, ModeNamesRoundTrip) {
  for (auto m : {nde::ConditioningMode::kHandcrafted, nde::ConditioningMode::kSummary})
    EXPECT_EQ(nde::parse_mode(nde::to_string(m)), m);
  EXPECT_THROW(nde::parse_mode("spectral"), std::invalid_argument);
}

class EstimatorModes : public ::testing::TestWithParam<nde::ConditioningMode> {};

TEST_P(EstimatorModes, TrainSaveLoadPreservesConditionAndDensity) {
  const auto cfg = adexsbi::config::default_config();
  adexsbi::dataset::Dataset data;
  data.records = adexsbi::dataset::simulate_records(adexsbi::dataset::sample_prior(48, 12), cfg.simulation, 12);
  nde::NdeTrainOptions opt;
  opt.mode = GetParam();
  opt.blocks = 2;
  opt.hidden = 16;
  opt.train.epochs = 1;
  opt.train.batch_size = 16;
  opt.train.validation_fraction = 0.25;
  const auto result = nde::train_nde(data, opt);
  const auto& est = result.estimator;
  EXPECT_EQ(est.mode, GetParam());
  EXPECT_EQ(est.summary.has_value(), GetParam() == nde::ConditioningMode::kSummary);

  const auto dir = scratch(nde::to_string(GetParam()));
  est.save(dir);
  const auto back = nde::PosteriorEstimator::load(dir);
  const auto hash = nde::PosteriorEstimator::content_hash(dir);
  EXPECT_EQ(hash, nde::PosteriorEstimator::content_hash(dir));
  fs::remove_all(dir);

  std::size_t checked = 0;
  for (const auto& rec : data.records) {
    if (rec.pathological) continue;
    const auto obs = nde::Observation::from_record(rec);
    const auto c = est.condition(obs);
    ASSERT_EQ(c.dim(0), 1u);
    ASSERT_EQ(c.dim(1), est.flow.spec().cond_dim);
    const auto cb = back.condition(obs);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(cb.data()[i], c.data()[i]);
    nn::Tensor theta(nn::Shape{1, 7});
    for (std::size_t j = 0; j < 7; ++j) theta.at(0, j) = rec.code[j];
    EXPECT_EQ(back.flow.log_prob(theta, cb), est.flow.log_prob(theta, c));
    if (++checked == 5) break;
  }
  EXPECT_EQ(checked, 5u);
}

INSTANTIATE_TEST_SUITE_P(Modes, EstimatorModes,
                         ::testing::Values(nde::ConditioningMode::kHandcrafted, nde::ConditioningMode::kSummary),
                         [](const auto& info) { return nde::to_string(info.param); });

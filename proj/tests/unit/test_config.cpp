#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "adexsbi/config/pipeline_config.hpp"

namespace cfg = adexsbi::config;

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(cfg::validate(cfg::default_config())); }

TEST(Config, PublishedSettingsInDefaults) {
  const auto c = cfg::default_config();
  EXPECT_EQ(c.simulation.onset, 0.3e-3);
  EXPECT_EQ(c.simulation.duration, 1.0e-3);
  EXPECT_EQ(c.simulation.experiment_length, 1.6e-3);
  EXPECT_EQ(c.simulation.dt, 0.2e-6);
  EXPECT_EQ(c.classifier.train.spec.blocks, 4u);
  EXPECT_EQ(c.classifier.train.spec.hidden, 100u);
  EXPECT_EQ(c.classifier.train.spec.dropout, 0.5);
  EXPECT_EQ(c.classifier.max_fnr, 0.05);
  EXPECT_EQ(c.nde.blocks_handcrafted, 10u);
  EXPECT_EQ(c.nde.blocks_summary, 8u);
  EXPECT_EQ(c.inference.posterior_samples, 1000u);
  EXPECT_EQ(c.inference.amortized_k, 8u);
  EXPECT_EQ(c.inference.amortized_samples, 10000u);
  // Reduced counts for a single workstation.
  EXPECT_EQ(c.sizes.initial, 5000u);
  EXPECT_EQ(c.sizes.training, 20000u);
  EXPECT_EQ(c.sizes.validation, 200u);
  EXPECT_EQ(c.nde.epochs_handcrafted, 20u);
  EXPECT_EQ(c.nde.epochs_summary, 10u);
}

TEST(Config, FullScalePresetRestoresPublishedCounts) {
  std::ifstream in(std::string(ADEXSBI_SOURCE_DIR) + "/configs/full_scale.json");
  ASSERT_TRUE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto c = cfg::from_json(ss.str());
  EXPECT_EQ(c.sizes.initial, 50000u);
  EXPECT_EQ(c.sizes.training, 600000u);
  EXPECT_EQ(c.sizes.validation, 600u);
  EXPECT_EQ(c.nde.epochs_handcrafted, 150u);
  EXPECT_EQ(c.nde.epochs_summary, 30u);
}

TEST(Config, JsonRoundTrip) {
  const auto text = cfg::to_json(cfg::default_config());
  EXPECT_EQ(cfg::to_json(cfg::from_json(text)), text);
  EXPECT_EQ(cfg::to_json(cfg::from_json("{}")), text);
}

TEST(Config, PartialDocumentKeepsOtherDefaults) {
  const auto c = cfg::from_json(R"({"nde": {"mode": "summary", "batch_size": 64}, "jobs": 3})");
  EXPECT_EQ(c.nde.mode, adexsbi::nde::ConditioningMode::kSummary);
  EXPECT_EQ(c.nde.batch_size, 64u);
  EXPECT_EQ(c.jobs, 3u);
  EXPECT_EQ(c.nde.blocks_handcrafted, 10u);
}

TEST(Config, UnknownKeysRejectedWithPath) {
  try {
    cfg::from_json(R"({"nde": {"epocs": 3}})");
    FAIL();
  } catch (const cfg::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("nde.epocs"), std::string::npos);
  }
  EXPECT_THROW(cfg::from_json(R"({"bogus": 1})"), cfg::ConfigError);
  EXPECT_THROW(cfg::from_json("{not json"), cfg::ConfigError);
  EXPECT_THROW(cfg::from_json(R"({"nde": {"mode": "spectral"}})"), cfg::ConfigError);
  EXPECT_THROW(cfg::from_json(R"({"dataset": {"initial": "many"}})"), cfg::ConfigError);
}

TEST(Config, ValidateNamesTheProblem) {
  auto expect_fail = [](auto mutate, const std::string& needle) {
    auto c = cfg::default_config();
    mutate(c);
    try {
      cfg::validate(c);
      ADD_FAILURE() << "accepted: " << needle;
    } catch (const cfg::ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_fail([](cfg::PipelineConfig& c) { c.simulation.dt = 0.0; }, "dt");
  expect_fail([](cfg::PipelineConfig& c) { c.simulation.onset = 1.0e-3; }, "stimulus window");
  expect_fail([](cfg::PipelineConfig& c) { c.simulation.noise_sigma = -1.0; }, "noise_sigma");
  expect_fail([](cfg::PipelineConfig& c) { c.sizes.training = 0; }, "dataset sizes");
  expect_fail([](cfg::PipelineConfig& c) { c.classifier.max_fnr = 1.5; }, "max_fnr");
  expect_fail([](cfg::PipelineConfig& c) { c.classifier.train.spec.dropout = 1.0; }, "dropout");
  expect_fail([](cfg::PipelineConfig& c) { c.nde.blocks_summary = 1; }, "two blocks");
  expect_fail([](cfg::PipelineConfig& c) { c.inference.sbc_bins = 1; }, "sbc_bins");
  expect_fail([](cfg::PipelineConfig& c) { c.jobs = 0; }, "jobs");
  expect_fail([](cfg::PipelineConfig& c) { c.simulation.table.ranges[0].physical_max = 0.0; }, "config:");
}

TEST(Config, EnvironmentOverridesApplyToAnyLeaf) {
  std::string text = R"({"nde": {"batch_size": 64}})";
  const std::map<std::string, std::string> env = {
      {"ADEXSBI_NDE_BATCH_SIZE", "32"},
      {"ADEXSBI_NDE_MODE", "summary"},
      {"ADEXSBI_DATASET_INITIAL", "77"},
      {"ADEXSBI_LOG_LEVEL", "debug"},
      {"OTHER_VAR", "1"}};
  const auto applied = cfg::apply_env_overrides(text, env);
  EXPECT_EQ(applied.size(), 3u);
  EXPECT_FALSE(applied.contains("ADEXSBI_LOG_LEVEL"));
  const auto c = cfg::from_json(text);
  EXPECT_EQ(c.nde.batch_size, 32u);
  EXPECT_EQ(c.nde.mode, adexsbi::nde::ConditioningMode::kSummary);
  EXPECT_EQ(c.sizes.initial, 77u);
}

TEST(Config, MalformedOverrideIsConfigError) {
  std::string text = "{}";
  cfg::apply_env_overrides(text, {{"ADEXSBI_NDE_EPOCHS_HANDCRAFTED", "abc"}});
  EXPECT_THROW(cfg::from_json(text), cfg::ConfigError);
  std::string broken = "{oops";
  EXPECT_THROW(cfg::apply_env_overrides(broken, {}), cfg::ConfigError);
}

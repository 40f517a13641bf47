#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "adexsbi/classifier/classifier.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr is folded into the captured text.
Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(ADEXSBI_CLI_PATH) + "' " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), p)) r.out += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("adexsbi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string run_flag() const { return "--run '" + dir_.string() + "' --log-level warn"; }
  json read_json(const fs::path& p) const {
    std::ifstream in(p);
    return json::parse(in);
  }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpListsSubcommandsAndSucceeds) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"generate", "train-classifier", "build-dataset", "train-nde", "infer", "ppc", "sbc",
                        "amortized-eval", "plot-data", "replay"}) {
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
  }
}

TEST_F(CliTest, SubcommandHelpStatesDefaults) {
  const std::pair<const char*, const char*> expect[] = {
      {"generate", "dataset.initial = 5000"},
      {"train-classifier", "classifier.epochs = 30"},
      {"build-dataset", "dataset.training = 20000"},
      {"train-nde", "nde.epochs_handcrafted = 20"},
      {"infer", "inference.posterior_samples = 1000"},
      {"ppc", "inference.ppc_reference_trials = 100"},
      {"sbc", "inference.sbc_bins = 20"},
      {"amortized-eval", "inference.amortized_samples = 10000"},
      {"plot-data", "default: <run>/plots"},
  };
  for (const auto& [sub, text] : expect) {
    const auto r = run(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find(text), std::string::npos) << sub << " help:\n" << r.out;
  }
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("generate --no-such-flag").code, 1);
  EXPECT_EQ(run("generate --n notanumber").code, 1);
  EXPECT_EQ(run(run_flag() + " generate --n 0").code, 1);
}

TEST_F(CliTest, ConfigErrorsExitTwoAndWriteErrorJson) {
  const auto cfg = dir_ / "bad.json";
  std::ofstream(cfg) << R"({"nde": {"epocs": 3}})";
  const auto r = run("--config '" + cfg.string() + "' " + run_flag() + " generate --n 2");
  EXPECT_EQ(r.code, 2);
  const auto err = read_json(dir_ / "error.json");
  EXPECT_EQ(err.at("exit_code"), 2);
  EXPECT_EQ(err.at("kind"), "config");
  EXPECT_EQ(err.at("subcommand"), "generate");
  EXPECT_NE(err.at("message").get<std::string>().find("nde.epocs"), std::string::npos);

  const auto env = run(run_flag() + " generate --n 2", "ADEXSBI_NDE_EPOCHS_HANDCRAFTED=abc");
  EXPECT_EQ(env.code, 2);
  EXPECT_EQ(run("--config '" + (dir_ / "missing.json").string() + "' " + run_flag() + " generate --n 2").code, 2);
}

TEST_F(CliTest, MissingPrerequisiteExitsThree) {
  const auto r = run(run_flag() + " train-classifier");
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(read_json(dir_ / "error.json").at("kind"), "missing_prerequisite");
  EXPECT_EQ(run(run_flag() + " train-nde").code, 3);
  EXPECT_EQ(run(run_flag() + " infer").code, 3);
}

TEST_F(CliTest, UnreachableAcceptanceExitsFour) {
  // A classifier that scores everything near zero against threshold 0.5.
  adexsbi::classifier::ClassifierSpec spec;
  spec.hidden = 4;
  spec.blocks = 1;
  adexsbi::classifier::ClassifierModel m(spec, 1);
  m.input_norm = adexsbi::Normalizer::identity(7);
  for (double& b : m.out_b.value.data()) b = -60.0;
  for (double& w : m.out_w.value.data()) w = 0.0;
  m.threshold = 0.5;
  m.save(dir_ / "classifier");
  const auto r = run(run_flag() + " build-dataset --n 3");
  EXPECT_EQ(r.code, 4) << r.out;
  EXPECT_EQ(read_json(dir_ / "error.json").at("kind"), "numerical");
}

TEST_F(CliTest, GenerateReportsHashAndReplayReproducesIt) {
  const auto r = run(run_flag() + " generate --n 4 --seed 9");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = json::parse(r.out.substr(r.out.find('{')));
  EXPECT_EQ(j.at("stage"), "generate");
  EXPECT_EQ(j.at("summary").at("records"), 4);
  const std::string hash = j.at("content_hash");
  EXPECT_EQ(hash.size(), 64u);
  EXPECT_TRUE(fs::exists(dir_ / "initial" / "manifest"));

  const auto again = run("--log-level warn replay --stage-dir '" + (dir_ / "initial").string() + "' --out '" +
                         (dir_ / "replayed").string() + "'");
  ASSERT_EQ(again.code, 0) << again.out;
  EXPECT_EQ(json::parse(again.out.substr(again.out.find('{'))).at("content_hash"), hash);
}

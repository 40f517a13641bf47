#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "adexsbi/config/pipeline_config.hpp"

// Pipeline stages behind the command line driver. Every stage writes its
// outputs plus a snapshot (config.json and stage.json) into its output
// directory; replay_stage re-executes a stage from that snapshot alone.
namespace adexsbi::pipeline {

enum class ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kPrerequisite = 3, kNumerical = 4, kInternal = 5 };

class StageError : public std::runtime_error {
 public:
  StageError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

/// Exit code for an exception escaping a stage.
ExitCode classify(const std::exception& e);
const char* exit_code_name(ExitCode code);

struct StageOutcome {
  std::string stage;
  std::filesystem::path dir;
  std::string content_hash;
  /// Stage-specific summary as JSON text.
  std::string summary;
};

struct GenerateArgs {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  /// "prior" or "constrained" (requires `classifier`).
  std::string source = "prior";
  std::filesystem::path classifier;
  std::filesystem::path out;
};

struct ClassifierArgs {
  std::filesystem::path dataset;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
};

struct TrainNdeArgs {
  std::filesystem::path dataset;
  std::filesystem::path out;
  nde::ConditioningMode mode = nde::ConditioningMode::kHandcrafted;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  /// Use only the first N usable records (0 = all).
  std::size_t max_records = 0;
};

struct InferArgs {
  std::filesystem::path model;
  std::filesystem::path dataset;
  std::size_t observation = 0;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct PpcArgs {
  std::filesystem::path model;
  std::filesystem::path dataset;
  std::size_t observation = 0;
  std::size_t n = 1000;
  std::size_t reference_trials = 100;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct SbcArgs {
  std::filesystem::path model;
  /// Optional; when set the constrained prior is used.
  std::filesystem::path classifier;
  std::size_t n_datasets = 200;
  std::size_t n_posterior = 99;
  std::size_t bins = 20;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct AmortizedArgs {
  std::filesystem::path model;
  std::filesystem::path dataset;
  std::size_t k = 8;
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct PlotArgs {
  std::filesystem::path input;
  std::filesystem::path out;
};

StageOutcome run_generate(const config::PipelineConfig& cfg, const GenerateArgs& args);
StageOutcome run_train_classifier(const config::PipelineConfig& cfg, const ClassifierArgs& args);
StageOutcome run_train_nde(const config::PipelineConfig& cfg, const TrainNdeArgs& args);
StageOutcome run_infer(const config::PipelineConfig& cfg, const InferArgs& args);
StageOutcome run_ppc(const config::PipelineConfig& cfg, const PpcArgs& args);
StageOutcome run_sbc(const config::PipelineConfig& cfg, const SbcArgs& args);
StageOutcome run_amortized_eval(const config::PipelineConfig& cfg, const AmortizedArgs& args);
StageOutcome run_plot_data(const config::PipelineConfig& cfg, const PlotArgs& args);

/// Re-runs the stage recorded in `stage_dir` with its snapshot config and
/// arguments, writing to `out` instead of the original location.
StageOutcome replay_stage(const std::filesystem::path& stage_dir, const std::filesystem::path& out);

/// Fraction of records whose firing rate lies in the configured band
/// (pathological records count as outside).
double in_range_fraction(const dataset::Dataset& data, const config::PipelineConfig& cfg);

}  // namespace adexsbi::pipeline

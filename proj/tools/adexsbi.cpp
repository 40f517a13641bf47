// Batch driver: one subcommand per pipeline stage.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "adexsbi/config/pipeline_config.hpp"
#include "adexsbi/pipeline/stages.hpp"

namespace fs = std::filesystem;
using adexsbi::pipeline::ExitCode;
using json = nlohmann::json;

namespace {

template <typename T>
std::string dflt(const T& v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

struct Common {
  std::string config_path;
  std::string run_dir = "runs/default";
  std::optional<std::size_t> jobs;
  std::string log_level = "info";
};

adexsbi::config::PipelineConfig load_config(const Common& c) {
  std::string text = "{}";
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw adexsbi::config::ConfigError("config: cannot read '" + c.config_path + "'");
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  const auto applied = adexsbi::config::apply_env_overrides(text, adexsbi::config::collect_env());
  for (const auto& [k, v] : applied) spdlog::info("config override {}={}", k, v);
  auto cfg = adexsbi::config::from_json(text);
  if (c.jobs) cfg.jobs = *c.jobs;
  adexsbi::config::validate(cfg);
  return cfg;
}

void write_error(const fs::path& run, const std::string& sub, ExitCode code, const std::string& msg) {
  try {
    fs::create_directories(run);
    json j = {{"subcommand", sub},
              {"exit_code", static_cast<int>(code)},
              {"kind", adexsbi::pipeline::exit_code_name(code)},
              {"message", msg}};
    std::ofstream(run / "error.json", std::ios::trunc) << j.dump(2) << '\n';
  } catch (const std::exception&) {
    // Reporting must never mask the original failure.
  }
}

}  // namespace

int main(int argc, char** argv) {
  const auto d = adexsbi::config::default_config();
  CLI::App app{"adexsbi: simulation-based inference of AdEx parameter codes"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  Common common;
  app.add_option("--config", common.config_path, "Pipeline configuration (JSON); ADEXSBI_* variables override keys");
  app.add_option("--run", common.run_dir, "Run directory holding stage outputs")->capture_default_str();
  app.add_option("--jobs", common.jobs, "Worker threads for simulation (default: config jobs = " + dflt(d.jobs) + ")")
      ->check(CLI::PositiveNumber);
  app.add_option("--log-level", common.log_level, "trace, debug, info, warn, error")->capture_default_str();

  // Unset numeric flags fall back to the config value named in the help.
  std::optional<std::size_t> n, epochs, observation, k, max_records, ref_trials, datasets, posterior, bins;
  std::optional<std::uint64_t> seed;
  std::string out, dataset_dir, classifier_dir, model_dir, source = "prior", mode, input, stage_dir;
  bool validation = false;
  auto seed_opt = [&](CLI::App* s, const std::string& key, std::uint64_t v) {
    s->add_option("--seed", seed, "Master seed (default: seeds." + key + " = " + dflt(v) + ")");
  };

  auto* gen = app.add_subcommand("generate", "Simulate a dataset from the uniform (or constrained) prior");
  gen->add_option("--n", n, "Records (default: dataset.initial = " + dflt(d.sizes.initial) + ")");
  seed_opt(gen, "initial", d.seeds.initial);
  gen->add_option("--out", out, "Dataset directory (default: <run>/initial)");
  gen->add_option("--source", source, "prior or constrained")->capture_default_str();
  gen->add_option("--classifier", classifier_dir, "Classifier for --source constrained (default: <run>/classifier)");

  auto* tc = app.add_subcommand("train-classifier", "Train the spike-count classifier and choose its threshold");
  tc->add_option("--dataset", dataset_dir, "Initial dataset (default: <run>/initial)");
  tc->add_option("--out", out, "Output directory (default: <run>/classifier)");
  tc->add_option("--epochs", epochs, "Epochs (default: classifier.epochs = " + dflt(d.classifier.train.epochs) + ")");
  seed_opt(tc, "classifier", d.seeds.classifier);

  auto* bd = app.add_subcommand("build-dataset", "Generate the classifier-constrained training dataset");
  bd->add_option("--n", n, "Records (default: dataset.training = " + dflt(d.sizes.training) + ", or dataset.validation = " +
                               dflt(d.sizes.validation) + " with --validation)");
  seed_opt(bd, "training (seeds.validation with --validation)", d.seeds.training);
  bd->add_option("--classifier", classifier_dir, "Classifier directory (default: <run>/classifier)");
  bd->add_option("--out", out, "Dataset directory (default: <run>/training or <run>/validation)");
  bd->add_flag("--validation", validation, "Build the validation set instead of the training set");

  auto* tn = app.add_subcommand("train-nde", "Train the conditional flow (handcrafted features or summary network)");
  tn->add_option("--dataset", dataset_dir, "Training dataset (default: <run>/training)");
  tn->add_option("--out", out, "Model directory (default: <run>/nde)");
  tn->add_option("--mode", mode, "handcrafted or summary (default: nde.mode = " + adexsbi::nde::to_string(d.nde.mode) + ")")
      ->check(CLI::IsMember({"handcrafted", "summary"}));
  tn->add_option("--epochs", epochs,
                 "Epochs (default: nde.epochs_handcrafted = " + dflt(d.nde.epochs_handcrafted) +
                     " / nde.epochs_summary = " + dflt(d.nde.epochs_summary) + ")");
  tn->add_option("--max-records", max_records, "Train on the first N usable records only (default: all)");
  seed_opt(tn, "nde", d.seeds.nde);

  auto* inf = app.add_subcommand("infer", "Draw posterior samples for one observation");
  inf->add_option("--model", model_dir, "Model directory (default: <run>/nde)");
  inf->add_option("--dataset", dataset_dir, "Dataset holding the observation (default: <run>/validation)");
  inf->add_option("--observation", observation, "Record index (default: 0)");
  inf->add_option("--n", n, "Samples (default: inference.posterior_samples = " + dflt(d.inference.posterior_samples) + ")");
  inf->add_option("--out", out, "Output directory (default: <run>/infer/obs_<id>)");
  seed_opt(inf, "inference", d.seeds.inference);

  auto* ppc = app.add_subcommand("ppc", "Posterior predictive check for one observation");
  ppc->add_option("--model", model_dir, "Model directory (default: <run>/nde)");
  ppc->add_option("--dataset", dataset_dir, "Dataset holding the observation (default: <run>/validation)");
  ppc->add_option("--observation", observation, "Record index (default: 0)");
  ppc->add_option("--n", n, "Posterior samples to simulate (default: inference.posterior_samples = " +
                                dflt(d.inference.posterior_samples) + ")");
  ppc->add_option("--reference-trials", ref_trials,
                  "Repeats of the target code (default: inference.ppc_reference_trials = " +
                      dflt(d.inference.ppc_reference_trials) + ")");
  ppc->add_option("--out", out, "Output directory (default: <run>/ppc/obs_<id>)");
  seed_opt(ppc, "inference", d.seeds.inference);

  auto* sbc = app.add_subcommand("sbc", "Simulation-based calibration of the trained model");
  sbc->add_option("--model", model_dir, "Model directory (default: <run>/nde)");
  sbc->add_option("--classifier", classifier_dir, "Draw theta* from the constrained prior of this classifier");
  sbc->add_option("--datasets", datasets, "Datasets (default: inference.sbc_datasets = " + dflt(d.inference.sbc_datasets) + ")");
  sbc->add_option("--posterior", posterior,
                  "Posterior draws per dataset (default: inference.sbc_posterior = " + dflt(d.inference.sbc_posterior) + ")");
  sbc->add_option("--bins", bins, "Histogram bins (default: inference.sbc_bins = " + dflt(d.inference.sbc_bins) + ")");
  sbc->add_option("--out", out, "Output directory (default: <run>/sbc)");
  seed_opt(sbc, "inference", d.seeds.inference);

  auto* am = app.add_subcommand("amortized-eval", "MAP posterior-predictive spike-count check on validation data");
  am->add_option("--model", model_dir, "Model directory (default: <run>/nde)");
  am->add_option("--dataset", dataset_dir, "Validation dataset (default: <run>/validation)");
  am->add_option("--k", k, "Observations (default: inference.amortized_k = " + dflt(d.inference.amortized_k) + ")");
  am->add_option("--n", n, "Posterior draws (default: inference.amortized_samples = " + dflt(d.inference.amortized_samples) + ")");
  am->add_option("--out", out, "Output directory (default: <run>/amortized)");
  seed_opt(am, "inference", d.seeds.inference);

  auto* pd = app.add_subcommand("plot-data", "Export CSV/SVG plot bundles from stage outputs");
  pd->add_option("--input", input, "Stage or run directory to scan (default: <run>)");
  pd->add_option("--out", out, "Output directory (default: <run>/plots)");

  auto* rp = app.add_subcommand("replay", "Re-run a stage from its snapshot (stage.json + config.json)");
  rp->add_option("--stage-dir", stage_dir, "Directory of the stage to replay")->required();
  rp->add_option("--out", out, "New output directory")->required();

  for (auto* s : app.get_subcommands({})) s->set_help_flag("-h,--help", "Print this help (all flags and defaults)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  spdlog::set_level(spdlog::level::from_str(common.log_level));
  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const fs::path run(common.run_dir);
  auto or_path = [](const std::string& v, const fs::path& fallback) { return v.empty() ? fallback : fs::path(v); };

  try {
    const auto cfg = load_config(common);
    namespace pl = adexsbi::pipeline;
    pl::StageOutcome res;
    if (name == "generate") {
      res = pl::run_generate(cfg, {n.value_or(cfg.sizes.initial), seed.value_or(cfg.seeds.initial), source,
                                   or_path(classifier_dir, run / "classifier"), or_path(out, run / "initial")});
    } else if (name == "train-classifier") {
      res = pl::run_train_classifier(cfg, {or_path(dataset_dir, run / "initial"), or_path(out, run / "classifier"),
                                           seed.value_or(cfg.seeds.classifier), epochs.value_or(0)});
    } else if (name == "build-dataset") {
      const std::size_t dn = n.value_or(validation ? cfg.sizes.validation : cfg.sizes.training);
      const std::uint64_t ds = seed.value_or(validation ? cfg.seeds.validation : cfg.seeds.training);
      res = pl::run_generate(cfg, {dn, ds, "constrained", or_path(classifier_dir, run / "classifier"),
                                   or_path(out, run / (validation ? "validation" : "training"))});
    } else if (name == "train-nde") {
      const auto m = mode.empty() ? cfg.nde.mode : adexsbi::nde::parse_mode(mode);
      res = pl::run_train_nde(cfg, {or_path(dataset_dir, run / "training"), or_path(out, run / "nde"), m,
                                    epochs.value_or(0), seed.value_or(cfg.seeds.nde), max_records.value_or(0)});
    } else if (name == "infer") {
      const std::size_t obs = observation.value_or(0);
      res = pl::run_infer(cfg, {or_path(model_dir, run / "nde"), or_path(dataset_dir, run / "validation"), obs,
                                n.value_or(cfg.inference.posterior_samples), seed.value_or(cfg.seeds.inference),
                                or_path(out, run / "infer" / ("obs_" + std::to_string(obs)))});
    } else if (name == "ppc") {
      const std::size_t obs = observation.value_or(0);
      res = pl::run_ppc(cfg, {or_path(model_dir, run / "nde"), or_path(dataset_dir, run / "validation"), obs,
                              n.value_or(cfg.inference.posterior_samples),
                              ref_trials.value_or(cfg.inference.ppc_reference_trials),
                              seed.value_or(cfg.seeds.inference),
                              or_path(out, run / "ppc" / ("obs_" + std::to_string(obs)))});
    } else if (name == "sbc") {
      res = pl::run_sbc(cfg, {or_path(model_dir, run / "nde"), fs::path(classifier_dir),
                              datasets.value_or(cfg.inference.sbc_datasets),
                              posterior.value_or(cfg.inference.sbc_posterior), bins.value_or(cfg.inference.sbc_bins),
                              seed.value_or(cfg.seeds.inference), or_path(out, run / "sbc")});
    } else if (name == "amortized-eval") {
      res = pl::run_amortized_eval(cfg, {or_path(model_dir, run / "nde"), or_path(dataset_dir, run / "validation"),
                                         k.value_or(cfg.inference.amortized_k),
                                         n.value_or(cfg.inference.amortized_samples),
                                         seed.value_or(cfg.seeds.inference), or_path(out, run / "amortized")});
    } else if (name == "plot-data") {
      res = pl::run_plot_data(cfg, {or_path(input, run), or_path(out, run / "plots")});
    } else if (name == "replay") {
      res = pl::replay_stage(stage_dir, out);
    }
    std::cout << json{{"stage", res.stage}, {"dir", res.dir.string()}, {"content_hash", res.content_hash},
                      {"summary", json::parse(res.summary.empty() ? "{}" : res.summary)}}
                     .dump(2)
              << '\n';
    return 0;
  } catch (const std::exception& e) {
    const ExitCode code = adexsbi::pipeline::classify(e);
    spdlog::error("{}: {}", name, e.what());
    write_error(out.empty() ? run : fs::path(out), name, code, e.what());
    return static_cast<int>(code);
  }
}

#include "adexsbi/pipeline/stages.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "adexsbi/classifier/classifier.hpp"
#include "adexsbi/common/hash.hpp"
#include "adexsbi/dataset/prior.hpp"
#include "adexsbi/dataset/storage.hpp"
#include "adexsbi/inference/amortized.hpp"
#include "adexsbi/inference/plot.hpp"
#include "adexsbi/inference/posterior.hpp"
#include "adexsbi/inference/ppc.hpp"
#include "adexsbi/inference/sbc.hpp"
#include "adexsbi/nde/estimator.hpp"
#include "adexsbi/nn/checkpoint.hpp"
#include "common/json_io.hpp"

namespace adexsbi::pipeline {
namespace fs = std::filesystem;

ExitCode classify(const std::exception& e) {
  if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->code();
  if (dynamic_cast<const config::ConfigError*>(&e)) return ExitCode::kConfig;
  if (dynamic_cast<const dataset::DatasetError*>(&e)) return ExitCode::kPrerequisite;
  if (dynamic_cast<const nn::CheckpointError*>(&e)) return ExitCode::kPrerequisite;
  if (dynamic_cast<const nde::FlowError*>(&e)) return ExitCode::kNumerical;
  if (dynamic_cast<const classifier::ThresholdError*>(&e)) return ExitCode::kNumerical;
  if (dynamic_cast<const dataset::ConstrainedSamplingError*>(&e)) return ExitCode::kNumerical;
  return ExitCode::kInternal;
}

const char* exit_code_name(ExitCode code) {
  switch (code) {
    case ExitCode::kOk: return "ok";
    case ExitCode::kUsage: return "usage";
    case ExitCode::kConfig: return "config";
    case ExitCode::kPrerequisite: return "missing_prerequisite";
    case ExitCode::kNumerical: return "numerical";
    case ExitCode::kInternal: return "internal";
  }
  return "internal";
}

namespace {

std::string abs_str(const fs::path& p) { return p.empty() ? std::string() : fs::absolute(p).lexically_normal().string(); }

void require_dataset(const fs::path& dir, const char* producer) {
  if (!fs::exists(dir / dataset::kManifestFile)) {
    throw StageError(ExitCode::kPrerequisite, "no complete dataset at '" + dir.string() + "' (run " + producer +
                                                  " first)");
  }
}

void require_file(const fs::path& path, const char* producer) {
  if (!fs::exists(path)) {
    throw StageError(ExitCode::kPrerequisite,
                     "missing '" + path.string() + "' (run " + producer + " first)");
  }
}

void require_out(const fs::path& out) {
  if (out.empty()) throw StageError(ExitCode::kUsage, "no output directory given");
  fs::create_directories(out);
}

StageOutcome finish_stage(const std::string& stage, const fs::path& out, const json& args,
                          const config::PipelineConfig& cfg, const std::string& hash, const json& summary) {
  std::ofstream(out / "config.json", std::ios::trunc) << config::to_json(cfg) << '\n';
  json j = {{"stage", stage}, {"args", args}, {"outputs", {{"content_hash", hash}, {"summary", summary}}}};
  write_json_file(out / "stage.json", j);
  spdlog::info("{}: done ({})", stage, hash.empty() ? "no hash" : hash.substr(0, 16));
  return {stage, out, hash, summary.dump()};
}

std::string hash_files(const fs::path& dir, std::initializer_list<const char*> names) {
  Sha256 h;
  for (const char* n : names) h.update(std::string(n) + ":" + sha256_file(dir / n) + "\n");
  return h.hex_digest();
}

std::size_t count_positive(const dataset::Dataset& d, const config::PipelineConfig& cfg) {
  const sim::Stimulus stim = cfg.simulation.stimulus();
  std::size_t n = 0;
  for (const auto& r : d.records) n += classifier::label_record(r, stim, cfg.classifier.label_range) ? 1 : 0;
  return n;
}

const dataset::DatasetRecord& find_record(const dataset::Dataset& d, std::size_t index) {
  for (const auto& r : d.records) {
    if (r.index == index) return r;
  }
  throw StageError(ExitCode::kUsage, "observation " + std::to_string(index) + " not in dataset (" +
                                         std::to_string(d.records.size()) + " records)");
}

nde::PosteriorEstimator load_model(const fs::path& dir) {
  require_file(dir / "estimator.json", "train-nde");
  return nde::PosteriorEstimator::load(dir);
}

classifier::ClassifierModel load_classifier(const fs::path& dir) {
  require_file(dir / "classifier.json", "train-classifier");
  auto m = classifier::ClassifierModel::load(dir);
  if (!(m.threshold >= 0.0)) throw StageError(ExitCode::kPrerequisite, "classifier at '" + dir.string() +
                                                                           "' has no chosen threshold");
  return m;
}

}  // namespace

double in_range_fraction(const dataset::Dataset& data, const config::PipelineConfig& cfg) {
  if (data.records.empty()) return 0.0;
  const sim::Stimulus stim = cfg.simulation.stimulus();
  std::size_t n = 0;
  for (const auto& r : data.records) {
    if (r.pathological) continue;
    const double rate = static_cast<double>(dataset::stimulus_spike_count(r.spike_times, stim)) / stim.duration;
    if (rate >= cfg.rate_min_hz * (1 - 1e-12) && rate <= cfg.rate_max_hz * (1 + 1e-12)) ++n;
  }
  return static_cast<double>(n) / static_cast<double>(data.records.size());
}

StageOutcome run_generate(const config::PipelineConfig& cfg, const GenerateArgs& a) {
  if (a.n == 0) throw StageError(ExitCode::kUsage, "generate: --n must be at least 1");
  require_out(a.out);
  std::vector<hw::CodeVector> codes;
  json summary = json::object();
  if (a.source == "prior") {
    codes = dataset::sample_prior(a.n, a.seed);
  } else if (a.source == "constrained") {
    const auto clf = load_classifier(a.classifier);
    const auto cs = dataset::constrained_sample(clf.scorer(), clf.threshold, a.n, a.seed);
    codes = cs.codes;
    summary["acceptance_rate"] = cs.acceptance_rate;
    summary["draws"] = cs.draws;
    summary["threshold"] = clf.threshold;
  } else {
    throw StageError(ExitCode::kUsage, "generate: unknown source '" + a.source + "' (prior or constrained)");
  }
  json args = {{"n", a.n}, {"seed", a.seed}, {"source", a.source}, {"classifier", abs_str(a.classifier)},
               {"out", abs_str(a.out)}};
  json snapshot = json::parse(config::to_json(cfg));
  snapshot["codes"] = {{"source", a.source}, {"n", a.n}, {"seed", a.seed}, {"classifier", abs_str(a.classifier)}};
  dataset::GenerationInfo info;
  info.master_seed = a.seed;
  info.jobs = cfg.jobs;
  info.config_snapshot = snapshot.dump();
  const auto manifest = dataset::generate_dataset(codes, cfg.simulation, a.out, info);

  const auto data = dataset::load_dataset(a.out, {.traces = false, .spikes = true});
  const double in_range = in_range_fraction(data, cfg);
  summary["records"] = manifest.record_count;
  summary["pathological"] = manifest.pathological_count;
  summary["in_range_fraction"] = in_range;
  summary["label_positive_fraction"] =
      static_cast<double>(count_positive(data, cfg)) / static_cast<double>(data.records.size());
  spdlog::info("generate: {} records, in-range fraction {:.4f}", manifest.record_count, in_range);
  return finish_stage(a.source == "prior" ? "generate" : "build-dataset", a.out, args, cfg, manifest.content_hash,
                      summary);
}

StageOutcome run_train_classifier(const config::PipelineConfig& cfg, const ClassifierArgs& a) {
  require_dataset(a.dataset, "generate");
  require_out(a.out);
  const auto data = dataset::load_dataset(a.dataset, {.traces = false, .spikes = true, .skip_pathological = true});
  const sim::Stimulus stim = cfg.simulation.stimulus();
  std::vector<hw::CodeVector> codes;
  std::vector<bool> labels;
  for (const auto& r : data.records) {
    codes.push_back(r.code);
    labels.push_back(classifier::label_record(r, stim, cfg.classifier.label_range));
  }
  // Held-out split for the threshold, drawn from the classifier seed.
  std::vector<std::size_t> order(codes.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(a.seed, streams::kShuffle, 7));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_int(rng, 0, static_cast<int>(i - 1))]);
  const auto n_hold = static_cast<std::size_t>(cfg.classifier.held_out_fraction * static_cast<double>(order.size()));
  std::vector<hw::CodeVector> tr_codes, ho_codes;
  std::vector<bool> tr_labels, ho_labels;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t k = order[i];
    (i < n_hold ? ho_codes : tr_codes).push_back(codes[k]);
    (i < n_hold ? ho_labels : tr_labels).push_back(labels[k]);
  }
  classifier::TrainOptions opt = cfg.classifier.train;
  opt.seed = a.seed;
  if (a.epochs > 0) opt.epochs = a.epochs;
  classifier::TrainingCurve curve;
  classifier::ClassifierModel model;
  try {
    model = classifier::train_classifier(tr_codes, tr_labels, opt, &curve);
  } catch (const std::invalid_argument& e) {
    throw StageError(ExitCode::kPrerequisite, std::string("train-classifier: ") + e.what());
  }
  model.label_range = cfg.classifier.label_range;
  if (std::count(ho_labels.begin(), ho_labels.end(), true) == 0) {
    throw StageError(ExitCode::kPrerequisite, "train-classifier: held-out split has no positives");
  }
  const auto choice = classifier::choose_threshold(model, ho_codes, ho_labels, cfg.classifier.max_fnr);
  model.threshold = choice.threshold;
  model.save(a.out);

  const auto scores = model.predict_probs(ho_codes);
  std::size_t accepted = 0, correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    accepted += scores[i] >= choice.threshold ? 1 : 0;
    correct += ((scores[i] >= 0.5) == ho_labels[i]) ? 1 : 0;
  }
  json summary = {{"threshold", choice.threshold},
                  {"held_out_fnr", choice.false_negative_rate},
                  {"held_out_positives", choice.positives},
                  {"held_out_size", ho_codes.size()},
                  {"held_out_acceptance", static_cast<double>(accepted) / static_cast<double>(scores.size())},
                  {"held_out_accuracy_at_half", static_cast<double>(correct) / static_cast<double>(scores.size())},
                  {"training_loss", curve.epoch_loss}};
  json args = {{"dataset", abs_str(a.dataset)}, {"out", abs_str(a.out)}, {"seed", a.seed}, {"epochs", opt.epochs}};
  return finish_stage("train-classifier", a.out, args, cfg, hash_files(a.out, {"classifier.adxt", "classifier.json"}),
                      summary);
}

StageOutcome run_train_nde(const config::PipelineConfig& cfg, const TrainNdeArgs& a) {
  require_dataset(a.dataset, "build-dataset");
  require_out(a.out);
  const bool summary_mode = a.mode == nde::ConditioningMode::kSummary;
  // Handcrafted mode never touches the trace file.
  auto data = dataset::load_dataset(a.dataset,
                                    {.traces = summary_mode, .spikes = false, .skip_pathological = true});
  if (a.max_records > 0 && data.records.size() > a.max_records) data.records.resize(a.max_records);
  nde::NdeTrainOptions opt;
  opt.mode = a.mode;
  opt.blocks = summary_mode ? cfg.nde.blocks_summary : cfg.nde.blocks_handcrafted;
  opt.hidden = cfg.nde.hidden;
  opt.hidden_layers = cfg.nde.hidden_layers;
  opt.clamp = cfg.nde.clamp;
  opt.train.epochs = a.epochs > 0 ? a.epochs : (summary_mode ? cfg.nde.epochs_summary : cfg.nde.epochs_handcrafted);
  opt.train.batch_size = cfg.nde.batch_size;
  opt.train.learning_rate = cfg.nde.learning_rate;
  opt.train.validation_fraction = cfg.nde.validation_fraction;
  opt.train.seed = a.seed;
  nde::NdeResult res = nde::train_nde(data, opt);
  if (res.report.epochs.empty()) {
    throw StageError(ExitCode::kNumerical, "train-nde: " + res.report.halt_reason);
  }
  res.estimator.save(a.out);
  json epochs = json::array();
  for (const auto& e : res.report.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_nll", e.train_nll}, {"validation_nll", e.validation_nll},
                      {"seconds", e.seconds}});
  }
  json report = {{"epochs", epochs},
                 {"best_epoch", res.report.best_epoch},
                 {"best_validation_nll", res.report.best_validation_nll},
                 {"seed", res.report.seed},
                 {"wall_clock_seconds", res.report.wall_clock_seconds},
                 {"train_size", res.report.train_size},
                 {"validation_size", res.report.validation_size},
                 {"halted", res.report.halted},
                 {"halt_reason", res.report.halt_reason}};
  write_json_file(a.out / "training_report.json", report);
  json args = {{"dataset", abs_str(a.dataset)}, {"out", abs_str(a.out)},   {"mode", nde::to_string(a.mode)},
               {"epochs", opt.train.epochs},     {"seed", a.seed},          {"max_records", a.max_records}};
  json summary = {{"best_epoch", res.report.best_epoch},
                  {"best_validation_nll", res.report.best_validation_nll},
                  {"halted", res.report.halted}};
  StageOutcome out = finish_stage("train-nde", a.out, args, cfg, nde::PosteriorEstimator::content_hash(a.out), summary);
  if (res.report.halted) {
    throw StageError(ExitCode::kNumerical, "train-nde: " + res.report.halt_reason + " (best checkpoint saved)");
  }
  return out;
}

StageOutcome run_infer(const config::PipelineConfig& cfg, const InferArgs& a) {
  require_dataset(a.dataset, "generate or build-dataset");
  require_out(a.out);
  const auto est = load_model(a.model);
  const auto data = dataset::load_dataset(a.dataset, {.traces = est.mode == nde::ConditioningMode::kSummary});
  const auto& rec = find_record(data, a.observation);
  auto samples = inference::posterior_samples(est, nde::Observation::from_record(rec), a.n, a.seed);
  samples.observation_id = abs_str(a.dataset) + "#" + std::to_string(a.observation);
  samples.model_id = nde::PosteriorEstimator::content_hash(a.model).substr(0, 16);
  inference::write_samples_csv(a.out / "samples.csv", samples);
  const auto map = inference::select_map_sample(samples);
  json summary = {{"observation", a.observation},
                  {"n", a.n},
                  {"clipped", samples.clipped_count()},
                  {"map_code", map.values()},
                  {"target_code", rec.code.values()}};
  json args = {{"model", abs_str(a.model)}, {"dataset", abs_str(a.dataset)}, {"observation", a.observation},
               {"n", a.n},                  {"seed", a.seed},                 {"out", abs_str(a.out)}};
  return finish_stage("infer", a.out, args, cfg, sha256_file(a.out / "samples.csv"), summary);
}

StageOutcome run_ppc(const config::PipelineConfig& cfg, const PpcArgs& a) {
  require_dataset(a.dataset, "generate or build-dataset");
  require_out(a.out);
  const auto est = load_model(a.model);
  const auto data = dataset::load_dataset(a.dataset);
  const auto& rec = find_record(data, a.observation);
  const auto samples = inference::posterior_samples(est, nde::Observation::from_record(rec), a.n,
                                                    derive_seed(a.seed, streams::kPosterior, 1));
  const auto predictive = inference::posterior_predictive(samples.codes, cfg.simulation,
                                                          derive_seed(a.seed, streams::kPredictive, 1), 1, cfg.jobs);
  const std::vector<hw::CodeVector> target{rec.code};
  const auto reference = inference::posterior_predictive(target, cfg.simulation,
                                                         derive_seed(a.seed, streams::kPredictive, 2),
                                                         a.reference_trials, cfg.jobs);
  const auto pf = predictive.features();
  const auto rf = reference.features();
  auto report = inference::ppc_report(rec.features, pf, rf);
  report.pathological_excluded = predictive.pathological + reference.pathological;
  inference::write_ppc_csv(a.out / "ppc.csv", report);

  // Target and MAP predictive traces for plotting.
  const std::size_t best = inference::select_map_index(samples.log_prob);
  const auto& map_rec = predictive.records[best];
  {
    std::ofstream tr(a.out / "ppc_traces.csv", std::ios::trunc);
    tr << "time,target,map_predictive\n";
    for (std::size_t i = 0; i < rec.trace.size(); ++i) {
      tr << rec.trace.time(i) << ',' << rec.trace.voltages[i] << ',';
      if (i < map_rec.trace.size()) tr << map_rec.trace.voltages[i];
      tr << '\n';
    }
  }
  std::size_t in_iqr = 0;
  for (const auto& f : report.features) in_iqr += f.target_in_iqr ? 1 : 0;
  json summary = {{"observation", a.observation},
                  {"features_target_in_iqr", in_iqr},
                  {"pathological_excluded", report.pathological_excluded}};
  json args = {{"model", abs_str(a.model)}, {"dataset", abs_str(a.dataset)},
               {"observation", a.observation}, {"n", a.n},
               {"reference_trials", a.reference_trials}, {"seed", a.seed},
               {"out", abs_str(a.out)}};
  return finish_stage("ppc", a.out, args, cfg, hash_files(a.out, {"ppc.csv", "ppc_traces.csv"}), summary);
}

StageOutcome run_sbc(const config::PipelineConfig& cfg, const SbcArgs& a) {
  require_out(a.out);
  const auto est = load_model(a.model);
  std::optional<classifier::ClassifierModel> clf;
  if (!a.classifier.empty()) clf = load_classifier(a.classifier);
  const auto problem = inference::adex_sbc_problem(est, cfg.simulation, clf ? clf->scorer() : dataset::CodeScorer{},
                                                   clf ? clf->threshold : 0.0);
  const auto report = inference::sbc(problem, {a.n_datasets, a.n_posterior, a.bins, a.seed});
  std::vector<std::string> names(hw::kParamNames.begin(), hw::kParamNames.end());
  inference::write_sbc_csv(a.out, report, names);
  json pvals = json::object();
  for (std::size_t k = 0; k < names.size(); ++k) pvals[names[k]] = report.parameters[k].p_value;
  json args = {{"model", abs_str(a.model)}, {"classifier", abs_str(a.classifier)}, {"n_datasets", a.n_datasets},
               {"n_posterior", a.n_posterior}, {"bins", a.bins}, {"seed", a.seed}, {"out", abs_str(a.out)}};
  return finish_stage("sbc", a.out, args, cfg, hash_files(a.out, {"sbc_ranks.csv"}), {{"p_values", pvals}});
}

StageOutcome run_amortized_eval(const config::PipelineConfig& cfg, const AmortizedArgs& a) {
  require_dataset(a.dataset, "generate or build-dataset");
  require_out(a.out);
  const auto est = load_model(a.model);
  const auto data = dataset::load_dataset(a.dataset);
  inference::AmortizedOptions opt;
  opt.k = a.k;
  opt.n_samples = a.n;
  opt.seed = a.seed;
  const auto report = inference::amortized_eval(est, data, cfg.simulation, opt);
  inference::write_amortized_report(a.out, report);
  json summary = {{"k", report.cases.size()}, {"agreements", report.agreements()}, {"eligible", report.eligible}};
  json args = {{"model", abs_str(a.model)}, {"dataset", abs_str(a.dataset)}, {"k", a.k},
               {"n", a.n},                  {"seed", a.seed},                 {"out", abs_str(a.out)}};
  return finish_stage("amortized-eval", a.out, args, cfg, hash_files(a.out, {"amortized_report.csv"}), summary);
}

namespace {

// Reads a trace CSV with a time column followed by voltage columns.
std::vector<std::pair<std::string, features::RegularTrace>> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> names;
  {
    std::istringstream h(line);
    std::string cell;
    std::getline(h, cell, ',');
    while (std::getline(h, cell, ',')) names.push_back(cell);
  }
  std::vector<std::pair<std::string, features::RegularTrace>> out;
  for (const auto& n : names) out.push_back({n, {}});
  double first = 0.0, last = 0.0;
  bool any = false;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    const double t = std::stod(cell);
    if (!any) first = t;
    last = t;
    any = true;
    for (auto& [n, tr] : out) {
      if (!std::getline(row, cell, ',') || cell.empty()) continue;
      tr.voltages.push_back(std::stof(cell));
    }
  }
  for (auto& [n, tr] : out) {
    tr.t0 = first;
    tr.t_end = last;
  }
  return out;
}

}  // namespace

StageOutcome run_plot_data(const config::PipelineConfig& cfg, const PlotArgs& a) {
  if (!fs::exists(a.input)) throw StageError(ExitCode::kPrerequisite, "plot-data: no input at '" + a.input.string() + "'");
  require_out(a.out);
  static const char* const kColors[] = {"black", "crimson", "steelblue", "darkgreen"};
  std::size_t written = 0;
  std::vector<fs::path> dirs{a.input};
  for (const auto& e : fs::recursive_directory_iterator(a.input)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    const std::string tag = d == a.input ? std::string("root") : fs::relative(d, a.input).generic_string();
    std::string safe = tag;
    std::replace(safe.begin(), safe.end(), '/', '_');
    if (fs::exists(d / "samples.csv")) {
      const auto s = inference::read_samples_csv(d / "samples.csv");
      inference::write_corner_histograms(a.out / safe, s);
      inference::write_marginals_svg(a.out / safe / "marginals.svg", s);
      written += 3;
    }
    std::vector<fs::path> traces;
    for (const auto& e : fs::directory_iterator(d)) {
      const std::string name = e.path().filename().string();
      if (e.is_regular_file() && (name.rfind("trace_case", 0) == 0 || name == "ppc_traces.csv")) {
        traces.push_back(e.path());
      }
    }
    std::sort(traces.begin(), traces.end());
    for (const auto& t : traces) {
      const auto series = read_trace_csv(t);
      std::vector<inference::TraceSeries> plot;
      for (std::size_t i = 0; i < series.size(); ++i) {
        plot.push_back({series[i].first, kColors[i % 4], &series[i].second});
      }
      fs::create_directories(a.out / safe);
      inference::write_trace_svg(a.out / safe / (t.stem().string() + ".svg"), plot, tag + " " + t.stem().string());
      ++written;
    }
  }
  json args = {{"input", abs_str(a.input)}, {"out", abs_str(a.out)}};
  return finish_stage("plot-data", a.out, args, cfg, "", {{"files", written}});
}

StageOutcome replay_stage(const fs::path& stage_dir, const fs::path& out) {
  require_file(stage_dir / "stage.json", "the stage");
  require_file(stage_dir / "config.json", "the stage");
  const json st = read_json_file(stage_dir / "stage.json");
  std::ifstream cin(stage_dir / "config.json");
  const std::string text((std::istreambuf_iterator<char>(cin)), std::istreambuf_iterator<char>());
  const config::PipelineConfig cfg = config::from_json(text);
  const std::string stage = st.at("stage").get<std::string>();
  const json& a = st.at("args");
  auto path = [&](const char* key) { return fs::path(a.at(key).get<std::string>()); };
  if (stage == "generate" || stage == "build-dataset") {
    return run_generate(cfg, {a.at("n").get<std::size_t>(), a.at("seed").get<std::uint64_t>(),
                              a.at("source").get<std::string>(), path("classifier"), out});
  }
  if (stage == "train-classifier") {
    return run_train_classifier(cfg, {path("dataset"), out, a.at("seed").get<std::uint64_t>(),
                                      a.at("epochs").get<std::size_t>()});
  }
  if (stage == "train-nde") {
    return run_train_nde(cfg, {path("dataset"), out, nde::parse_mode(a.at("mode").get<std::string>()),
                               a.at("epochs").get<std::size_t>(), a.at("seed").get<std::uint64_t>(),
                               a.at("max_records").get<std::size_t>()});
  }
  if (stage == "infer") {
    return run_infer(cfg, {path("model"), path("dataset"), a.at("observation").get<std::size_t>(),
                           a.at("n").get<std::size_t>(), a.at("seed").get<std::uint64_t>(), out});
  }
  if (stage == "ppc") {
    return run_ppc(cfg, {path("model"), path("dataset"), a.at("observation").get<std::size_t>(),
                         a.at("n").get<std::size_t>(), a.at("reference_trials").get<std::size_t>(),
                         a.at("seed").get<std::uint64_t>(), out});
  }
  if (stage == "sbc") {
    return run_sbc(cfg, {path("model"), path("classifier"), a.at("n_datasets").get<std::size_t>(),
                         a.at("n_posterior").get<std::size_t>(), a.at("bins").get<std::size_t>(),
                         a.at("seed").get<std::uint64_t>(), out});
  }
  if (stage == "amortized-eval") {
    return run_amortized_eval(cfg, {path("model"), path("dataset"), a.at("k").get<std::size_t>(),
                                    a.at("n").get<std::size_t>(), a.at("seed").get<std::uint64_t>(), out});
  }
  if (stage == "plot-data") return run_plot_data(cfg, {path("input"), out});
  throw StageError(ExitCode::kConfig, "replay: unknown stage '" + stage + "'");
}

}  // namespace adexsbi::pipeline

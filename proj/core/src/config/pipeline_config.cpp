#include "adexsbi/config/pipeline_config.hpp"

#include <cctype>
#include <cstdlib>
#include <functional>

#include "config/json_convert.hpp"

extern char** environ;

namespace adexsbi::config {

PipelineConfig default_config() {
  PipelineConfig c;
  using R = hw::ParameterRange;
  auto& sim = c.simulation;
  sim.table.ranges = {R{20e-9, 400e-9},   // g_l [S]
                      R{0.2, 0.8},        // V_r [V]
                      R{5e-3, 150e-3},    // Delta_T [V]
                      R{0.55, 1.05},      // V_T [V]
                      R{0.0, 200e-9},     // a [S]
                      R{0.0, 5e-9},       // b [A]
                      R{5e-9, 200e-9}};   // g_tau_w [S]
  sim.fixed = {.c_m = 2e-12, .v_l = 0.5, .v_th = 1.1, .tau_ref = 2e-6, .i_max = 200e-9, .c_w = 2e-12};
  sim.onset = 0.3e-3;
  sim.duration = 1.0e-3;
  sim.experiment_length = 1.6e-3;
  sim.dt = 0.2e-6;
  sim.noise_sigma = 3e-12;
  return c;
}

void validate(const PipelineConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
  try {
    c.simulation.table.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  const auto& s = c.simulation;
  if (!(s.fixed.c_m > 0.0) || !(s.fixed.c_w > 0.0)) fail("capacitances must be positive");
  if (!(s.fixed.tau_ref > 0.0)) fail("simulation.fixed.tau_ref must be positive");
  if (!(s.fixed.v_th > s.fixed.v_l)) fail("simulation.fixed.v_th must exceed v_l");
  if (!(s.dt > 0.0)) fail("simulation.dt must be positive");
  if (!(s.onset >= 0.0 && s.duration > 0.0 && s.onset + s.duration <= s.experiment_length)) {
    fail("stimulus window must lie inside the experiment");
  }
  if (!(s.noise_sigma >= 0.0)) fail("simulation.noise_sigma must be non-negative");
  if (c.sizes.initial == 0 || c.sizes.training == 0 || c.sizes.validation == 0) fail("dataset sizes must be positive");
  if (c.classifier.label_range.min > c.classifier.label_range.max) fail("classifier.label_range is empty");
  if (!(c.classifier.max_fnr >= 0.0 && c.classifier.max_fnr <= 1.0)) fail("classifier.max_fnr must be in [0,1]");
  if (!(c.classifier.held_out_fraction > 0.0 && c.classifier.held_out_fraction < 1.0)) {
    fail("classifier.held_out_fraction must be in (0,1)");
  }
  if (!(c.classifier.train.spec.dropout >= 0.0 && c.classifier.train.spec.dropout < 1.0)) {
    fail("classifier.dropout must be in [0,1)");
  }
  if (c.classifier.train.batch_size == 0 || c.nde.batch_size == 0) fail("batch sizes must be positive");
  if (!(c.nde.validation_fraction >= 0.0 && c.nde.validation_fraction < 0.5)) {
    fail("nde.validation_fraction must be in [0,0.5)");
  }
  if (!(c.nde.learning_rate > 0.0) || !(c.classifier.train.learning_rate > 0.0)) fail("learning rates must be positive");
  if (!(c.nde.clamp > 0.0)) fail("nde.clamp must be positive");
  if (c.nde.blocks_handcrafted < 2 || c.nde.blocks_summary < 2) fail("flows need at least two blocks");
  if (c.inference.sbc_bins < 2) fail("inference.sbc_bins must be at least 2");
  if (c.inference.posterior_samples == 0 || c.inference.amortized_samples == 0) fail("sample counts must be positive");
  if (!(c.rate_min_hz <= c.rate_max_hz)) fail("rate band is empty");
  if (c.jobs == 0) fail("jobs must be at least 1");
}

std::string to_json(const PipelineConfig& c) {
  const auto& cl = c.classifier;
  json j = {
      {"simulation", simulation_to_json(c.simulation)},
      {"dataset", {{"initial", c.sizes.initial}, {"training", c.sizes.training}, {"validation", c.sizes.validation}}},
      {"rate_band_hz", {{"min", c.rate_min_hz}, {"max", c.rate_max_hz}}},
      {"classifier",
       {{"epochs", cl.train.epochs},
        {"batch_size", cl.train.batch_size},
        {"learning_rate", cl.train.learning_rate},
        {"hidden", cl.train.spec.hidden},
        {"blocks", cl.train.spec.blocks},
        {"dropout", cl.train.spec.dropout},
        {"label_min", cl.label_range.min},
        {"label_max", cl.label_range.max},
        {"max_fnr", cl.max_fnr},
        {"held_out_fraction", cl.held_out_fraction}}},
      {"nde",
       {{"mode", nde::to_string(c.nde.mode)},
        {"epochs_handcrafted", c.nde.epochs_handcrafted},
        {"epochs_summary", c.nde.epochs_summary},
        {"batch_size", c.nde.batch_size},
        {"learning_rate", c.nde.learning_rate},
        {"validation_fraction", c.nde.validation_fraction},
        {"blocks_handcrafted", c.nde.blocks_handcrafted},
        {"blocks_summary", c.nde.blocks_summary},
        {"hidden", c.nde.hidden},
        {"hidden_layers", c.nde.hidden_layers},
        {"clamp", c.nde.clamp}}},
      {"inference",
       {{"posterior_samples", c.inference.posterior_samples},
        {"ppc_reference_trials", c.inference.ppc_reference_trials},
        {"sbc_datasets", c.inference.sbc_datasets},
        {"sbc_posterior", c.inference.sbc_posterior},
        {"sbc_bins", c.inference.sbc_bins},
        {"amortized_k", c.inference.amortized_k},
        {"amortized_samples", c.inference.amortized_samples}}},
      {"seeds",
       {{"initial", c.seeds.initial},
        {"classifier", c.seeds.classifier},
        {"training", c.seeds.training},
        {"validation", c.seeds.validation},
        {"nde", c.seeds.nde},
        {"inference", c.seeds.inference}}},
      {"jobs", c.jobs}};
  return j.dump(2);
}

namespace {

// Recursively rejects keys absent from the reference (default) document.
void check_keys(const json& given, const json& reference, const std::string& path) {
  if (!given.is_object() || !reference.is_object()) return;
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string p = path.empty() ? it.key() : path + "." + it.key();
    if (!reference.contains(it.key())) throw ConfigError("config: unknown key '" + p + "'");
    check_keys(it.value(), reference.at(it.key()), p);
  }
}

}  // namespace

PipelineConfig from_json(const std::string& text) {
  json given;
  try {
    given = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  json merged = json::parse(to_json(default_config()));
  check_keys(given, merged, "");
  merged.merge_patch(given);
  PipelineConfig c;
  try {
    c.simulation = simulation_from_json(merged.at("simulation"));
    const json& d = merged.at("dataset");
    c.sizes = {d.at("initial").get<std::size_t>(), d.at("training").get<std::size_t>(),
               d.at("validation").get<std::size_t>()};
    c.rate_min_hz = merged.at("rate_band_hz").at("min").get<double>();
    c.rate_max_hz = merged.at("rate_band_hz").at("max").get<double>();
    const json& cl = merged.at("classifier");
    c.classifier.train.epochs = cl.at("epochs").get<std::size_t>();
    c.classifier.train.batch_size = cl.at("batch_size").get<std::size_t>();
    c.classifier.train.learning_rate = cl.at("learning_rate").get<double>();
    c.classifier.train.spec.hidden = cl.at("hidden").get<std::size_t>();
    c.classifier.train.spec.blocks = cl.at("blocks").get<std::size_t>();
    c.classifier.train.spec.dropout = cl.at("dropout").get<double>();
    c.classifier.label_range = {cl.at("label_min").get<std::size_t>(), cl.at("label_max").get<std::size_t>()};
    c.classifier.max_fnr = cl.at("max_fnr").get<double>();
    c.classifier.held_out_fraction = cl.at("held_out_fraction").get<double>();
    const json& n = merged.at("nde");
    c.nde.mode = nde::parse_mode(n.at("mode").get<std::string>());
    c.nde.epochs_handcrafted = n.at("epochs_handcrafted").get<std::size_t>();
    c.nde.epochs_summary = n.at("epochs_summary").get<std::size_t>();
    c.nde.batch_size = n.at("batch_size").get<std::size_t>();
    c.nde.learning_rate = n.at("learning_rate").get<double>();
    c.nde.validation_fraction = n.at("validation_fraction").get<double>();
    c.nde.blocks_handcrafted = n.at("blocks_handcrafted").get<std::size_t>();
    c.nde.blocks_summary = n.at("blocks_summary").get<std::size_t>();
    c.nde.hidden = n.at("hidden").get<std::size_t>();
    c.nde.hidden_layers = n.at("hidden_layers").get<std::size_t>();
    c.nde.clamp = n.at("clamp").get<double>();
    const json& inf = merged.at("inference");
    c.inference.posterior_samples = inf.at("posterior_samples").get<std::size_t>();
    c.inference.ppc_reference_trials = inf.at("ppc_reference_trials").get<std::size_t>();
    c.inference.sbc_datasets = inf.at("sbc_datasets").get<std::size_t>();
    c.inference.sbc_posterior = inf.at("sbc_posterior").get<std::size_t>();
    c.inference.sbc_bins = inf.at("sbc_bins").get<std::size_t>();
    c.inference.amortized_k = inf.at("amortized_k").get<std::size_t>();
    c.inference.amortized_samples = inf.at("amortized_samples").get<std::size_t>();
    const json& s = merged.at("seeds");
    c.seeds = {s.at("initial").get<std::uint64_t>(),  s.at("classifier").get<std::uint64_t>(),
               s.at("training").get<std::uint64_t>(), s.at("validation").get<std::uint64_t>(),
               s.at("nde").get<std::uint64_t>(),      s.at("inference").get<std::uint64_t>()};
    c.jobs = merged.at("jobs").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

std::map<std::string, std::string> apply_env_overrides(std::string& config_json,
                                                       const std::map<std::string, std::string>& env) {
  json doc;
  try {
    doc = json::parse(config_json);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  // Map every leaf of the full default document to its variable name, so
  // overrides also reach keys the given file leaves at their defaults.
  json full = json::parse(to_json(default_config()));
  full.merge_patch(doc);
  std::map<std::string, json::json_pointer> leaves;
  std::function<void(const json&, const std::string&, const json::json_pointer&)> walk =
      [&](const json& node, const std::string& name, const json::json_pointer& ptr) {
        if (node.is_object()) {
          for (auto it = node.begin(); it != node.end(); ++it) {
            std::string key = it.key();
            for (char& ch : key) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            walk(it.value(), name.empty() ? key : name + "_" + key, ptr / it.key());
          }
        } else {
          leaves.emplace("ADEXSBI_" + name, ptr);
        }
      };
  walk(full, "", json::json_pointer());

  std::map<std::string, std::string> applied;
  for (const auto& [var, value] : env) {
    if (var.rfind("ADEXSBI_", 0) != 0) continue;
    const auto it = leaves.find(var);
    if (it == leaves.end()) continue;  // other ADEXSBI_ variables (e.g. log level) are not config keys
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = value;
    }
    doc[it->second] = parsed;
    applied[var] = value;
  }
  config_json = doc.dump(2);
  return applied;
}

std::map<std::string, std::string> collect_env() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv(*e);
    if (kv.rfind("ADEXSBI_", 0) != 0) continue;
    const auto eq = kv.find('=');
    if (eq != std::string::npos) out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

}  // namespace adexsbi::config

#include "adexsbi/nde/estimator.hpp"

#include <stdexcept>

#include "adexsbi/common/hash.hpp"
#include "adexsbi/features/standardize.hpp"
#include "common/json_io.hpp"

namespace adexsbi::nde {
namespace fs = std::filesystem;

std::string to_string(ConditioningMode mode) {
  return mode == ConditioningMode::kSummary ? "summary" : "handcrafted";
}

ConditioningMode parse_mode(const std::string& text) {
  if (text == "handcrafted") return ConditioningMode::kHandcrafted;
  if (text == "summary") return ConditioningMode::kSummary;
  throw std::invalid_argument("unknown NDE mode '" + text + "' (expected handcrafted or summary)");
}

Observation Observation::from_record(const dataset::DatasetRecord& record) { return {record.features, record.trace}; }

nn::Tensor PosteriorEstimator::condition(const Observation& obs) const {
  if (mode == ConditioningMode::kHandcrafted) {
    return features::standardize_features(std::span<const features::FeatureVector>(&obs.features, 1), feature_record);
  }
  if (!summary) throw std::logic_error("PosteriorEstimator: summary mode without a summary network");
  const std::vector<double> s = summary->summarize(obs.trace);
  return nn::Tensor(nn::Shape{1, s.size()}, s);
}

void PosteriorEstimator::save(const fs::path& dir) const {
  fs::create_directories(dir);
  flow.save(dir, "flow");
  json j = {{"mode", to_string(mode)}, {"blocks", flow.spec().blocks}};
  if (mode == ConditioningMode::kHandcrafted) j["feature_normalization"] = normalizer_to_json(feature_record);
  if (summary) summary->save(dir);
  write_json_file(dir / "estimator.json", j);
}

PosteriorEstimator PosteriorEstimator::load(const fs::path& dir) {
  const json j = read_json_file(dir / "estimator.json");
  PosteriorEstimator e;
  e.mode = parse_mode(j.at("mode").get<std::string>());
  e.flow = FlowModel::load(dir, "flow");
  if (e.mode == ConditioningMode::kHandcrafted) {
    e.feature_record = normalizer_from_json(j.at("feature_normalization"));
  } else {
    e.summary = SummaryNet::load(dir);
  }
  return e;
}

std::string PosteriorEstimator::content_hash(const fs::path& dir) {
  Sha256 h;
  for (const char* name : {"flow.adxt", "flow.json", "summary.adxt", "summary.json", "estimator.json"}) {
    if (fs::exists(dir / name)) h.update(std::string(name) + ":" + sha256_file(dir / name) + "\n");
  }
  return h.hex_digest();
}

NdeResult train_nde(const dataset::Dataset& data, const NdeTrainOptions& options) {
  std::vector<const dataset::DatasetRecord*> recs;
  for (const auto& r : data.records) {
    if (!r.pathological) recs.push_back(&r);
  }
  if (recs.size() < 2) throw std::invalid_argument("train_nde: need at least two usable records");
  nn::Tensor theta(nn::Shape{recs.size(), hw::kNumFree});
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto v = recs[i]->code.as_reals();
    std::copy(v.begin(), v.end(), theta.row(i).begin());
  }

  const bool summary_mode = options.mode == ConditioningMode::kSummary;
  FlowSpec spec;
  spec.dim = hw::kNumFree;
  spec.blocks = options.blocks != 0 ? options.blocks : (summary_mode ? 8 : 10);
  spec.hidden = options.hidden;
  spec.hidden_layers = options.hidden_layers;
  spec.clamp = options.clamp;
  spec.seed = options.train.seed;

  NdeResult out;
  out.estimator.mode = options.mode;
  if (!summary_mode) {
    std::vector<features::FeatureVector> feats;
    feats.reserve(recs.size());
    for (const auto* r : recs) feats.push_back(r->features);
    features::StandardizedBatch sb = features::standardize_features(feats);
    spec.cond_dim = features::kConditionDim;
    out.estimator.flow = FlowModel(spec);
    out.estimator.feature_record = sb.record;
    StaticConditions enc(std::move(sb.rows));
    out.report = train_flow(out.estimator.flow, theta, enc, options.train);
  } else {
    std::vector<const features::RegularTrace*> traces;
    for (const auto* r : recs) {
      if (r->trace.voltages.size() != features::kGridPoints) {
        throw std::invalid_argument("train_nde: summary mode needs traces; load the dataset with traces");
      }
      traces.push_back(&r->trace);
    }
    SummaryNetSpec sspec;
    sspec.seed = options.train.seed;
    SummaryNet net(sspec);
    net.fit_normalization(traces);
    spec.cond_dim = sspec.output;
    out.estimator.flow = FlowModel(spec);
    SummaryConditions enc(net, std::move(traces));
    out.report = train_flow(out.estimator.flow, theta, enc, options.train);
    out.estimator.summary = std::move(net);
  }
  return out;
}

}  // namespace adexsbi::nde

#include "adexsbi/classifier/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/nn/checkpoint.hpp"
#include "adexsbi/nn/layers.hpp"
#include "adexsbi/nn/ops.hpp"
#include "adexsbi/nn/optimizer.hpp"
#include "common/json_io.hpp"

namespace adexsbi::classifier {
namespace fs = std::filesystem;
using nn::Graph;
using nn::Parameter;
using nn::Tensor;
using nn::Var;

bool label_spike_count(std::size_t count, LabelRange range) { return count >= range.min && count <= range.max; }

bool label_record(const dataset::DatasetRecord& record, const sim::Stimulus& stimulus, LabelRange range) {
  if (record.pathological) return false;
  return label_spike_count(dataset::stimulus_spike_count(record.spike_times, stimulus), range);
}

namespace {

Parameter make_weight(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  Parameter p(name, Tensor(nn::Shape{in, out}));
  nn::glorot_uniform(p.value, in, out, rng);
  return p;
}

Parameter make_bias(const std::string& name, std::size_t out) { return Parameter(name, Tensor(nn::Shape{out})); }

// Shared forward for training (params bound for backprop) and evaluation
// (params copied in as constants, so the model stays const).
template <typename Bind, typename Drop>
Var network(Graph& g, Var x, const ClassifierModel& m, Bind bind, Drop drop) {
  auto linear = [&](Var in, const Parameter& w, const Parameter& b) { return nn::add(nn::matmul(in, bind(w)), bind(b)); };
  Var h = linear(x, m.in_w, m.in_b);
  for (std::size_t k = 0; k < m.block_w1.size(); ++k) {
    Var t = nn::relu(linear(h, m.block_w1[k], m.block_b1[k]));
    t = drop(t);
    t = linear(t, m.block_w2[k], m.block_b2[k]);
    h = nn::add(h, t);
  }
  (void)g;
  return linear(nn::relu(h), m.out_w, m.out_b);
}

}  // namespace

ClassifierModel::ClassifierModel(const ClassifierSpec& s, std::uint64_t seed) : spec(s) {
  if (spec.hidden == 0) throw std::invalid_argument("classifier: hidden width must be positive");
  if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) throw std::invalid_argument("classifier: dropout must be in [0,1)");
  Rng rng(derive_seed(seed, streams::kInit, 0));
  const std::size_t H = spec.hidden;
  in_w = make_weight("in.weight", hw::kNumFree, H, rng);
  in_b = make_bias("in.bias", H);
  for (std::size_t k = 0; k < spec.blocks; ++k) {
    const std::string p = "block" + std::to_string(k);
    block_w1.push_back(make_weight(p + ".fc1.weight", H, H, rng));
    block_b1.push_back(make_bias(p + ".fc1.bias", H));
    block_w2.push_back(make_weight(p + ".fc2.weight", H, H, rng));
    block_b2.push_back(make_bias(p + ".fc2.bias", H));
  }
  out_w = make_weight("out.weight", H, 1, rng);
  out_b = make_bias("out.bias", 1);
  input_norm = Normalizer::identity(hw::kNumFree);
}

std::vector<Parameter*> ClassifierModel::parameters() {
  std::vector<Parameter*> out{&in_w, &in_b};
  for (std::size_t k = 0; k < block_w1.size(); ++k) {
    out.insert(out.end(), {&block_w1[k], &block_b1[k], &block_w2[k], &block_b2[k]});
  }
  out.insert(out.end(), {&out_w, &out_b});
  return out;
}

std::vector<const Parameter*> ClassifierModel::parameters() const {
  auto mut = const_cast<ClassifierModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

Tensor ClassifierModel::normalize(std::span<const hw::CodeVector> codes) const {
  Tensor x(nn::Shape{codes.size(), hw::kNumFree});
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto reals = codes[i].as_reals();
    std::copy(reals.begin(), reals.end(), x.row(i).begin());
  }
  return input_norm.apply(x);
}

std::vector<double> ClassifierModel::logits(std::span<const hw::CodeVector> codes) const {
  if (codes.empty()) return {};
  Graph g;
  Var x = g.input(normalize(codes));
  Var z = network(
      g, x, *this, [&](const Parameter& p) { return g.input(p.value); }, [](Var v) { return v; });
  const auto& d = z.value().data();
  return {d.begin(), d.end()};
}

std::vector<double> ClassifierModel::predict_probs(std::span<const hw::CodeVector> codes) const {
  std::vector<double> out = logits(codes);
  for (double& z : out) z = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return out;
}

double ClassifierModel::predict_prob(const hw::CodeVector& code) const {
  return predict_probs(std::span<const hw::CodeVector>(&code, 1)).front();
}

dataset::CodeScorer ClassifierModel::scorer() const {
  return [this](std::span<const hw::CodeVector> codes) { return predict_probs(codes); };
}

Var ClassifierModel::forward_train(Graph& g, const Tensor& normalized_inputs, Rng& dropout_rng) {
  Var x = g.input(normalized_inputs);
  const double p = spec.dropout;
  return network(
      g, x, *this, [&](const Parameter& prm) { return g.param(const_cast<Parameter&>(prm)); },
      [&](Var v) { return nn::dropout(v, p, dropout_rng, true); });
}

void ClassifierModel::save(const fs::path& dir) const {
  fs::create_directories(dir);
  nn::save_tensors(dir / "classifier.adxt", parameters());
  json j = {{"hidden", spec.hidden},
            {"blocks", spec.blocks},
            {"dropout", spec.dropout},
            {"input_normalization", normalizer_to_json(input_norm)},
            {"label_range", {label_range.min, label_range.max}},
            {"threshold", threshold}};
  write_json_file(dir / "classifier.json", j);
}

ClassifierModel ClassifierModel::load(const fs::path& dir) {
  const json j = read_json_file(dir / "classifier.json");
  ClassifierSpec spec;
  spec.hidden = j.at("hidden").get<std::size_t>();
  spec.blocks = j.at("blocks").get<std::size_t>();
  spec.dropout = j.at("dropout").get<double>();
  ClassifierModel m(spec, 0);
  nn::load_parameters(dir / "classifier.adxt", m.parameters());
  m.input_norm = normalizer_from_json(j.at("input_normalization"));
  const auto range = j.at("label_range").get<std::vector<std::size_t>>();
  m.label_range = {range.at(0), range.at(1)};
  m.threshold = j.at("threshold").get<double>();
  return m;
}

ClassifierModel train_classifier(std::span<const hw::CodeVector> codes, const std::vector<bool>& labels,
                                 const TrainOptions& options, TrainingCurve* curve) {
  if (codes.size() != labels.size()) throw std::invalid_argument("train_classifier: codes/labels length mismatch");
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const std::size_t n = codes.size();
  if (n_pos == 0 || n_pos == n) {
    throw std::invalid_argument("train_classifier: labels contain a single class (" + std::to_string(n_pos) +
                                " positives of " + std::to_string(n) + ")");
  }
  if (options.batch_size == 0) throw std::invalid_argument("train_classifier: batch size must be positive");

  ClassifierModel model(options.spec, options.seed);
  {
    Tensor raw(nn::Shape{n, hw::kNumFree});
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = codes[i].as_reals();
      std::copy(r.begin(), r.end(), raw.row(i).begin());
    }
    model.input_norm = Normalizer::fit(raw);
  }
  Tensor x_all(nn::Shape{n, hw::kNumFree});
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = codes[i].as_reals();
    std::copy(r.begin(), r.end(), x_all.row(i).begin());
  }
  x_all = model.input_norm.apply(x_all);

  // Weight positives so both classes contribute equally in expectation.
  const double pos_weight = static_cast<double>(n - n_pos) / static_cast<double>(n_pos);
  auto params = model.parameters();
  nn::Adam adam(params, {.learning_rate = options.learning_rate});
  Rng shuffle_rng(derive_seed(options.seed, streams::kShuffle, 0));
  Rng dropout_rng(derive_seed(options.seed, streams::kDropout, 0));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_int(shuffle_rng, 0, static_cast<int>(i - 1))]);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t len = std::min(options.batch_size, n - start);
      std::span<const std::size_t> idx(order.data() + start, len);
      Tensor xb = nn::gather_rows(x_all, idx);
      Tensor pos_w(nn::Shape{len, 1}), neg_w(nn::Shape{len, 1});
      for (std::size_t i = 0; i < len; ++i) {
        if (labels[idx[i]]) {
          pos_w[i] = pos_weight;
        } else {
          neg_w[i] = 1.0;
        }
      }
      Graph g;
      Var z = model.forward_train(g, xb, dropout_rng);
      // BCE with logits: y * w * softplus(-z) + (1 - y) * softplus(z)
      Var loss = nn::mean(nn::add(nn::mul(nn::softplus(nn::neg(z)), g.input(pos_w)),
                                  nn::mul(nn::softplus(z), g.input(neg_w))));
      nn::zero_grads(params);
      g.backward(loss);
      adam.step();
      loss_sum += loss.value().item();
      ++batches;
    }
    const double mean_loss = loss_sum / static_cast<double>(batches);
    if (curve) curve->epoch_loss.push_back(mean_loss);
    spdlog::info("classifier epoch {}/{}: loss {:.5f}", epoch + 1, options.epochs, mean_loss);
  }
  return model;
}

ClassifierModel train_classifier(const dataset::Dataset& data, const sim::Stimulus& stimulus,
                                 const TrainOptions& options, LabelRange range, TrainingCurve* curve) {
  std::vector<hw::CodeVector> codes;
  std::vector<bool> labels;
  for (const auto& r : data.records) {
    if (r.pathological) continue;
    codes.push_back(r.code);
    labels.push_back(label_record(r, stimulus, range));
  }
  ClassifierModel m = train_classifier(codes, labels, options, curve);
  m.label_range = range;
  return m;
}

ThresholdChoice choose_threshold(std::span<const double> positive_scores, double max_fnr) {
  if (positive_scores.empty()) throw std::invalid_argument("choose_threshold: held-out set has no positives");
  if (!(max_fnr >= 0.0)) throw std::invalid_argument("choose_threshold: max_fnr must be non-negative");
  std::vector<double> s(positive_scores.begin(), positive_scores.end());
  std::sort(s.begin(), s.end());
  const std::size_t P = s.size();
  ThresholdChoice out;
  out.positives = P;
  const auto allowed = static_cast<std::size_t>(std::floor(max_fnr * static_cast<double>(P) + 1e-9));
  if (allowed >= P) {
    out.threshold = 1.0 - std::numeric_limits<double>::epsilon();
  } else {
    // Rejecting scores strictly below s[allowed] rejects at most `allowed`
    // positives; any larger threshold would reject s[allowed] too.
    out.threshold = s[allowed];
  }
  const auto rejected = static_cast<std::size_t>(std::lower_bound(s.begin(), s.end(), out.threshold) - s.begin());
  out.false_negative_rate = static_cast<double>(rejected) / static_cast<double>(P);
  if (!(out.threshold > 0.0)) {
    throw ThresholdError("choose_threshold: classifier assigns zero probability to held-out positives; "
                         "the bound is only reachable with threshold 0",
                         out.false_negative_rate);
  }
  return out;
}

ThresholdChoice choose_threshold(const ClassifierModel& model, std::span<const hw::CodeVector> held_out,
                                 const std::vector<bool>& labels, double max_fnr) {
  if (held_out.size() != labels.size()) throw std::invalid_argument("choose_threshold: codes/labels length mismatch");
  const std::vector<double> scores = model.predict_probs(held_out);
  std::vector<double> pos;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i]) pos.push_back(scores[i]);
  }
  return choose_threshold(pos, max_fnr);
}

}  // namespace adexsbi::classifier

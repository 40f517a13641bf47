#include "adexsbi/nde/summary_net.hpp"

#include <cmath>
#include <stdexcept>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/nn/checkpoint.hpp"
#include "adexsbi/nn/layers.hpp"
#include "adexsbi/nn/ops.hpp"
#include "common/json_io.hpp"

namespace adexsbi::nde {
namespace fs = std::filesystem;
using nn::Graph;
using nn::Parameter;
using nn::Shape;
using nn::Tensor;
using nn::Var;

std::size_t SummaryNetSpec::conv1_length() const {
  return nn::conv1d_output_length(input_length, conv1_kernel, conv1_stride);
}

std::size_t SummaryNetSpec::conv2_length() const {
  return nn::conv1d_output_length(conv1_length(), conv2_kernel, conv2_stride);
}

SummaryNet::SummaryNet(const SummaryNetSpec& spec) : spec_(spec) {
  if (spec.conv2_length() == 0) throw std::invalid_argument("SummaryNet: input too short for the conv stack");
  Rng rng(derive_seed(spec.seed, streams::kInit, 0x5e));
  auto init = [&](const std::string& name, Shape shape, std::size_t fan_in, std::size_t fan_out) {
    Parameter p(name, Tensor(shape));
    nn::glorot_uniform(p.value, fan_in, fan_out, rng);
    return p;
  };
  const std::size_t F1 = spec.conv1_filters, F2 = spec.conv2_filters, H = spec.hidden;
  conv1_w_ = init("summary.conv1.weight", Shape{F1, 1, spec.conv1_kernel}, spec.conv1_kernel, F1 * spec.conv1_kernel);
  conv1_b_ = Parameter("summary.conv1.bias", Tensor(Shape{F1}));
  conv2_w_ = init("summary.conv2.weight", Shape{F2, F1, spec.conv2_kernel}, F1 * spec.conv2_kernel,
                  F2 * spec.conv2_kernel);
  conv2_b_ = Parameter("summary.conv2.bias", Tensor(Shape{F2}));
  gru_wih_ = init("summary.gru.w_ih", Shape{F2, 3 * H}, F2, 3 * H);
  gru_whh_ = init("summary.gru.w_hh", Shape{H, 3 * H}, H, 3 * H);
  gru_bih_ = Parameter("summary.gru.b_ih", Tensor(Shape{3 * H}));
  gru_bhh_ = Parameter("summary.gru.b_hh", Tensor(Shape{3 * H}));
  out_w_ = init("summary.out.weight", Shape{H, spec.output}, H, spec.output);
  out_b_ = Parameter("summary.out.bias", Tensor(Shape{spec.output}));
}

std::vector<Parameter*> SummaryNet::parameters() {
  return {&conv1_w_, &conv1_b_, &conv2_w_, &conv2_b_, &gru_wih_, &gru_whh_, &gru_bih_, &gru_bhh_, &out_w_, &out_b_};
}

template <typename Bind>
Var SummaryNet::run(Graph& g, Var x, Bind bind) const {
  const auto& s = x.shape();
  if (s.size() != 3 || s[1] != 1 || s[2] != spec_.input_length) {
    throw std::invalid_argument("SummaryNet: expected input [B,1," + std::to_string(spec_.input_length) + "], got " +
                                nn::shape_string(s));
  }
  Var h = nn::relu(nn::conv1d(x, bind(conv1_w_), bind(conv1_b_), spec_.conv1_stride));
  h = nn::relu(nn::conv1d(h, bind(conv2_w_), bind(conv2_b_), spec_.conv2_stride));
  h = nn::gru_sequence(h, bind(gru_wih_), bind(gru_whh_), bind(gru_bih_), bind(gru_bhh_));
  (void)g;
  return nn::add(nn::matmul(h, bind(out_w_)), bind(out_b_));
}

Var SummaryNet::forward(Graph& g, Var x, bool trainable) {
  if (!trainable) return static_cast<const SummaryNet&>(*this).forward(g, x);
  return run(g, x, [&](const Parameter& p) { return g.param(const_cast<Parameter&>(p)); });
}

Var SummaryNet::forward(Graph& g, Var x) const {
  return run(g, x, [&](const Parameter& p) { return g.input(p.value); });
}

Tensor SummaryNet::prepare(std::span<const features::RegularTrace* const> traces) const {
  const std::size_t L = spec_.input_length;
  Tensor x(Shape{traces.size(), 1, L});
  for (std::size_t b = 0; b < traces.size(); ++b) {
    const auto& v = traces[b]->voltages;
    if (v.size() != L) {
      throw std::invalid_argument("SummaryNet: trace has " + std::to_string(v.size()) + " samples, expected " +
                                  std::to_string(L));
    }
    for (std::size_t i = 0; i < L; ++i) x[b * L + i] = (static_cast<double>(v[i]) - trace_mean) / trace_scale;
  }
  return x;
}

std::vector<double> SummaryNet::summarize(const features::RegularTrace& trace) const {
  const features::RegularTrace* ptr = &trace;
  Graph g;
  Var out = forward(g, g.input(prepare(std::span<const features::RegularTrace* const>(&ptr, 1))));
  const auto& d = out.value().data();
  return {d.begin(), d.end()};
}

void SummaryNet::fit_normalization(std::span<const features::RegularTrace* const> traces) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto* t : traces) {
    for (float v : t->voltages) {
      sum += v;
      sq += static_cast<double>(v) * v;
      ++n;
    }
  }
  if (n == 0) return;
  trace_mean = sum / static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - trace_mean * trace_mean;
  trace_scale = var > 0.0 ? std::sqrt(var) : 1.0;
}

void SummaryNet::save(const fs::path& dir) const {
  fs::create_directories(dir);
  nn::save_parameters(dir / "summary.adxt", const_cast<SummaryNet*>(this)->parameters());
  json j = {{"input_length", spec_.input_length},
            {"conv1", {spec_.conv1_kernel, spec_.conv1_stride, spec_.conv1_filters}},
            {"conv2", {spec_.conv2_kernel, spec_.conv2_stride, spec_.conv2_filters}},
            {"hidden", spec_.hidden},
            {"output", spec_.output},
            {"seed", spec_.seed},
            {"trace_mean", trace_mean},
            {"trace_scale", trace_scale}};
  write_json_file(dir / "summary.json", j);
}

SummaryNet SummaryNet::load(const fs::path& dir) {
  const json j = read_json_file(dir / "summary.json");
  SummaryNetSpec s;
  s.input_length = j.at("input_length").get<std::size_t>();
  const auto c1 = j.at("conv1").get<std::vector<std::size_t>>();
  const auto c2 = j.at("conv2").get<std::vector<std::size_t>>();
  if (c1.size() != 3 || c2.size() != 3) throw nn::CheckpointError("summary: malformed conv spec");
  s.conv1_kernel = c1[0];
  s.conv1_stride = c1[1];
  s.conv1_filters = c1[2];
  s.conv2_kernel = c2[0];
  s.conv2_stride = c2[1];
  s.conv2_filters = c2[2];
  s.hidden = j.at("hidden").get<std::size_t>();
  s.output = j.at("output").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  SummaryNet net(s);
  nn::load_parameters(dir / "summary.adxt", net.parameters());
  net.trace_mean = j.at("trace_mean").get<double>();
  net.trace_scale = j.at("trace_scale").get<double>();
  return net;
}

}  // namespace adexsbi::nde

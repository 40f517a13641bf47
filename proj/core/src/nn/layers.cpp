#include "adexsbi/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "adexsbi/nn/ops.hpp"

namespace adexsbi::nn {

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.data()) v = (2.0 * uniform01(rng) - 1.0) * limit;
}

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight(name + ".weight", Tensor(Shape{in, out})), bias(name + ".bias", Tensor(Shape{out})) {
  glorot_uniform(weight.value, in, out, rng);
}

Var Linear::forward(Graph& g, Var x) { return add(matmul(x, g.param(weight)), g.param(bias)); }

Var Linear::forward_frozen(Graph& g, Var x) const {
  return add(matmul(x, g.input(weight.value)), g.input(bias.value));
}

void Linear::zero_init() {
  weight.value.fill(0.0);
  bias.value.fill(0.0);
}

Mlp::Mlp(const std::string& name, std::size_t in, std::size_t hidden, std::size_t hidden_layers, std::size_t out,
         Rng& rng) {
  std::size_t width = in;
  for (std::size_t i = 0; i < hidden_layers; ++i) {
    layers.emplace_back(name + ".l" + std::to_string(i), width, hidden, rng);
    width = hidden;
  }
  layers.emplace_back(name + ".l" + std::to_string(hidden_layers), width, out, rng);
}

Var Mlp::forward(Graph& g, Var x) {
  Var h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].forward(g, h);
    if (i + 1 < layers.size()) h = relu(h);
  }
  return h;
}

Var Mlp::forward_frozen(Graph& g, Var x) const {
  Var h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].forward_frozen(g, h);
    if (i + 1 < layers.size()) h = relu(h);
  }
  return h;
}

void Mlp::zero_output_layer() { layers.back().zero_init(); }

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<Tensor> snapshot(const std::vector<Parameter*>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore(const std::vector<Parameter*>& params, const std::vector<Tensor>& values) {
  if (params.size() != values.size()) throw std::logic_error("restore: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace adexsbi::nn

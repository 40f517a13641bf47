#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/nn/graph.hpp"

namespace adexsbi::nn {

/// Fills `t` uniformly in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// y = x W + b with W [in, out].
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  Var forward(Graph& g, Var x);
  /// Forward with the weights entered as constants; no gradients reach them.
  Var forward_frozen(Graph& g, Var x) const;
  void zero_init();
  std::vector<Parameter*> parameters() { return {&weight, &bias}; }

  std::size_t in_features() const { return weight.value.dim(0); }
  std::size_t out_features() const { return weight.value.dim(1); }

  Parameter weight;
  Parameter bias;
};

/// ReLU multilayer perceptron; no activation after the last layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, std::size_t in, std::size_t hidden, std::size_t hidden_layers, std::size_t out, Rng& rng);

  Var forward(Graph& g, Var x);
  Var forward_frozen(Graph& g, Var x) const;
  /// Zeroes the output layer so the network initially emits exactly zero.
  void zero_output_layer();
  std::vector<Parameter*> parameters();

  std::vector<Linear> layers;
};

std::vector<Tensor> snapshot(const std::vector<Parameter*>& params);
void restore(const std::vector<Parameter*>& params, const std::vector<Tensor>& values);
void zero_grads(const std::vector<Parameter*>& params);

}  // namespace adexsbi::nn

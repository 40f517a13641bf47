#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/nn/graph.hpp"

namespace adexsbi::testing {

/// Builds an op (or small composition) from graph inputs.
using OpBuilder = std::function<nn::Var(nn::Graph&, std::span<const nn::Var>)>;

struct GradCheck {
  double max_error = 0.0;  // max |autodiff - fd| / (|autodiff| + 1e-8)
  std::size_t entries = 0;
};

/// Compares reverse-mode gradients of sum(op(inputs) * R), R a fixed random
/// weighting, against central differences with step h.
GradCheck gradcheck(const OpBuilder& op, const std::vector<nn::Tensor>& inputs, Rng& rng, double h = 1e-5);

struct OpCase {
  std::string name;
  /// Draws a random instance: the input tensors for `build`.
  std::function<std::vector<nn::Tensor>(Rng&)> draw;
  OpBuilder build;
};

/// One case per differentiable op, with inputs kept clear of kinks and
/// outside the domain boundaries.
std::vector<OpCase> op_catalog();

nn::Tensor random_tensor(const nn::Shape& shape, Rng& rng, double scale = 1.0);

}  // namespace adexsbi::testing

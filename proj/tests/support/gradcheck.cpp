#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "adexsbi/nn/ops.hpp"

namespace adexsbi::testing {

using nn::Graph;
using nn::Shape;
using nn::Tensor;
using nn::Var;

Tensor random_tensor(const Shape& shape, Rng& rng, double scale) {
  Tensor t(shape);
  for (auto& v : t.data()) v = scale * standard_normal(rng);
  return t;
}

namespace {

double weighted_loss(const OpBuilder& op, const std::vector<Tensor>& inputs, const Tensor& weights) {
  Graph g;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(g.input(t));
  const Var out = op(g, vars);
  double acc = 0.0;
  for (std::size_t i = 0; i < out.value().size(); ++i) acc += out.value()[i] * weights[i];
  return acc;
}

// Keeps values at least `margin` away from zero, preserving sign.
Tensor away_from_zero(Tensor t, double margin) {
  for (auto& v : t.data()) v = v >= 0.0 ? v + margin : v - margin;
  return t;
}

Tensor positive(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (auto& v : t.data()) v = 0.5 + 1.5 * uniform01(rng);
  return t;
}

std::vector<Tensor> one(Tensor t) {
  std::vector<Tensor> v;
  v.push_back(std::move(t));
  return v;
}

}  // namespace

GradCheck gradcheck(const OpBuilder& op, const std::vector<Tensor>& inputs, Rng& rng, double h) {
  Graph g;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(g.input(t, /*requires_grad=*/true));
  const Var out = op(g, vars);
  const Tensor weights = random_tensor(out.value().shape(), rng);
  const Var loss = nn::sum(nn::mul(out, g.input(weights)));
  g.backward(loss);

  GradCheck res;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = g.grad(vars[k]);
    std::vector<Tensor> probe = inputs;
    for (std::size_t i = 0; i < probe[k].size(); ++i) {
      const double orig = probe[k][i];
      probe[k][i] = orig + h;
      const double up = weighted_loss(op, probe, weights);
      probe[k][i] = orig - h;
      const double down = weighted_loss(op, probe, weights);
      probe[k][i] = orig;
      const double fd = (up - down) / (2.0 * h);
      const double err = std::abs(analytic[i] - fd) / (std::abs(analytic[i]) + 1e-8);
      res.max_error = std::max(res.max_error, err);
      ++res.entries;
    }
  }
  return res;
}

std::vector<OpCase> op_catalog() {
  std::vector<OpCase> c;
  auto unary = [&](std::string name, Var (*fn)(Var), bool kink, bool pos) {
    c.push_back({std::move(name),
                 [kink, pos](Rng& r) {
                   const Shape s{3, 4};
                   if (pos) return one(positive(s, r));
                   return one(kink ? away_from_zero(random_tensor(s, r), 0.05) : random_tensor(s, r));
                 },
                 [fn](Graph&, std::span<const Var> x) { return fn(x[0]); }});
  };
  auto binary = [&](std::string name, Var (*fn)(Var, Var), Shape b_shape) {
    c.push_back({std::move(name),
                 [b_shape](Rng& r) { return std::vector<Tensor>{random_tensor({3, 4}, r), random_tensor(b_shape, r)}; },
                 [fn](Graph&, std::span<const Var> x) { return fn(x[0], x[1]); }});
  };

  c.push_back({"matmul", [](Rng& r) { return std::vector<Tensor>{random_tensor({3, 4}, r), random_tensor({4, 5}, r)}; },
               [](Graph&, std::span<const Var> x) { return nn::matmul(x[0], x[1]); }});
  binary("add", nn::add, {3, 4});
  binary("add_row_broadcast", nn::add, {1, 4});
  binary("add_scalar_broadcast", nn::add, {1});
  binary("sub", nn::sub, {3, 4});
  binary("sub_row_broadcast", nn::sub, {4});
  binary("mul", nn::mul, {3, 4});
  binary("mul_row_broadcast", nn::mul, {1, 4});
  c.push_back({"scale", [](Rng& r) { return one(random_tensor({3, 4}, r)); },
               [](Graph&, std::span<const Var> x) { return nn::scale(x[0], -1.7); }});
  c.push_back({"add_scalar", [](Rng& r) { return one(random_tensor({3, 4}, r)); },
               [](Graph&, std::span<const Var> x) { return nn::add_scalar(x[0], 0.3); }});
  unary("neg", nn::neg, false, false);
  unary("relu", nn::relu, true, false);
  unary("tanh", nn::tanh, false, false);
  unary("sigmoid", nn::sigmoid, false, false);
  unary("exp", nn::exp, false, false);
  unary("log", nn::log, false, true);
  unary("softplus", nn::softplus, false, false);
  unary("square", nn::square, false, false);
  unary("sum", nn::sum, false, false);
  unary("mean", nn::mean, false, false);
  unary("row_sum", nn::row_sum, false, false);
  c.push_back({"slice_cols", [](Rng& r) { return one(random_tensor({3, 6}, r)); },
               [](Graph&, std::span<const Var> x) { return nn::slice_cols(x[0], 1, 4); }});
  c.push_back({"concat_cols",
               [](Rng& r) {
                 return std::vector<Tensor>{random_tensor({3, 2}, r), random_tensor({3, 3}, r), random_tensor({3, 1}, r)};
               },
               [](Graph&, std::span<const Var> x) { return nn::concat_cols(x); }});
  c.push_back({"gather_cols", [](Rng& r) { return one(random_tensor({3, 5}, r)); },
               [](Graph&, std::span<const Var> x) {
                 const std::vector<std::size_t> idx{4, 0, 2, 2};
                 return nn::gather_cols(x[0], idx);
               }});
  c.push_back({"reshape", [](Rng& r) { return one(random_tensor({3, 4}, r)); },
               [](Graph&, std::span<const Var> x) { return nn::reshape(x[0], Shape{2, 6}); }});
  c.push_back({"conv1d",
               [](Rng& r) {
                 return std::vector<Tensor>{random_tensor({2, 2, 13}, r), random_tensor({3, 2, 4}, r),
                                            random_tensor({3}, r)};
               },
               [](Graph&, std::span<const Var> x) { return nn::conv1d(x[0], x[1], x[2], 3); }});
  c.push_back({"dropout", [](Rng& r) { return one(random_tensor({4, 5}, r)); },
               [](Graph&, std::span<const Var> x) {
                 Rng mask(42);  // same mask on every evaluation
                 return nn::dropout(x[0], 0.3, mask, /*training=*/true);
               }});
  c.push_back({"gru_sequence",
               [](Rng& r) {
                 return std::vector<Tensor>{random_tensor({2, 2, 6}, r), random_tensor({2, 9}, r, 0.5),
                                            random_tensor({3, 9}, r, 0.5), random_tensor({9}, r, 0.5),
                                            random_tensor({9}, r, 0.5)};
               },
               [](Graph&, std::span<const Var> x) { return nn::gru_sequence(x[0], x[1], x[2], x[3], x[4]); }});
  return c;
}

}  // namespace adexsbi::testing

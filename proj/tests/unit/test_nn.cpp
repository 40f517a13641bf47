#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "adexsbi/nn/checkpoint.hpp"
#include "adexsbi/nn/layers.hpp"
#include "adexsbi/nn/ops.hpp"
#include "adexsbi/nn/optimizer.hpp"
#include "gradcheck.hpp"

namespace nn = adexsbi::nn;
using adexsbi::Rng;
using adexsbi::testing::gradcheck;
using adexsbi::testing::OpCase;
using adexsbi::testing::random_tensor;
using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

Tensor vec(std::initializer_list<double> v) { return Tensor(nn::Shape{v.size()}, std::vector<double>(v)); }

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor(nn::Shape{2, 3}, std::vector<double>(5)), std::invalid_argument);
  const Tensor t(nn::Shape{2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(nn::shape_size(t.shape()), t.size());
}

TEST(Graph, SquareValueAndGradient) {
  Graph g;
  Var x = g.input(Tensor::scalar(3.0), true);
  Var y = nn::mul(x, x);
  EXPECT_DOUBLE_EQ(y.value().item(), 9.0);
  g.backward(y);
  EXPECT_DOUBLE_EQ(g.grad(x).item(), 6.0);
}

TEST(Graph, ReluValuesAndSubgradient) {
  Graph g;
  Var x = g.input(vec({-1.0, 0.0, 2.0}), true);
  Var y = nn::relu(x);
  EXPECT_EQ(y.value()[0], 0.0);
  EXPECT_EQ(y.value()[1], 0.0);
  EXPECT_EQ(y.value()[2], 2.0);
  g.backward(nn::sum(y));
  const Tensor gx = g.grad(x);
  EXPECT_EQ(gx[0], 0.0);
  EXPECT_EQ(gx[1], 0.0);  // subgradient 0 at the kink
  EXPECT_EQ(gx[2], 1.0);
}

TEST(Graph, NonScalarBackwardRejected) {
  Graph g;
  Var x = g.input(vec({1.0, 2.0}), true);
  EXPECT_THROW(g.backward(nn::square(x)), nn::ShapeError);
}

TEST(Graph, ShapeMismatchNamesNode) {
  Graph g;
  Var a = g.input(Tensor(nn::Shape{2, 3}));
  Var b = g.input(Tensor(nn::Shape{4, 2}));
  try {
    nn::matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const nn::ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("node 2"), std::string::npos) << e.what();
  }
}

TEST(Graph, InputsPrecedeUsers) {
  Graph g;
  Var x = g.input(Tensor(nn::Shape{2, 2}, 1.0), true);
  Var y = nn::tanh(nn::matmul(x, x));
  nn::sum(nn::add(y, x));
  for (std::size_t id = 0; id < g.size(); ++id) {
    for (std::size_t in : g.inputs(id)) EXPECT_LT(in, id);
  }
}

TEST(Graph, EvaluationOrderInvariance) {
  // Two independent branches recorded in either order give identical output.
  Rng rng(5);
  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng), c = random_tensor({3, 2}, rng);
  auto run = [&](bool branch_first) {
    Graph g;
    Var va = g.input(a), vb = g.input(b), vc = g.input(c);
    Var left, right;
    if (branch_first) {
      left = nn::matmul(va, vb);
      right = nn::exp(vc);
    } else {
      right = nn::exp(vc);
      left = nn::matmul(va, vb);
    }
    return nn::mul(nn::tanh(left), right).value();
  };
  const Tensor x = run(true), y = run(false);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
}

TEST(Graph, ForwardDeterministicWithoutDropout) {
  Rng init(3);
  nn::Mlp mlp("m", 4, 16, 2, 3, init);
  Rng rng(9);
  const Tensor x = random_tensor({5, 4}, rng);
  Graph g1, g2;
  Rng d1(1), d2(2);
  const Tensor y1 = nn::dropout(mlp.forward(g1, g1.input(x)), 0.5, d1, false).value();
  const Tensor y2 = nn::dropout(mlp.forward(g2, g2.input(x)), 0.5, d2, false).value();
  for (std::size_t i = 0; i < y1.size(); ++i) EXPECT_EQ(y1[i], y2[i]);
}

TEST(Ops, Conv1dOutputLength) {
  EXPECT_EQ(nn::conv1d_output_length(10000, 8, 4), 2499u);
  Graph g;
  Var x = g.input(Tensor(nn::Shape{1, 1, 10000}, 0.5));
  Var w = g.input(Tensor(nn::Shape{16, 1, 8}, 0.1));
  Var b = g.input(Tensor(nn::Shape{16}));
  const Var y = nn::conv1d(x, w, b, 4);
  EXPECT_EQ(y.shape(), (nn::Shape{1, 16, 2499}));
}

TEST(Ops, Conv1dMatchesNaiveLoop) {
  Rng rng(11);
  const std::size_t B = 2, C = 3, L = 17, F = 4, K = 5, S = 2;
  const Tensor x = random_tensor({B, C, L}, rng), w = random_tensor({F, C, K}, rng), b = random_tensor({F}, rng);
  Graph g;
  const Tensor y = nn::conv1d(g.input(x), g.input(w), g.input(b), S).value();
  const std::size_t out = (L - K) / S + 1;
  ASSERT_EQ(y.shape(), (nn::Shape{B, F, out}));
  for (std::size_t bi = 0; bi < B; ++bi)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t o = 0; o < out; ++o) {
        double acc = b[f];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t k = 0; k < K; ++k) acc += w[(f * C + c) * K + k] * x[(bi * C + c) * L + o * S + k];
        EXPECT_NEAR(y[(bi * F + f) * out + o], acc, 1e-12);
      }
}

TEST(Ops, GruMatchesScalarRecurrence) {
  // One unit, one channel: the gate equations evaluated by hand.
  const std::vector<double> xs{0.3, -0.7, 1.1};
  Tensor x(nn::Shape{1, 1, 3}, xs);
  Tensor wih(nn::Shape{1, 3}, {0.5, -0.4, 0.9});
  Tensor whh(nn::Shape{1, 3}, {0.2, 0.6, -0.3});
  Tensor bih(nn::Shape{3}, {0.1, 0.0, -0.2});
  Tensor bhh(nn::Shape{3}, {0.05, -0.1, 0.3});
  Graph g;
  const double got = nn::gru_sequence(g.input(x), g.input(wih), g.input(whh), g.input(bih), g.input(bhh)).value()[0];
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double h = 0.0;
  for (double xt : xs) {
    const double r = sig(xt * 0.5 + 0.1 + h * 0.2 + 0.05);
    const double u = sig(xt * -0.4 + 0.0 + h * 0.6 - 0.1);
    const double n = std::tanh(xt * 0.9 - 0.2 + r * (h * -0.3 + 0.3));
    h = (1.0 - u) * n + u * h;
  }
  EXPECT_NEAR(got, h, 1e-14);
}

TEST(Ops, DropoutIsInvertedAndEvalIdentity) {
  Graph g;
  const Tensor ones(nn::Shape{200, 50}, 1.0);
  Rng rng(4);
  const Tensor train = nn::dropout(g.input(ones), 0.5, rng, true).value();
  double mean = 0.0;
  for (double v : train.data()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    mean += v;
  }
  EXPECT_NEAR(mean / static_cast<double>(train.size()), 1.0, 0.03);
  const Tensor eval = nn::dropout(g.input(ones), 0.5, rng, false).value();
  for (double v : eval.data()) EXPECT_EQ(v, 1.0);
}

TEST(Ops, DropoutMaskDeterministicInSeed) {
  const Tensor ones(nn::Shape{10, 10}, 1.0);
  Graph g;
  Rng a(77), b(77);
  const Tensor x = nn::dropout(g.input(ones), 0.3, a, true).value();
  const Tensor y = nn::dropout(g.input(ones), 0.3, b, true).value();
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
}

class OpGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  const OpCase c = adexsbi::testing::op_catalog().at(GetParam());
  Rng rng(adexsbi::derive_seed(99, 0, GetParam()));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) worst = std::max(worst, gradcheck(c.build, c.draw(rng), rng).max_error);
  EXPECT_LT(worst, 1e-4) << c.name;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient,
                         ::testing::Range<std::size_t>(0, adexsbi::testing::op_catalog().size()),
                         [](const ::testing::TestParamInfo<std::size_t>& info) {
                           return adexsbi::testing::op_catalog().at(info.param).name;
                         });

TEST(Layers, ThreeLayerMlpParameterGradients) {
  Rng rng(21);
  nn::Mlp mlp("mlp", 4, 8, 2, 3, rng);
  const Tensor x = random_tensor({5, 4}, rng), target = random_tensor({5, 3}, rng);
  auto loss_of = [&](Graph& g) { return nn::mean(nn::square(nn::sub(mlp.forward(g, g.input(x)), g.input(target)))); };
  nn::zero_grads(mlp.parameters());
  {
    Graph g;
    g.backward(loss_of(g));
  }
  const double h = 1e-5;
  for (nn::Parameter* p : mlp.parameters()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      Graph gu;
      const double up = loss_of(gu).value().item();
      p->value[i] = orig - h;
      Graph gd;
      const double down = loss_of(gd).value().item();
      p->value[i] = orig;
      const double fd = (up - down) / (2.0 * h);
      EXPECT_LT(std::abs(p->grad[i] - fd) / (std::abs(p->grad[i]) + 1e-8), 1e-4) << p->name << "[" << i << "]";
    }
  }
}

TEST(Layers, GlorotBound) {
  Rng rng(1);
  Tensor t(nn::Shape{30, 20});
  nn::glorot_uniform(t, 30, 20, rng);
  const double bound = std::sqrt(6.0 / 50.0);
  for (double v : t.data()) EXPECT_LE(std::abs(v), bound);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  nn::Parameter p("w", vec({1.0, -2.0}));
  nn::Adam adam({&p}, {.learning_rate = 0.1});
  EXPECT_EQ(adam.step_count(), 0u);
  EXPECT_TRUE(adam.step());
  EXPECT_EQ(adam.step_count(), 1u);
  EXPECT_EQ(p.value[0], 1.0);
  EXPECT_EQ(p.value[1], -2.0);
  ASSERT_EQ(adam.first_moments().size(), 1u);
  EXPECT_EQ(adam.first_moments()[0].shape(), p.value.shape());
}

TEST(Adam, QuadraticBowlConverges) {
  nn::Parameter p("w", vec({0.6, -0.8}));
  nn::Adam adam({&p}, {.learning_rate = 0.05});
  for (int i = 0; i < 200; ++i) {
    p.zero_grad();
    Graph g;
    g.backward(nn::sum(nn::square(g.param(p))));
    adam.step();
  }
  EXPECT_LT(std::hypot(p.value[0], p.value[1]), 1e-2);
}

TEST(Adam, NonFiniteGradientSkipsStep) {
  nn::Parameter p("w", vec({1.0}));
  nn::Adam adam({&p});
  p.grad[0] = std::nan("");
  EXPECT_FALSE(adam.step());
  EXPECT_EQ(adam.step_count(), 0u);
  EXPECT_EQ(adam.skipped_steps(), 1u);
  EXPECT_EQ(p.value[0], 1.0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto dir = std::filesystem::temp_directory_path() / "adexsbi_test_ckpt";
  std::filesystem::create_directories(dir);
  Rng rng(8);
  nn::Parameter a("a", random_tensor({3, 4}, rng)), b("b.bias", random_tensor({7}, rng));
  nn::save_parameters(dir / "m.adxt", {&a, &b});
  nn::Parameter a2("a", Tensor(nn::Shape{3, 4})), b2("b.bias", Tensor(nn::Shape{7}));
  nn::load_parameters(dir / "m.adxt", {&a2, &b2});
  for (std::size_t i = 0; i < a.value.size(); ++i) EXPECT_EQ(a.value[i], a2.value[i]);
  for (std::size_t i = 0; i < b.value.size(); ++i) EXPECT_EQ(b.value[i], b2.value[i]);

  nn::Parameter wrong("a", Tensor(nn::Shape{4, 3}));
  EXPECT_THROW(nn::load_parameters(dir / "m.adxt", {&wrong}), nn::CheckpointError);

  std::ofstream(dir / "bad.adxt", std::ios::binary) << "NOPE";
  EXPECT_THROW(nn::load_tensors(dir / "bad.adxt"), nn::CheckpointError);
  std::filesystem::remove_all(dir);
}

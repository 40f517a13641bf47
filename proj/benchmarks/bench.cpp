#include <benchmark/benchmark.h>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/config/pipeline_config.hpp"
#include "adexsbi/dataset/prior.hpp"
#include "adexsbi/features/features.hpp"
#include "adexsbi/hw/calibration.hpp"
#include "adexsbi/nde/flow.hpp"
#include "adexsbi/nn/graph.hpp"
#include "adexsbi/nn/ops.hpp"
#include "adexsbi/sim/adex.hpp"

namespace {

using namespace adexsbi;

nn::Tensor random_tensor(nn::Shape shape, Rng& rng) {
  nn::Tensor t(std::move(shape));
  for (double& x : t.data()) x = standard_normal(rng);
  return t;
}

// One 1.6 ms trial per iteration, cycling through prior codes.
void BM_SimulateTrial(benchmark::State& state) {
  const auto cfg = config::default_config().simulation;
  const auto stim = cfg.stimulus();
  const auto codes = dataset::sample_prior(64, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto p = hw::decode(codes[i % codes.size()], cfg.table, cfg.fixed);
    try {
      benchmark::DoNotOptimize(sim::simulate(p, stim, cfg.dt, {cfg.noise_sigma, i}));
    } catch (const sim::SimulationError&) {
    }
    ++i;
  }
}
BENCHMARK(BM_SimulateTrial)->Unit(benchmark::kMicrosecond);

void BM_ExtractFeatures(benchmark::State& state) {
  const auto cfg = config::default_config().simulation;
  const auto stim = cfg.stimulus();
  auto p = hw::decode(hw::CodeVector({511, 511, 511, 511, 511, 511, 511}), cfg.table, cfg.fixed);
  sim::Trace tr;
  try {
    tr = sim::simulate(p, stim, cfg.dt, {cfg.noise_sigma, 1});
  } catch (const sim::SimulationError&) {
    state.SkipWithError("reference simulation failed");
    return;
  }
  for (auto _ : state) {
    const auto grid = features::interpolate_trace(tr);
    benchmark::DoNotOptimize(features::extract_features(grid, tr.spike_times, stim));
  }
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMicrosecond);

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
  for (auto _ : state) {
    nn::Graph g;
    benchmark::DoNotOptimize(nn::matmul(g.input(a), g.input(b)).value());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_FlowLogProb(benchmark::State& state) {
  nde::FlowSpec spec;
  spec.cond_dim = 21;
  spec.blocks = 10;
  spec.hidden = 128;
  nde::FlowModel flow(spec);
  Rng rng(3);
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto theta = random_tensor({batch, 7}, rng), cond = random_tensor({batch, 21}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(flow.log_prob(theta, cond));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FlowLogProb)->Arg(128)->Arg(1024);

void BM_FlowSample(benchmark::State& state) {
  nde::FlowSpec spec;
  spec.cond_dim = 21;
  nde::FlowModel flow(spec);
  Rng rng(4);
  const auto cond = random_tensor({1, 21}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(flow.sample(cond, 10000, rng));
}
BENCHMARK(BM_FlowSample)->Unit(benchmark::kMillisecond);

// Forward and backward through a GRU over the summary network's sequence length.
void BM_GruSequence(benchmark::State& state) {
  const std::size_t batch = 8, channels = 8, length = static_cast<std::size_t>(state.range(0)), hidden = 128;
  Rng rng(5);
  const auto x = random_tensor({batch, channels, length}, rng);
  const auto wih = random_tensor({channels, 3 * hidden}, rng), whh = random_tensor({hidden, 3 * hidden}, rng);
  const auto bih = random_tensor({3 * hidden}, rng), bhh = random_tensor({3 * hidden}, rng);
  for (auto _ : state) {
    nn::Graph g;
    auto w = g.input(whh, true);
    auto h = nn::gru_sequence(g.input(x), g.input(wih, true), w, g.input(bih, true), g.input(bhh, true));
    g.backward(nn::sum(h));
    benchmark::DoNotOptimize(g.grad(w));
  }
}
BENCHMARK(BM_GruSequence)->Arg(128)->Arg(1248)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

#include "adexsbi/nde/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "adexsbi/nn/layers.hpp"
#include "adexsbi/nn/ops.hpp"
#include "adexsbi/nn/optimizer.hpp"

namespace adexsbi::nde {
using nn::Graph;
using nn::Tensor;
using nn::Var;

Var StaticConditions::encode(Graph& g, std::span<const std::size_t> rows, bool) {
  return g.input(nn::gather_rows(rows_, rows));
}

Var SummaryConditions::encode(Graph& g, std::span<const std::size_t> rows, bool training) {
  std::vector<const features::RegularTrace*> batch;
  batch.reserve(rows.size());
  for (std::size_t r : rows) batch.push_back(traces_[r]);
  Var x = g.input(net_.prepare(batch));
  return training ? net_.forward(g, x, true) : static_cast<const SummaryNet&>(net_).forward(g, x);
}

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_int(rng, 0, static_cast<int>(i - 1))]);
}

}  // namespace

TrainingReport train_flow(FlowModel& flow, const Tensor& theta_raw, ConditionEncoder& encoder,
                          const FlowTrainOptions& options) {
  const std::size_t n = theta_raw.dim(0);
  if (theta_raw.rank() != 2 || theta_raw.dim(1) != flow.spec().dim) {
    throw std::invalid_argument("train_flow: theta must be [n," + std::to_string(flow.spec().dim) + "]");
  }
  if (encoder.size() != n) throw std::invalid_argument("train_flow: encoder and theta sizes differ");
  if (encoder.dim() != flow.spec().cond_dim) throw std::invalid_argument("train_flow: condition width mismatch");
  if (options.batch_size == 0) throw std::invalid_argument("train_flow: batch size must be positive");

  const auto t_start = std::chrono::steady_clock::now();
  Rng split_rng(derive_seed(options.seed, streams::kShuffle, 1));
  Rng shuffle_rng(derive_seed(options.seed, streams::kShuffle, 2));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, split_rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(options.validation_fraction * static_cast<double>(n)));
  if (options.validation_fraction > 0.0) n_val = std::max<std::size_t>(n_val, 1);
  if (n_val >= n) throw std::invalid_argument("train_flow: dataset too small for the validation split");
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());

  if (options.fit_theta_normalization) flow.theta_norm = Normalizer::fit(nn::gather_rows(theta_raw, train));
  const Tensor theta = flow.theta_norm.apply(theta_raw);

  std::vector<nn::Parameter*> params = flow.parameters();
  for (nn::Parameter* p : encoder.parameters()) params.push_back(p);
  nn::Adam adam(params, {.learning_rate = options.learning_rate});

  auto batch_nll = [&](std::span<const std::size_t> idx, bool training) {
    Graph g;
    Var th = g.input(nn::gather_rows(theta, idx));
    Var cond = encoder.encode(g, idx, training);
    Var lp = flow.log_prob(g, th, cond, training);
    Var loss = nn::neg(nn::mean(lp));
    if (training && std::isfinite(loss.value().item())) {
      nn::zero_grads(params);
      g.backward(loss);
      adam.step();
    }
    return loss.value().item();
  };
  auto evaluate = [&](const std::vector<std::size_t>& idx) {
    double total = 0.0;
    for (std::size_t s = 0; s < idx.size(); s += 512) {
      const std::size_t len = std::min<std::size_t>(512, idx.size() - s);
      total += batch_nll(std::span(idx).subspan(s, len), false) * static_cast<double>(len);
    }
    return total / static_cast<double>(idx.size());
  };

  TrainingReport report;
  report.seed = options.seed;
  report.train_size = train.size();
  report.validation_size = val.size();
  report.best_validation_nll = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best = nn::snapshot(params);

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    if (options.final_lr_fraction != 1.0 && options.epochs > 1) {
      const double progress = static_cast<double>(epoch - 1) / static_cast<double>(options.epochs - 1);
      const double f = options.final_lr_fraction + (1.0 - options.final_lr_fraction) * 0.5 *
                                                       (1.0 + std::cos(std::numbers::pi * progress));
      adam.set_learning_rate(options.learning_rate * f);
    }
    const auto t0 = std::chrono::steady_clock::now();
    shuffle(train, shuffle_rng);
    double sum = 0.0;
    std::size_t count = 0;
    bool diverged = false;
    for (std::size_t s = 0; s < train.size(); s += options.batch_size) {
      const std::size_t len = std::min(options.batch_size, train.size() - s);
      const double loss = batch_nll(std::span(train).subspan(s, len), true);
      if (!std::isfinite(loss)) {
        diverged = true;
        break;
      }
      sum += loss * static_cast<double>(len);
      count += len;
    }
    if (diverged) {
      report.halted = true;
      report.halt_reason = "non-finite training loss in epoch " + std::to_string(epoch);
      spdlog::error("train_flow: {}; keeping the last finite checkpoint", report.halt_reason);
      break;
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_nll = sum / static_cast<double>(count);
    st.validation_nll = val.empty() ? st.train_nll : evaluate(val);
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(st);
    spdlog::info("flow epoch {}/{}: train nll {:.4f}, validation nll {:.4f} ({:.1f}s)", epoch, options.epochs,
                 st.train_nll, st.validation_nll, st.seconds);
    if (!std::isfinite(st.validation_nll)) {
      report.halted = true;
      report.halt_reason = "non-finite validation loss in epoch " + std::to_string(epoch);
      spdlog::error("train_flow: {}; keeping the last finite checkpoint", report.halt_reason);
      break;
    }
    if (st.validation_nll < report.best_validation_nll) {
      report.best_validation_nll = st.validation_nll;
      report.best_epoch = epoch;
      best = nn::snapshot(params);
    }
  }
  nn::restore(params, best);
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace adexsbi::nde

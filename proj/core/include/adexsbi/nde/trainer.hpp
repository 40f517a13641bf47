#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adexsbi/nde/flow.hpp"
#include "adexsbi/nde/summary_net.hpp"
#include "adexsbi/nn/graph.hpp"

namespace adexsbi::nde {

/// Produces the flow's condition rows for a batch of training examples.
class ConditionEncoder {
 public:
  virtual ~ConditionEncoder() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t dim() const = 0;
  virtual nn::Var encode(nn::Graph& g, std::span<const std::size_t> rows, bool training) = 0;
  /// Trainable parameters optimised jointly with the flow.
  virtual std::vector<nn::Parameter*> parameters() { return {}; }
};

/// Fixed condition matrix [n, c] (e.g. standardised handcrafted features).
class StaticConditions : public ConditionEncoder {
 public:
  explicit StaticConditions(nn::Tensor rows) : rows_(std::move(rows)) {}
  std::size_t size() const override { return rows_.dim(0); }
  std::size_t dim() const override { return rows_.dim(1); }
  nn::Var encode(nn::Graph& g, std::span<const std::size_t> rows, bool training) override;

 private:
  nn::Tensor rows_;
};

/// Traces passed through a summary network trained with the flow.
class SummaryConditions : public ConditionEncoder {
 public:
  SummaryConditions(SummaryNet& net, std::vector<const features::RegularTrace*> traces)
      : net_(net), traces_(std::move(traces)) {}
  std::size_t size() const override { return traces_.size(); }
  std::size_t dim() const override { return net_.spec().output; }
  nn::Var encode(nn::Graph& g, std::span<const std::size_t> rows, bool training) override;
  std::vector<nn::Parameter*> parameters() override { return net_.parameters(); }

 private:
  SummaryNet& net_;
  std::vector<const features::RegularTrace*> traces_;
};

struct FlowTrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double validation_fraction = 0.05;
  /// Cosine decay of the learning rate to this fraction by the last epoch;
  /// 1 keeps it constant.
  double final_lr_fraction = 1.0;
  std::uint64_t seed = 0;
  /// Fit theta_norm on the training split before training.
  bool fit_theta_normalization = true;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  double validation_nll = 0.0;
  double seconds = 0.0;
};

struct TrainingReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_validation_nll = 0.0;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  /// Set when training stopped on a non-finite loss.
  bool halted = false;
  std::string halt_reason;
};

/// Minimises the mean negative log-likelihood of theta_raw under the flow,
/// jointly with the encoder's parameters. The weights with the lowest
/// validation NLL are restored on return.
TrainingReport train_flow(FlowModel& flow, const nn::Tensor& theta_raw, ConditionEncoder& encoder,
                          const FlowTrainOptions& options);

}  // namespace adexsbi::nde

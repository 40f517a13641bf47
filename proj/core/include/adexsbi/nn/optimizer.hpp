#pragma once

#include <cstdint>
#include <vector>

#include "adexsbi/nn/graph.hpp"

namespace adexsbi::nn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

/// Adaptive-moment optimizer over a fixed list of parameters.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options = {});

  /// Applies one update from the accumulated Parameter::grad values. If any
  /// gradient is non-finite the update is skipped, a warning is logged and
  /// false is returned; the step counter only advances on applied updates.
  bool step();

  std::uint64_t step_count() const { return step_; }
  std::uint64_t skipped_steps() const { return skipped_; }
  const AdamOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  std::vector<Parameter*> params_;
  AdamOptions options_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t step_ = 0;
  std::uint64_t skipped_ = 0;
};

}  // namespace adexsbi::nn

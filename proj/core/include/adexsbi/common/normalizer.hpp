#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adexsbi/nn/tensor.hpp"

namespace adexsbi {

/// Per-column affine standardisation x -> (x - mean) / scale.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> scale;
  /// Columns whose fitted spread was zero; they are centred but not scaled.
  std::vector<std::size_t> degenerate;

  static Normalizer identity(std::size_t dim);
  /// Column means and population standard deviations of a [n, d] matrix.
  static Normalizer fit(const nn::Tensor& rows);

  std::size_t dim() const { return mean.size(); }
  void apply(std::span<double> row) const;
  void invert(std::span<double> row) const;
  nn::Tensor apply(const nn::Tensor& rows) const;
  nn::Tensor invert(const nn::Tensor& rows) const;
  /// Sum of log(scale): the log-Jacobian of the inverse map.
  double log_scale_sum() const;
};

}  // namespace adexsbi

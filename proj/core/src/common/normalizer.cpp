#include "adexsbi/common/normalizer.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <stdexcept>

namespace adexsbi {

Normalizer Normalizer::identity(std::size_t dim) {
  Normalizer n;
  n.mean.assign(dim, 0.0);
  n.scale.assign(dim, 1.0);
  return n;
}

Normalizer Normalizer::fit(const nn::Tensor& rows) {
  if (rows.rank() != 2 || rows.dim(0) == 0) throw std::invalid_argument("normalizer: need a non-empty [n,d] matrix");
  const std::size_t n = rows.dim(0), d = rows.dim(1);
  Normalizer out = identity(d);
  for (std::size_t j = 0; j < d; ++j) {
    // Shifted by the first entry so constant columns centre to exactly zero.
    const double x0 = rows.at(0, j);
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += rows.at(i, j) - x0;
    mu = x0 + mu / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = rows.at(i, j) - mu;
      var += dv * dv;
    }
    var /= static_cast<double>(n);
    out.mean[j] = mu;
    const double sd = std::sqrt(var);
    // Spreads at rounding level of the mean count as constant columns.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mu)))) {
      out.scale[j] = 1.0;
      out.degenerate.push_back(j);
      spdlog::warn("normalizer: column {} has zero spread; centring only", j);
    } else {
      out.scale[j] = sd;
    }
  }
  return out;
}

void Normalizer::apply(std::span<double> row) const {
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / scale[j];
}

void Normalizer::invert(std::span<double> row) const {
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = row[j] * scale[j] + mean[j];
}

nn::Tensor Normalizer::apply(const nn::Tensor& rows) const {
  nn::Tensor out = rows;
  for (std::size_t i = 0; i < out.dim(0); ++i) apply(out.row(i));
  return out;
}

nn::Tensor Normalizer::invert(const nn::Tensor& rows) const {
  nn::Tensor out = rows;
  for (std::size_t i = 0; i < out.dim(0); ++i) invert(out.row(i));
  return out;
}

double Normalizer::log_scale_sum() const {
  double s = 0.0;
  for (double v : scale) s += std::log(v);
  return s;
}

}  // namespace adexsbi

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "adexsbi/features/features.hpp"
#include "adexsbi/nn/graph.hpp"

namespace adexsbi::nde {

struct SummaryNetSpec {
  std::size_t input_length = features::kGridPoints;
  std::size_t conv1_kernel = 8, conv1_stride = 4, conv1_filters = 16;
  std::size_t conv2_kernel = 4, conv2_stride = 2, conv2_filters = 8;
  std::size_t hidden = 128;
  std::size_t output = 14;
  std::uint64_t seed = 0;

  std::size_t conv1_length() const;
  std::size_t conv2_length() const;
};

/// conv -> ReLU -> conv -> ReLU -> GRU (final state) -> linear. Traces are
/// shifted and scaled by a single stored mean/scale before the first conv.
class SummaryNet {
 public:
  SummaryNet() = default;
  explicit SummaryNet(const SummaryNetSpec& spec);

  /// x [B,1,L] of normalised traces -> [B,output].
  nn::Var forward(nn::Graph& g, nn::Var x, bool trainable);
  nn::Var forward(nn::Graph& g, nn::Var x) const;

  /// Batch input tensor [B,1,L] with trace normalisation applied.
  nn::Tensor prepare(std::span<const features::RegularTrace* const> traces) const;

  /// Throws std::invalid_argument unless the trace has input_length samples.
  std::vector<double> summarize(const features::RegularTrace& trace) const;

  /// Fits the scalar trace normalisation.
  void fit_normalization(std::span<const features::RegularTrace* const> traces);

  std::vector<nn::Parameter*> parameters();
  const SummaryNetSpec& spec() const { return spec_; }

  void save(const std::filesystem::path& dir) const;
  static SummaryNet load(const std::filesystem::path& dir);

  double trace_mean = 0.0;
  double trace_scale = 1.0;

 private:
  template <typename Bind>
  nn::Var run(nn::Graph& g, nn::Var x, Bind bind) const;

  SummaryNetSpec spec_;
  nn::Parameter conv1_w_, conv1_b_, conv2_w_, conv2_b_;
  nn::Parameter gru_wih_, gru_whh_, gru_bih_, gru_bhh_;
  nn::Parameter out_w_, out_b_;
};

}  // namespace adexsbi::nde

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "adexsbi/common/normalizer.hpp"
#include "adexsbi/common/rng.hpp"
#include "adexsbi/nn/layers.hpp"

namespace adexsbi::nde {

inline constexpr double kDefaultScaleClamp = 1.9;

struct FlowSpec {
  std::size_t dim = 7;
  std::size_t cond_dim = 0;
  std::size_t blocks = 10;
  std::size_t hidden = 128;
  std::size_t hidden_layers = 2;
  double clamp = kDefaultScaleClamp;
  std::uint64_t seed = 0;
};

class FlowError : public std::runtime_error {
 public:
  FlowError(const std::string& what, std::size_t block) : std::runtime_error(what), block_(block) {}
  std::size_t block() const { return block_; }

 private:
  std::size_t block_;
};

/// Affine coupling block on a fixed permutation of the coordinates. The
/// first `n_pass` permuted coordinates condition the transform of the rest:
///   y_trans = x_trans * exp(s) + t,   s = c * tanh(s_raw / c)
struct CouplingBlock {
  std::vector<std::size_t> perm;
  std::vector<std::size_t> inverse_perm;
  std::size_t n_pass = 0;
  nn::Mlp conditioner;

  std::size_t n_trans() const { return perm.size() - n_pass; }
};

/// Conditional coupling flow over a `dim`-dimensional parameter, with a
/// standard-normal base. Graph-level methods work in normalised coordinates;
/// tensor-level methods take raw parameters and apply `theta_norm`.
class FlowModel {
 public:
  FlowModel() = default;
  explicit FlowModel(const FlowSpec& spec);

  struct GraphResult {
    nn::Var z;
    nn::Var log_det;  // [n,1]
  };

  /// Normalised theta [n,dim] and condition [n,cond_dim]. With `trainable`
  /// the conditioner weights are bound as parameters.
  GraphResult forward(nn::Graph& g, nn::Var theta, nn::Var cond, bool trainable);
  GraphResult forward(nn::Graph& g, nn::Var theta, nn::Var cond) const;
  /// Per-row log density [n,1] of normalised theta, corrected to raw space.
  nn::Var log_prob(nn::Graph& g, nn::Var theta, nn::Var cond, bool trainable);

  struct ForwardResult {
    nn::Tensor z;
    std::vector<double> log_det;
  };
  ForwardResult flow_forward(const nn::Tensor& theta_raw, const nn::Tensor& cond) const;

  struct InverseResult {
    nn::Tensor theta;  // raw space
    /// Forward log-determinant at the returned theta (normalised space).
    std::vector<double> log_det;
  };
  /// Exact inverse of flow_forward. Throws FlowError naming the block when
  /// an intermediate value is non-finite.
  InverseResult flow_inverse(const nn::Tensor& z, const nn::Tensor& cond) const;

  /// log q(theta | cond) with respect to raw parameter space.
  std::vector<double> log_prob(const nn::Tensor& theta_raw, const nn::Tensor& cond) const;

  struct Samples {
    nn::Tensor theta;  // raw space [n,dim]
    std::vector<double> log_prob;
  };
  /// `n` draws for a single condition row [1,cond_dim] or [cond_dim].
  Samples sample(const nn::Tensor& cond, std::size_t n, Rng& rng) const;

  std::vector<nn::Parameter*> parameters();
  const FlowSpec& spec() const { return spec_; }
  const std::vector<CouplingBlock>& blocks() const { return blocks_; }

  /// Writes <stem>.adxt and <stem>.json.
  void save(const std::filesystem::path& dir, const std::string& stem = "flow") const;
  static FlowModel load(const std::filesystem::path& dir, const std::string& stem = "flow");

  Normalizer theta_norm;
  Normalizer cond_norm;

 private:
  void check_roles() const;
  void check_inputs(const nn::Tensor& theta, const nn::Tensor& cond, const char* who) const;
  nn::Tensor prepare_cond(const nn::Tensor& cond, std::size_t rows, const char* who) const;

  FlowSpec spec_;
  std::vector<CouplingBlock> blocks_;
};

/// Standard-normal log density summed over each row.
double standard_normal_log_density(std::span<const double> z);

}  // namespace adexsbi::nde

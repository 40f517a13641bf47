#include "adexsbi/nde/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "adexsbi/nn/checkpoint.hpp"
#include "adexsbi/nn/ops.hpp"
#include "common/json_io.hpp"

namespace adexsbi::nde {
namespace fs = std::filesystem;
using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[uniform_int(rng, 0, static_cast<int>(i - 1))]);
  return p;
}

std::vector<std::size_t> invert_permutation(const std::vector<std::size_t>& p) {
  std::vector<std::size_t> inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[p[i]] = i;
  return inv;
}

bool roles_covered(const std::vector<CouplingBlock>& blocks, std::size_t dim) {
  std::vector<bool> passed(dim, false), transformed(dim, false);
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.perm.size(); ++i) (i < b.n_pass ? passed : transformed)[b.perm[i]] = true;
  }
  for (std::size_t d = 0; d < dim; ++d) {
    if (!passed[d] || !transformed[d]) return false;
  }
  return true;
}

struct Coupling {
  Var pass, trans, s, t;
};

template <typename Net>
Coupling split_and_condition(Graph& g, Var x, Var cond, const CouplingBlock& b, double clamp, bool has_cond,
                             Net&& net) {
  const std::size_t d = b.perm.size(), np = b.n_pass, nt = b.n_trans();
  Var xp = nn::gather_cols(x, b.perm);
  Coupling c;
  c.pass = nn::slice_cols(xp, 0, np);
  c.trans = nn::slice_cols(xp, np, d);
  Var in = c.pass;
  if (has_cond) {
    const Var parts[] = {c.pass, cond};
    in = nn::concat_cols(parts);
  }
  Var h = net(g, in);
  c.s = nn::scale(nn::tanh(nn::scale(nn::slice_cols(h, 0, nt), 1.0 / clamp)), clamp);
  c.t = nn::slice_cols(h, nt, 2 * nt);
  return c;
}

Var merge(Var pass, Var trans, const CouplingBlock& b) {
  const Var parts[] = {pass, trans};
  return nn::gather_cols(nn::concat_cols(parts), b.inverse_perm);
}

template <typename Bind>
FlowModel::GraphResult run_forward(Graph& g, Var theta, Var cond, const std::vector<CouplingBlock>& blocks,
                                   double clamp, bool has_cond, Bind bind) {
  Var x = theta;
  Var log_det;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const CouplingBlock& b = blocks[k];
    Coupling c = split_and_condition(g, x, cond, b, clamp, has_cond, [&](Graph& gr, Var in) { return bind(gr, k, in); });
    Var y_trans = nn::add(nn::mul(c.trans, nn::exp(c.s)), c.t);
    x = merge(c.pass, y_trans, b);
    Var ld = nn::row_sum(c.s);
    log_det = log_det.valid() ? nn::add(log_det, ld) : ld;
  }
  if (!log_det.valid()) log_det = g.input(Tensor(nn::Shape{theta.shape()[0], 1}));
  return {x, log_det};
}

Tensor to_matrix(const Tensor& t, std::size_t cols) {
  if (t.rank() == 1 && t.size() == cols) return t.reshaped(nn::Shape{1, cols});
  return t;
}

bool all_finite(const Tensor& t) { return t.all_finite(); }

}  // namespace

double standard_normal_log_density(std::span<const double> z) {
  double sq = 0.0;
  for (double v : z) sq += v * v;
  return -0.5 * sq - 0.5 * static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi);
}

FlowModel::FlowModel(const FlowSpec& spec) : spec_(spec) {
  if (spec.dim < 2) throw std::invalid_argument("FlowModel: dimension must be at least 2");
  if (spec.blocks < 2) throw std::invalid_argument("FlowModel: need at least two coupling blocks");
  if (!(spec.clamp > 0.0)) throw std::invalid_argument("FlowModel: clamp must be positive");
  const std::size_t d = spec.dim;
  // Redraw the permutation schedule until every coordinate is both
  // conditioned on and transformed somewhere in the stack.
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt == 1000) throw std::logic_error("FlowModel: could not draw a covering permutation schedule");
    Rng rng(derive_seed(spec.seed, streams::kMasks, attempt));
    blocks_.clear();
    for (std::size_t k = 0; k < spec.blocks; ++k) {
      CouplingBlock b;
      b.perm = random_permutation(d, rng);
      b.inverse_perm = invert_permutation(b.perm);
      b.n_pass = (k % 2 == 0) ? d / 2 : d - d / 2;
      blocks_.push_back(std::move(b));
    }
    if (roles_covered(blocks_, d)) break;
  }
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    Rng rng(derive_seed(spec.seed, streams::kInit, k));
    CouplingBlock& b = blocks_[k];
    b.conditioner = nn::Mlp("block" + std::to_string(k), b.n_pass + spec.cond_dim, spec.hidden, spec.hidden_layers,
                            2 * b.n_trans(), rng);
    // Zero output: s = t = 0, so a fresh flow is the identity map.
    b.conditioner.zero_output_layer();
  }
  check_roles();
  theta_norm = Normalizer::identity(d);
  cond_norm = Normalizer::identity(spec.cond_dim);
}

void FlowModel::check_roles() const {
  if (!roles_covered(blocks_, spec_.dim)) {
    throw std::logic_error("FlowModel: some dimension is never both passed through and transformed");
  }
}

std::vector<nn::Parameter*> FlowModel::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& b : blocks_) {
    auto p = b.conditioner.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

FlowModel::GraphResult FlowModel::forward(Graph& g, Var theta, Var cond, bool trainable) {
  if (!trainable) return static_cast<const FlowModel&>(*this).forward(g, theta, cond);
  return run_forward(g, theta, cond, blocks_, spec_.clamp, spec_.cond_dim > 0,
                     [&](Graph& gr, std::size_t k, Var in) { return blocks_[k].conditioner.forward(gr, in); });
}

FlowModel::GraphResult FlowModel::forward(Graph& g, Var theta, Var cond) const {
  return run_forward(g, theta, cond, blocks_, spec_.clamp, spec_.cond_dim > 0,
                     [&](Graph& gr, std::size_t k, Var in) { return blocks_[k].conditioner.forward_frozen(gr, in); });
}

Var FlowModel::log_prob(Graph& g, Var theta, Var cond, bool trainable) {
  GraphResult r = forward(g, theta, cond, trainable);
  const double constant =
      -0.5 * static_cast<double>(spec_.dim) * std::log(2.0 * std::numbers::pi) - theta_norm.log_scale_sum();
  Var base = nn::scale(nn::row_sum(nn::square(r.z)), -0.5);
  return nn::add_scalar(nn::add(base, r.log_det), constant);
}

void FlowModel::check_inputs(const Tensor& theta, const Tensor& cond, const char* who) const {
  if (theta.rank() != 2 || theta.dim(1) != spec_.dim) {
    throw std::invalid_argument(std::string(who) + ": theta must be [n," + std::to_string(spec_.dim) + "], got " +
                                nn::shape_string(theta.shape()));
  }
  (void)cond;
}

Tensor FlowModel::prepare_cond(const Tensor& cond, std::size_t rows, const char* who) const {
  const std::size_t c = spec_.cond_dim;
  Tensor m = to_matrix(cond, c);
  if (c == 0) return Tensor(nn::Shape{rows, 0});
  if (m.rank() != 2 || m.dim(1) != c) {
    throw std::invalid_argument(std::string(who) + ": condition must have " + std::to_string(c) + " columns, got " +
                                nn::shape_string(cond.shape()));
  }
  if (m.dim(0) == 1 && rows != 1) {
    Tensor rep(nn::Shape{rows, c});
    for (std::size_t i = 0; i < rows; ++i) std::copy(m.data().begin(), m.data().end(), rep.row(i).begin());
    m = std::move(rep);
  } else if (m.dim(0) != rows) {
    throw std::invalid_argument(std::string(who) + ": condition rows do not match theta rows");
  }
  return cond_norm.apply(m);
}

FlowModel::ForwardResult FlowModel::flow_forward(const Tensor& theta_raw, const Tensor& cond) const {
  check_inputs(theta_raw, cond, "flow_forward");
  const std::size_t n = theta_raw.dim(0);
  Graph g;
  Var th = g.input(theta_norm.apply(theta_raw));
  Var cv = g.input(prepare_cond(cond, n, "flow_forward"));
  GraphResult r = forward(g, th, cv);
  const auto& ld = r.log_det.value().data();
  return {r.z.value(), std::vector<double>(ld.begin(), ld.end())};
}

FlowModel::InverseResult FlowModel::flow_inverse(const Tensor& z, const Tensor& cond) const {
  check_inputs(z, cond, "flow_inverse");
  const std::size_t n = z.dim(0);
  Graph g;
  Var y = g.input(z);
  Var cv = g.input(prepare_cond(cond, n, "flow_inverse"));
  std::vector<double> log_det(n, 0.0);
  for (std::size_t k = blocks_.size(); k-- > 0;) {
    const CouplingBlock& b = blocks_[k];
    Coupling c = split_and_condition(g, y, cv, b, spec_.clamp, spec_.cond_dim > 0,
                                     [&](Graph& gr, Var in) { return b.conditioner.forward_frozen(gr, in); });
    // c.trans holds the transformed half of the block output here.
    Var x_trans = nn::mul(nn::sub(c.trans, c.t), nn::exp(nn::neg(c.s)));
    y = merge(c.pass, x_trans, b);
    if (!all_finite(y.value())) {
      throw FlowError("flow_inverse: non-finite value after block " + std::to_string(k), k);
    }
    const Tensor& s = c.s.value();
    for (std::size_t i = 0; i < n; ++i) {
      for (double v : s.row(i)) log_det[i] += v;
    }
  }
  return {theta_norm.invert(y.value()), std::move(log_det)};
}

std::vector<double> FlowModel::log_prob(const Tensor& theta_raw, const Tensor& cond) const {
  const ForwardResult r = flow_forward(theta_raw, cond);
  const double correction = theta_norm.log_scale_sum();
  std::vector<double> out(r.log_det.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = standard_normal_log_density(r.z.row(i)) + r.log_det[i] - correction;
  }
  return out;
}

FlowModel::Samples FlowModel::sample(const Tensor& cond, std::size_t n, Rng& rng) const {
  Tensor z(nn::Shape{n, spec_.dim});
  for (double& v : z.data()) v = standard_normal(rng);
  Tensor c = spec_.cond_dim == 0 ? Tensor(nn::Shape{1, 0}) : to_matrix(cond, spec_.cond_dim);
  if (spec_.cond_dim > 0 && (c.rank() != 2 || c.dim(0) != 1)) {
    throw std::invalid_argument("FlowModel::sample: expected a single condition row");
  }
  InverseResult inv = flow_inverse(z, c);
  const double correction = theta_norm.log_scale_sum();
  Samples out;
  out.log_prob.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.log_prob[i] = standard_normal_log_density(z.row(i)) + inv.log_det[i] - correction;
  }
  out.theta = std::move(inv.theta);
  return out;
}

void FlowModel::save(const fs::path& dir, const std::string& stem) const {
  fs::create_directories(dir);
  auto params = const_cast<FlowModel*>(this)->parameters();
  nn::save_parameters(dir / (stem + ".adxt"), params);
  json blocks = json::array();
  for (const auto& b : blocks_) blocks.push_back({{"perm", b.perm}, {"n_pass", b.n_pass}});
  json j = {{"dim", spec_.dim},
            {"cond_dim", spec_.cond_dim},
            {"blocks", spec_.blocks},
            {"hidden", spec_.hidden},
            {"hidden_layers", spec_.hidden_layers},
            {"clamp", spec_.clamp},
            {"seed", spec_.seed},
            {"coupling", blocks},
            {"theta_normalization", normalizer_to_json(theta_norm)},
            {"condition_normalization", normalizer_to_json(cond_norm)}};
  write_json_file(dir / (stem + ".json"), j);
}

FlowModel FlowModel::load(const fs::path& dir, const std::string& stem) {
  const json j = read_json_file(dir / (stem + ".json"));
  FlowSpec spec;
  spec.dim = j.at("dim").get<std::size_t>();
  spec.cond_dim = j.at("cond_dim").get<std::size_t>();
  spec.blocks = j.at("blocks").get<std::size_t>();
  spec.hidden = j.at("hidden").get<std::size_t>();
  spec.hidden_layers = j.at("hidden_layers").get<std::size_t>();
  spec.clamp = j.at("clamp").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  FlowModel m(spec);
  const json& cj = j.at("coupling");
  if (cj.size() != m.blocks_.size()) throw nn::CheckpointError("flow: block count mismatch in sidecar");
  for (std::size_t k = 0; k < m.blocks_.size(); ++k) {
    auto perm = cj[k].at("perm").get<std::vector<std::size_t>>();
    if (perm != m.blocks_[k].perm || cj[k].at("n_pass").get<std::size_t>() != m.blocks_[k].n_pass) {
      throw nn::CheckpointError("flow: stored permutation differs from the one derived from the seed");
    }
  }
  nn::load_parameters(dir / (stem + ".adxt"), m.parameters());
  m.theta_norm = normalizer_from_json(j.at("theta_normalization"));
  m.cond_norm = normalizer_from_json(j.at("condition_normalization"));
  return m;
}

}  // namespace adexsbi::nde

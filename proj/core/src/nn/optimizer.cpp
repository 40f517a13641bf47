#include "adexsbi/nn/optimizer.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace adexsbi::nn {

Adam::Adam(std::vector<Parameter*> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

bool Adam::step() {
  for (const Parameter* p : params_) {
    if (p->grad.shape() != p->value.shape()) continue;
    if (!p->grad.all_finite()) {
      ++skipped_;
      spdlog::warn("adam: non-finite gradient in '{}', skipping step {}", p->name, step_ + 1);
      return false;
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(options_.beta1, t);
  const double bc2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    const bool has_grad = p.grad.shape() == p.value.shape();
    auto w = p.value.data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = (has_grad ? p.grad[i] : 0.0) + options_.weight_decay * w[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= options_.learning_rate * mhat / (std::sqrt(vhat) + options_.epsilon);
    }
  }
  return true;
}

}  // namespace adexsbi::nn

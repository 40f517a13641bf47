#include "adexsbi/nn/graph.hpp"

#include <algorithm>

namespace adexsbi::nn {

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) {
    grad = Tensor(value.shape());
  } else {
    grad.fill(0.0);
  }
}

const Tensor& Var::value() const { return graph_->value(id_); }

Var Graph::input(Tensor value, bool requires_grad) {
  Node n;
  n.op = "input";
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(Parameter& p) {
  Node n;
  n.op = "param";
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(const char* op, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [&](std::size_t i) { return nodes_[i].requires_grad; });
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Tensor& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Tensor Graph::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.grad.empty() ? Tensor(n.value.shape()) : n.grad;
}

void Graph::backward(Var output) {
  if (output.graph() != this) throw std::logic_error("backward: variable belongs to another graph");
  if (value(output.id()).size() != 1) {
    throw ShapeError("backward: output node " + std::to_string(output.id()) + " (" + op(output.id()) +
                     ") is not scalar, shape " + shape_string(value(output.id()).shape()));
  }
  grad_buffer(output.id()).fill(1.0);
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
      auto dst = p.grad.data();
      auto src = n.grad.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
}

}  // namespace adexsbi::nn

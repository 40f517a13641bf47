#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adexsbi/nn/tensor.hpp"

namespace adexsbi::nn {

/// Shape or arity error raised while recording a node. The message names the
/// op and the node index it would have received.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Trainable tensor that outlives individual graphs. Graphs accumulate into
/// `grad` during backward.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad();
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while its graph lives.
class Var {
 public:
  Var() = default;

  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run computation graph. Nodes are appended as ops execute, so the
/// node sequence is itself a topological order: inputs always precede users.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var input(Tensor value, bool requires_grad = false);
  Var param(Parameter& p);

  /// Appends a node. `backward` receives the node index and must add its
  /// contribution to the grad buffers of inputs that require grad.
  Var record(const char* op, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  /// Reverse-mode sweep from a one-element output. Parameter leaves add their
  /// gradient into Parameter::grad.
  void backward(Var output);

  std::size_t size() const { return nodes_.size(); }
  std::size_t next_id() const { return nodes_.size(); }
  const char* op(std::size_t id) const { return nodes_[id].op; }
  std::span<const std::size_t> inputs(std::size_t id) const { return nodes_[id].inputs; }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }
  /// Gradient of a node after backward(); zeros when the node was not reached.
  Tensor grad(Var v) const;
  /// Mutable gradient buffer, zero-initialised on first access.
  Tensor& grad_buffer(std::size_t id);
  const Tensor& grad_of(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    const char* op = "";
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

}  // namespace adexsbi::nn

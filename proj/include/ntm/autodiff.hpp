#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "ntm/tensor.hpp"

// Define-by-run reverse-mode differentiation over rank-2 tensors.
//
// A Graph records every operation as an immutable node. Nodes are appended
// after their inputs, so node order is a topological order and backward is a
// single reverse sweep. Parameters are leaves; constants are leaves that do
// not receive gradients. Build a fresh graph per batch.
namespace ntm::ad {

class Graph;

class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// View handed to a node's backward rule.
class BackwardContext {
 public:
  const Tensor& grad() const { return *grad_; }
  const Tensor& output() const { return *output_; }
  const Tensor& input(std::size_t i) const { return *inputs_[i]; }
  bool needs_grad(std::size_t i) const { return input_grads_[i] != nullptr; }
  // Gradient slot of input i, zero-filled on first access.
  Tensor& input_grad(std::size_t i);

 private:
  friend class Graph;
  const Tensor* grad_ = nullptr;
  const Tensor* output_ = nullptr;
  std::vector<const Tensor*> inputs_;
  std::vector<Tensor*> input_grads_;
};

using BackwardFn = std::function<void(BackwardContext&)>;

// Gradients of a scalar loss with respect to every parameter leaf of a graph,
// in parameter registration order.
class Gradients {
 public:
  const Tensor& operator[](Var leaf) const;
  const Tensor& at(std::size_t ordinal) const { return grads_.at(ordinal); }
  std::size_t size() const noexcept { return grads_.size(); }
  std::span<const Tensor> all() const noexcept { return grads_; }

 private:
  friend class Graph;
  std::vector<Tensor> grads_;
  std::vector<std::size_t> node_ids_;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor value);

  const Tensor& value(Var v) const { return nodes_.at(v.id()).value; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t parameter_count() const noexcept { return parameters_.size(); }

  // Records an operation node. The backward rule is dropped when no input
  // requires a gradient.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  // Throws ContractError unless loss is [1x1]. Does not mutate the graph, so
  // repeated calls return identical gradients.
  Gradients backward(Var loss) const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
  std::vector<std::size_t> parameters_;
};

enum class Activation { sigmoid, relu, identity, softmax_rows, log, exp };
enum class Reduction { sum, mean };
// Axis names the dimension that is reduced away: rows -> [1 x cols],
// cols -> [rows x 1].
enum class Axis { all, rows, cols };

inline constexpr double kNormEpsilon = 1e-12;

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
// a [m x n] plus row [1 x n] broadcast over every row.
Var add_row(Var a, Var row);
Var activation(Var a, Activation kind);
// max(a, floor) elementwise; clamped entries pass no gradient.
Var clamp_min(Var a, double floor);
// Rows (columns) with Euclidean norm below epsilon pass through unchanged and
// contribute no gradient.
Var normalize_rows(Var a, double epsilon = kNormEpsilon);
Var normalize_cols(Var a, double epsilon = kNormEpsilon);
Var reduce(Var a, Reduction op, Axis axis);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }

// Builds a scalar loss from parameter leaves registered in the given order.
using LossBuilder = std::function<Var(Graph&, std::span<const Var>)>;

// Largest |analytic - central difference| / max(1, |analytic|, |numeric|)
// over every entry of every parameter.
double grad_check(const LossBuilder& builder, std::vector<Tensor> params, double step);

}  // namespace ntm::ad

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rescnn/random.hpp"
#include "rescnn/tensor.hpp"

namespace rescnn {

enum class Mode { Train, Test };
enum class Padding { Valid, Same };

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Graph& graph() const { return *graph_; }
  std::size_t index() const noexcept { return index_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t i) : graph_(g), index_(i) {}

  Graph* graph_ = nullptr;
  std::size_t index_ = 0;
};

// Receives the gradient of the loss w.r.t. the node's output and
// accumulates into the gradients of the node's inputs.
using BackwardFn = std::function<void(std::span<const double> out_grad)>;

struct Node {
  std::string op;
  Tensor* tensor = nullptr;
  std::vector<std::size_t> inputs;
  BackwardFn backward;
};

// Tape of executed operations. Nodes are appended in execution order, so
// the node vector is already a topological order and backward is a single
// reverse sweep.
//
// Leaves reference caller-owned tensors (parameters, inputs); gradients for
// those accumulate into the tensor's own grad slot. Intermediate values are
// owned by the graph.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Registers an external tensor. Registering the same tensor twice returns
  // the same Var.
  Var leaf(Tensor& t);
  // Graph-owned value that never requires a gradient.
  Var constant(Tensor t);
  // Appends an op result. The output requires grad iff any input does.
  Var record(std::string op, Tensor value, std::span<const Var> inputs, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Every
  // registered leaf that requires grad ends up with an allocated gradient
  // (zero when the loss does not depend on it). Leaf gradients accumulate;
  // callers zero them between steps.
  void backward(Var loss);

  std::span<Node> nodes() noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const Tensor& value(std::size_t index) const { return *nodes_.at(index).tensor; }

  // When enabled (default), every recorded value is scanned for NaN/Inf.
  void set_check_finite(bool on) noexcept { check_finite_ = on; }

 private:
  std::deque<Tensor> owned_;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> leaf_index_;
  bool check_finite_ = true;
};

// ---- Operations ------------------------------------------------------------

// input: seq x in_ch, kernel: width x in_ch x out_ch, bias: out_ch.
// Valid gives seq - width + 1 rows; Same keeps seq rows with (width-1)/2
// zeros on the left and the remainder on the right.
Var conv1d(Var input, Var kernel, Var bias, Padding padding);

// max(0, x); the gradient at exactly 0 is 0.
Var relu(Var x);

Var add(Var a, Var b);

// seq x ch -> ch. Gradient goes to the first (lowest-index) argmax.
Var max_over_time(Var input);

// x: in, weight: in x out, bias: out -> x W + b.
Var affine(Var x, Var weight, Var bias);

// table: vocab x dim -> indices.size() x dim. Backward scatter-adds.
Var lookup(Var table, std::span<const std::size_t> indices);

// Concatenates rank-2 tensors with equal row counts along columns.
Var concat_columns(std::span<const Var> parts);

// Train: multiply by a Bernoulli(keep_prob) mask drawn from rng.
// Test: multiply by keep_prob; rng is not touched and may be null.
Var dropout(Var x, double keep_prob, Mode mode, Rng* rng);

// -log softmax(logits)[label], logits of rank 1.
Var softmax_cross_entropy(Var logits, std::size_t label);

// Sum of all elements, rank-0 result.
Var sum(Var x);

// Arithmetic mean of rank-0 values.
Var mean(std::span<const Var> scalars);

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace rescnn

// Copyright 2026 The rte-snn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Define-by-run reverse-mode differentiation.
//
// A Tape records every primitive evaluated on it as a node holding the
// forward value, the ids of its inputs and a local backward rule. Nodes are
// appended in evaluation order, so the list is topologically sorted by
// construction and backward() is a single reverse sweep.
//
// Var is a cheap handle (tape pointer + node id). A Tape must outlive every
// Var that refers to it and is neither copyable nor movable.

#ifndef RTE_AUTODIFF_HPP_
#define RTE_AUTODIFF_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rte/tensor.hpp"

namespace rte {

class Tape;

class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Everything a backward rule may look at. `input_grads[i]` is null when
// input i does not require a gradient; rules must accumulate (+=) into the
// non-null slots.
struct BackwardContext {
  std::span<const double> out_grad;
  const Tensor& out_value;
  std::span<const Tensor* const> inputs;
  std::span<std::vector<double>* const> input_grads;
};

using BackwardRule = std::function<void(const BackwardContext&)>;

class Tape {
 public:
  explicit Tape(std::uint64_t rng_seed = 0) : rng_seed_(rng_seed) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that participates in differentiation when requires_grad is set.
  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Appends a derived node. The node requires a gradient iff any input does;
  // otherwise the rule is dropped.
  Var record(Tensor value, std::span<const Var> inputs, BackwardRule rule);

  // Reverse sweep from a scalar loss. Gradients accumulate over all paths;
  // a second call starts from fresh zeroed gradients.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  // Gradient after backward(); zeros for nodes not reached.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  std::uint64_t rng_seed() const { return rng_seed_; }

  // Ids of a node's inputs, exposed for structural tests.
  std::span<const std::size_t> inputs_of(Var v) const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardRule rule;
    bool requires_grad = false;
    std::vector<double> grad;
  };

  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::uint64_t rng_seed_;
};

// ---------------------------------------------------------------------------
// Surrogate gradients for the spike nonlinearity.

enum class SurrogateKind { kTriangle, kSigmoid, kRectangle };

struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::kTriangle;
  double width = 1.0;
  // Gradient-checking mode: the forward pass emits sigmoid(4x/width)
  // instead of the step, and backward uses its exact derivative. Never
  // used for training.
  bool smooth_forward = false;

  void validate() const;
};

// d/dx of the surrogate at x = v - v_th.
//   triangle:  max(0, 1 - |x|/w) / w
//   sigmoid:   k s (1 - s), s = sigmoid(k x), k = 4/w
//   rectangle: 1/(2w) for |x| < w, else 0
double surrogate_derivative(const SurrogateSpec& spec, double x);

const char* surrogate_name(SurrogateKind kind);
SurrogateKind parse_surrogate(const std::string& name);

// ---------------------------------------------------------------------------
// Primitive operations. All inputs must live on the same tape.

// a[m x k] * b[k x n].
Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
// Pointwise clip into [lo, hi]; gradient 1 strictly inside, 0 outside.
Var clamp(Var a, double lo, double hi);

// a[m x n] + bias[n] broadcast over rows.
Var add_row_bias(Var a, Var bias);

// Forward: 1 where v >= v_th else 0. Backward: surrogate derivative.
Var heaviside_spike(Var v, double v_th, const SurrogateSpec& spec);

// Stops gradient flow; the result is a constant with the same value.
Var detach(Var a);

Var sum(Var a);
Var mean(Var a);

// Element-wise mean of equally shaped tensors.
Var average(std::span<const Var> parts);

// Row-wise max-shifted softmax over the last axis of a [rows x classes]
// (or [classes]) tensor.
Var softmax(Var logits);

// Per-row -log(max(p[r, y_r], eps)); returns [rows].
Var cross_entropy_rows(Var probs, std::span<const std::size_t> labels,
                       double eps);

// Per-row sum_i p_i log(p_i / max(q_i, eps)) with 0 log 0 = 0; returns
// [rows].
Var kl_rows(Var p, Var q, double eps);

// Per-row Euclidean distance ||p - q||_2; returns [rows].
Var l2_rows(Var p, Var q);

}  // namespace rte

#endif  // RTE_AUTODIFF_HPP_

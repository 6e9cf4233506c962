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

#include "rte/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rte/error.hpp"

namespace rte {

const Tensor& Var::value() const {
  RTE_REQUIRE(tape_ != nullptr, "use of an unbound Var");
  return tape_->value(*this);
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardRule rule) {
  Node n;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    RTE_REQUIRE(in.tape() == this, "operands live on different tapes");
    n.inputs.push_back(in.id());
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.rule = std::move(rule);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tape::Node& Tape::node(Var v) const {
  RTE_REQUIRE(v.tape() == this && v.id() < nodes_.size(),
              "Var does not belong to this tape");
  return nodes_[v.id()];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

std::span<const std::size_t> Tape::inputs_of(Var v) const {
  return node(v).inputs;
}

Tensor Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) return Tensor(n.value.shape());
  return Tensor(n.value.shape(), n.grad);
}

void Tape::backward(Var loss) {
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_string(root.value.shape()));
  }
  for (Node& n : nodes_) n.grad.clear();
  if (!root.requires_grad) return;
  nodes_[loss.id()].grad.assign(1, 1.0);

  std::vector<const Tensor*> in_values;
  std::vector<std::vector<double>*> in_grads;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.rule || n.grad.empty()) continue;
    in_values.clear();
    in_grads.clear();
    for (std::size_t j : n.inputs) {
      Node& in = nodes_[j];
      in_values.push_back(&in.value);
      if (in.requires_grad) {
        if (in.grad.empty()) in.grad.assign(in.value.size(), 0.0);
        in_grads.push_back(&in.grad);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    n.rule(BackwardContext{n.grad, n.value, in_values, in_grads});
  }
}

// ---------------------------------------------------------------------------

void SurrogateSpec::validate() const {
  if (!(width > 0.0) || !std::isfinite(width)) {
    throw ContractError("surrogate width must be positive, got " +
                        std::to_string(width));
  }
}

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double surrogate_derivative(const SurrogateSpec& spec, double x) {
  const double w = spec.width;
  if (spec.smooth_forward) {
    const double k = 4.0 / w;
    const double s = sigmoid(k * x);
    return k * s * (1.0 - s);
  }
  switch (spec.kind) {
    case SurrogateKind::kTriangle:
      return std::max(0.0, 1.0 - std::abs(x) / w) / w;
    case SurrogateKind::kSigmoid: {
      const double k = 4.0 / w;
      const double s = sigmoid(k * x);
      return k * s * (1.0 - s);
    }
    case SurrogateKind::kRectangle:
      return std::abs(x) < w ? 0.5 / w : 0.0;
  }
  return 0.0;
}

const char* surrogate_name(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::kTriangle:
      return "triangle";
    case SurrogateKind::kSigmoid:
      return "sigmoid";
    case SurrogateKind::kRectangle:
      return "rectangle";
  }
  return "?";
}

SurrogateKind parse_surrogate(const std::string& name) {
  if (name == "triangle") return SurrogateKind::kTriangle;
  if (name == "sigmoid") return SurrogateKind::kSigmoid;
  if (name == "rectangle") return SurrogateKind::kRectangle;
  throw ContractError("unknown surrogate kind '" + name + "'");
}

// ---------------------------------------------------------------------------

namespace {

Tape& tape_of(Var a) {
  RTE_REQUIRE(a.valid(), "use of an unbound Var");
  return *a.tape();
}

void require_same(Var a, Var b, const char* op) {
  RTE_REQUIRE(a.tape() == b.tape(), std::string(op) +
                                        ": operands live on different tapes");
  require_same_shape(a.value(), b.value(), op);
}

// Splits a rank-1 or rank-2 shape into (rows, cols).
std::pair<std::size_t, std::size_t> as_rows(const Shape& s, const char* op) {
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw DimensionError(std::string(op) + " expects a rank-1 or rank-2 tensor, got " +
                       shape_string(s));
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " +
                         shape_string(A.shape()) + " and " +
                         shape_string(B.shape()));
  }
  const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += av * B[p * n + j];
    }
  }
  const Var ins[] = {a, b};
  return tape_of(a).record(std::move(out), ins, [m, k, n](const BackwardContext& c) {
    const Tensor& A = *c.inputs[0];
    const Tensor& B = *c.inputs[1];
    const auto& G = c.out_grad;
    if (auto* dA = c.input_grads[0]) {
      // dA = G * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * B[p * n + j];
          (*dA)[i * k + p] += s;
        }
    }
    if (auto* dB = c.input_grads[1]) {
      // dB = A^T * G
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          if (av == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) (*dB)[p * n + j] += av * G[i * n + j];
        }
    }
  });
}

Var add(Var a, Var b) {
  require_same(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const Var ins[] = {a, b};
  return tape_of(a).record(std::move(out), ins, [](const BackwardContext& c) {
    for (auto* g : c.input_grads)
      if (g)
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[i];
  });
}

Var sub(Var a, Var b) {
  require_same(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const Var ins[] = {a, b};
  return tape_of(a).record(std::move(out), ins, [](const BackwardContext& c) {
    if (auto* g = c.input_grads[0])
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[i];
    if (auto* g = c.input_grads[1])
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= c.out_grad[i];
  });
}

Var mul(Var a, Var b) {
  require_same(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const Var ins[] = {a, b};
  return tape_of(a).record(std::move(out), ins, [](const BackwardContext& c) {
    const Tensor& A = *c.inputs[0];
    const Tensor& B = *c.inputs[1];
    if (auto* g = c.input_grads[0])
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[i] * B[i];
    if (auto* g = c.input_grads[1])
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[i] * A[i];
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= s;
  const Var ins[] = {a};
  return tape_of(a).record(std::move(out), ins, [s](const BackwardContext& c) {
    auto* g = c.input_grads[0];
    for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += s * c.out_grad[i];
  });
}

Var add_scalar(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.data()) v += s;
  const Var ins[] = {a};
  return tape_of(a).record(std::move(out), ins, [](const BackwardContext& c) {
    auto* g = c.input_grads[0];
    for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[i];
  });
}

Var clamp(Var a, double lo, double hi) {
  RTE_REQUIRE(lo <= hi, "clamp: lower bound exceeds upper bound");
  Tensor out = a.value();
  for (double& v : out.data()) v = std::clamp(v, lo, hi);
  const Var ins[] = {a};
  return tape_of(a).record(std::move(out), ins, [lo, hi](const BackwardContext& c) {
    const Tensor& A = *c.inputs[0];
    auto* g = c.input_grads[0];
    for (std::size_t i = 0; i < g->size(); ++i)
      if (A[i] > lo && A[i] < hi) (*g)[i] += c.out_grad[i];
  });
}

Var add_row_bias(Var a, Var bias) {
  const Tensor& A = a.value();
  const Tensor& b = bias.value();
  if (A.rank() != 2 || b.rank() != 1 || b.dim(0) != A.dim(1)) {
    throw DimensionError("add_row_bias: incompatible shapes " +
                         shape_string(A.shape()) + " and " +
                         shape_string(b.shape()));
  }
  const std::size_t rows = A.dim(0), cols = A.dim(1);
  Tensor out = A;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) out[r * cols + j] += b[j];
  const Var ins[] = {a, bias};
  return tape_of(a).record(std::move(out), ins, [rows, cols](const BackwardContext& c) {
    if (auto* g = c.input_grads[0])
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[i];
    if (auto* g = c.input_grads[1])
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols; ++j) (*g)[j] += c.out_grad[r * cols + j];
  });
}

Var heaviside_spike(Var v, double v_th, const SurrogateSpec& spec) {
  spec.validate();
  Tensor out = v.value();
  for (double& x : out.data()) {
    if (!std::isfinite(x)) throw ContractError("heaviside_spike: non-finite input");
    if (spec.smooth_forward) {
      x = sigmoid(4.0 / spec.width * (x - v_th));
    } else {
      x = x >= v_th ? 1.0 : 0.0;
    }
  }
  const Var ins[] = {v};
  return tape_of(v).record(std::move(out), ins, [v_th, spec](const BackwardContext& c) {
    const Tensor& V = *c.inputs[0];
    auto* g = c.input_grads[0];
    for (std::size_t i = 0; i < g->size(); ++i)
      (*g)[i] += c.out_grad[i] * surrogate_derivative(spec, V[i] - v_th);
  });
}

Var detach(Var a) { return tape_of(a).constant(a.value()); }

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const Var ins[] = {a};
  return tape_of(a).record(Tensor::scalar(s), ins, [](const BackwardContext& c) {
    auto* g = c.input_grads[0];
    for (double& v : *g) v += c.out_grad[0];
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const Var ins[] = {a};
  return tape_of(a).record(Tensor::scalar(s / n), ins, [n](const BackwardContext& c) {
    auto* g = c.input_grads[0];
    for (double& v : *g) v += c.out_grad[0] / n;
  });
}

Var average(std::span<const Var> parts) {
  RTE_REQUIRE(!parts.empty(), "average of an empty list");
  for (const Var& p : parts) require_same(parts[0], p, "average");
  const double n = static_cast<double>(parts.size());
  Tensor out(parts[0].value().shape());
  for (const Var& p : parts)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p.value()[i];
  for (double& v : out.data()) v /= n;
  return tape_of(parts[0]).record(std::move(out), parts, [n](const BackwardContext& c) {
    for (auto* g : c.input_grads)
      if (g)
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.out_grad[i] / n;
  });
}

Var softmax(Var logits) {
  const auto [rows, cols] = as_rows(logits.value().shape(), "softmax");
  Tensor out = logits.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double* z = out.data().data() + r * cols;
    const double mx = *std::max_element(z, z + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      z[j] = std::exp(z[j] - mx);
      total += z[j];
    }
    for (std::size_t j = 0; j < cols; ++j) z[j] /= total;
  }
  const Var ins[] = {logits};
  return tape_of(logits).record(std::move(out), ins, [rows, cols](const BackwardContext& c) {
    const Tensor& P = c.out_value;
    auto* g = c.input_grads[0];
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j)
        dot += c.out_grad[r * cols + j] * P[r * cols + j];
      for (std::size_t j = 0; j < cols; ++j)
        (*g)[r * cols + j] += P[r * cols + j] * (c.out_grad[r * cols + j] - dot);
    }
  });
}

Var cross_entropy_rows(Var probs, std::span<const std::size_t> labels,
                       double eps) {
  const auto [rows, cols] = as_rows(probs.value().shape(), "cross_entropy_rows");
  if (labels.size() != rows) {
    throw DimensionError("cross_entropy_rows: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(rows) + " rows");
  }
  RTE_REQUIRE(eps > 0.0, "cross_entropy_rows: eps must be positive");
  std::vector<std::size_t> y(labels.begin(), labels.end());
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    if (y[r] >= cols) {
      throw ContractError("class index " + std::to_string(y[r]) +
                          " out of range for " + std::to_string(cols) +
                          " classes");
    }
    out[r] = -std::log(std::max(probs.value()[r * cols + y[r]], eps));
  }
  const Var ins[] = {probs};
  return tape_of(probs).record(
      std::move(out), ins, [y = std::move(y), cols, eps](const BackwardContext& c) {
        const Tensor& P = *c.inputs[0];
        auto* g = c.input_grads[0];
        for (std::size_t r = 0; r < y.size(); ++r) {
          const double p = P[r * cols + y[r]];
          if (p > eps) (*g)[r * cols + y[r]] -= c.out_grad[r] / p;
        }
      });
}

Var kl_rows(Var p, Var q, double eps) {
  require_same(p, q, "kl_rows");
  RTE_REQUIRE(eps > 0.0, "kl_rows: eps must be positive");
  const auto [rows, cols] = as_rows(p.value().shape(), "kl_rows");
  const Tensor& P = p.value();
  const Tensor& Q = q.value();
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double pi = P[r * cols + j];
      if (pi > 0.0) s += pi * std::log(pi / std::max(Q[r * cols + j], eps));
    }
    out[r] = s;
  }
  const Var ins[] = {p, q};
  return tape_of(p).record(std::move(out), ins, [rows, cols, eps](const BackwardContext& c) {
    const Tensor& P = *c.inputs[0];
    const Tensor& Q = *c.inputs[1];
    for (std::size_t r = 0; r < rows; ++r) {
      const double g = c.out_grad[r];
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t i = r * cols + j;
        const double qc = std::max(Q[i], eps);
        if (auto* dp = c.input_grads[0]; dp && P[i] > 0.0)
          (*dp)[i] += g * (std::log(P[i] / qc) + 1.0);
        if (auto* dq = c.input_grads[1]; dq && Q[i] > eps)
          (*dq)[i] -= g * P[i] / Q[i];
      }
    }
  });
}

Var l2_rows(Var p, Var q) {
  require_same(p, q, "l2_rows");
  const auto [rows, cols] = as_rows(p.value().shape(), "l2_rows");
  const Tensor& P = p.value();
  const Tensor& Q = q.value();
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = P[r * cols + j] - Q[r * cols + j];
      s += d * d;
    }
    out[r] = std::sqrt(s);
  }
  const Var ins[] = {p, q};
  return tape_of(p).record(std::move(out), ins, [rows, cols](const BackwardContext& c) {
    const Tensor& P = *c.inputs[0];
    const Tensor& Q = *c.inputs[1];
    for (std::size_t r = 0; r < rows; ++r) {
      const double norm = c.out_value[r];
      if (norm == 0.0) continue;  // subgradient 0 at coincidence
      const double g = c.out_grad[r] / norm;
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t i = r * cols + j;
        const double d = P[i] - Q[i];
        if (auto* dp = c.input_grads[0]) (*dp)[i] += g * d;
        if (auto* dq = c.input_grads[1]) (*dq)[i] -= g * d;
      }
    }
  });
}

}  // namespace rte

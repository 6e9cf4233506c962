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

#include "rte/snn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rte/error.hpp"
#include "rte/random.hpp"

namespace rte {

void LifConfig::validate() const {
  if (!(leak > 0.0 && leak <= 1.0)) {
    throw ContractError("leak must lie in (0, 1], got " + std::to_string(leak));
  }
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw ContractError("threshold must be positive, got " +
                        std::to_string(threshold));
  }
  if (timesteps < 1) throw ContractError("timesteps must be >= 1");
}

SnnModel SnnModel::create(std::span<const std::size_t> widths, LifConfig lif,
                          SurrogateSpec surrogate, bool readout_bias,
                          std::uint64_t seed) {
  if (widths.size() < 2) {
    throw ContractError("a model needs at least input and output widths");
  }
  SnnModel model;
  model.lif = lif;
  model.surrogate = surrogate;
  Rng rng = make_rng(seed, {stream::kInit});
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    if (in == 0 || out == 0) throw ContractError("layer widths must be positive");
    const double w_bound = std::sqrt(6.0 / static_cast<double>(in));
    const double b_bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> wd(-w_bound, w_bound);
    std::uniform_real_distribution<double> bd(-b_bound, b_bound);
    Linear layer{Tensor({in, out}), std::nullopt};
    for (double& w : layer.weight.data()) w = wd(rng);
    const bool is_readout = l + 2 == widths.size();
    if (!is_readout || readout_bias) {
      layer.bias = Tensor({out});
      for (double& b : layer.bias->data()) b = bd(rng);
    }
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

void SnnModel::validate() const {
  lif.validate();
  surrogate.validate();
  if (layers.empty()) throw ContractError("model has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Linear& layer = layers[l];
    if (layer.weight.rank() != 2) {
      throw DimensionError("layer " + std::to_string(l) +
                           " weight must be rank 2, got " +
                           shape_string(layer.weight.shape()));
    }
    if (layer.bias && layer.bias->shape() != Shape{layer.out_features()}) {
      throw DimensionError("layer " + std::to_string(l) + " bias shape " +
                           shape_string(layer.bias->shape()) +
                           " does not match width " +
                           std::to_string(layer.out_features()));
    }
    if (l > 0 && layers[l - 1].out_features() != layer.in_features()) {
      throw DimensionError("layer " + std::to_string(l) + " expects " +
                           std::to_string(layer.in_features()) +
                           " inputs but previous layer emits " +
                           std::to_string(layers[l - 1].out_features()));
    }
  }
}

std::vector<std::size_t> SnnModel::widths() const {
  std::vector<std::size_t> w{input_features()};
  for (const Linear& l : layers) w.push_back(l.out_features());
  return w;
}

std::vector<Tensor*> SnnModel::parameters() {
  std::vector<Tensor*> out;
  for (Linear& l : layers) {
    out.push_back(&l.weight);
    if (l.bias) out.push_back(&*l.bias);
  }
  return out;
}

std::vector<const Tensor*> SnnModel::parameters() const {
  std::vector<const Tensor*> out;
  for (const Linear& l : layers) {
    out.push_back(&l.weight);
    if (l.bias) out.push_back(&*l.bias);
  }
  return out;
}

LayerState reset_state(Tape& tape, const SnnModel& model, std::size_t batch) {
  RTE_REQUIRE(batch >= 1, "reset_state: batch must be >= 1");
  LayerState state;
  for (std::size_t l = 0; l < model.hidden_layers(); ++l) {
    const Shape shape{batch, model.layers[l].out_features()};
    state.membrane.push_back(tape.constant(Tensor(shape)));
    state.spikes.push_back(tape.constant(Tensor(shape)));
  }
  return state;
}

Var lif_step(LayerState& state, std::size_t layer, Var input_current,
             const LifConfig& cfg, const SurrogateSpec& surrogate,
             const LifStepOptions& options) {
  RTE_REQUIRE(state.initialized(), "lif_step on an uninitialized state");
  RTE_REQUIRE(layer < state.membrane.size(),
              "lif_step: layer " + std::to_string(layer) + " out of range");
  const Var v = state.membrane[layer];
  const Var s = state.spikes[layer];
  if (input_current.shape() != v.shape()) {
    throw DimensionError("lif_step: input current " +
                         shape_string(input_current.shape()) +
                         " does not match layer state " +
                         shape_string(v.shape()));
  }
  Tape& tape = *v.tape();
  Var keep;
  if (options.detach_reset) {
    Tensor k = s.value();
    for (double& e : k.data()) e = 1.0 - e;
    keep = tape.constant(std::move(k));
  } else {
    keep = add_scalar(scale(s, -1.0), 1.0);
  }
  const Var decayed = scale(mul(v, keep), cfg.leak);
  const Var drive =
      options.scale_input ? scale(input_current, 1.0 - cfg.leak) : input_current;
  const Var v_next = add(decayed, drive);
  const Var s_next = heaviside_spike(v_next, cfg.threshold, surrogate);
  state.membrane[layer] = v_next;
  state.spikes[layer] = s_next;
  return s_next;
}

std::vector<BoundLayer> bind_parameters(Tape& tape, const SnnModel& model,
                                        bool requires_grad) {
  std::vector<BoundLayer> out;
  out.reserve(model.layers.size());
  for (const Linear& l : model.layers) {
    BoundLayer b{tape.leaf(l.weight, requires_grad), std::nullopt};
    if (l.bias) b.bias = tape.leaf(*l.bias, requires_grad);
    out.push_back(b);
  }
  return out;
}

namespace {

Var affine(Var in, const BoundLayer& layer) {
  Var out = matmul(in, layer.weight);
  if (layer.bias) out = add_row_bias(out, *layer.bias);
  return out;
}

}  // namespace

std::vector<Var> forward_timesteps(const SnnModel& model,
                                   std::span<const BoundLayer> params, Var x) {
  RTE_REQUIRE(params.size() == model.layers.size(),
              "forward_timesteps: parameter binding does not match model");
  if (x.value().rank() != 2 || x.value().dim(1) != model.input_features()) {
    throw DimensionError("forward_timesteps: input " +
                         shape_string(x.value().shape()) + " but model expects " +
                         std::to_string(model.input_features()) + " features");
  }
  Tape& tape = *x.tape();
  const std::size_t batch = x.value().dim(0);
  LayerState state = reset_state(tape, model, batch);
  const LifStepOptions opts{model.detach_reset, true};

  // The input is identical at every step, so the first layer's current is
  // computed once and reused; gradients accumulate over its T uses.
  const Var first_current = affine(x, params[0]);

  std::vector<Var> logits;
  logits.reserve(model.lif.timesteps);
  for (std::size_t t = 0; t < model.lif.timesteps; ++t) {
    Var h;
    for (std::size_t l = 0; l < model.hidden_layers(); ++l) {
      const Var current = l == 0 ? first_current : affine(h, params[l]);
      h = lif_step(state, l, current, model.lif, model.surrogate, opts);
    }
    logits.push_back(model.hidden_layers() == 0 ? first_current
                                                : affine(h, params.back()));
  }
  return logits;
}

std::vector<Var> forward_timesteps(const SnnModel& model, Var x) {
  const auto params = bind_parameters(*x.tape(), model, false);
  return forward_timesteps(model, params, x);
}

Var aggregate_output(std::span<const Var> logits_per_t) {
  return average(logits_per_t);
}

Tensor aggregate_output(const Tensor& logits_per_t) {
  if (logits_per_t.rank() != 3) {
    throw DimensionError("aggregate_output expects [T x batch x classes], got " +
                         shape_string(logits_per_t.shape()));
  }
  const std::size_t T = logits_per_t.dim(0);
  const std::size_t slice = logits_per_t.size() / T;
  Tensor out({logits_per_t.dim(1), logits_per_t.dim(2)});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < slice; ++i) out[i] += logits_per_t[t * slice + i];
  for (double& v : out.data()) v /= static_cast<double>(T);
  return out;
}

Tensor stack_timesteps(std::span<const Var> logits_per_t) {
  RTE_REQUIRE(!logits_per_t.empty(), "stack_timesteps: empty sequence");
  const Shape& s = logits_per_t.front().shape();
  Shape shape{logits_per_t.size()};
  shape.insert(shape.end(), s.begin(), s.end());
  std::vector<double> data;
  data.reserve(shape_size(shape));
  for (const Var& v : logits_per_t) {
    if (v.shape() != s) throw DimensionError("stack_timesteps: ragged slices");
    data.insert(data.end(), v.value().data().begin(), v.value().data().end());
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor predict_timesteps(const SnnModel& model, const Tensor& x) {
  Tape tape;
  const auto logits = forward_timesteps(model, tape.constant(x));
  return stack_timesteps(logits);
}

Tensor predict_logits(const SnnModel& model, const Tensor& x) {
  Tape tape;
  const auto logits = forward_timesteps(model, tape.constant(x));
  return aggregate_output(logits).value();
}

std::vector<std::size_t> predict_classes(const SnnModel& model,
                                         const Tensor& x) {
  const Tensor logits = predict_logits(model, x);
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  std::vector<std::size_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = logits.data().subspan(r * cols, cols);
    out[r] = static_cast<std::size_t>(
        std::distance(row.begin(), std::max_element(row.begin(), row.end())));
  }
  return out;
}

}  // namespace rte

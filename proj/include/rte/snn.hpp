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

// Leaky integrate-and-fire networks unrolled over discrete timesteps.
//
// Every hidden layer l runs
//
//   V(t+1) = leak * V(t) * (1 - s(t)) + (1 - leak) * (W s_prev(t+1) + b)
//   s(t+1) = H(V(t+1) - v_th)
//
// with the static input injected unchanged at every step (direct encoding).
// The last layer is a non-spiking readout; its output at step t is the
// logit vector of the temporal sub-network f_t, and the network output is
// the mean of the T sub-network logits.

#ifndef RTE_SNN_HPP_
#define RTE_SNN_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rte/autodiff.hpp"
#include "rte/tensor.hpp"

namespace rte {

struct LifConfig {
  double leak = 0.5;
  double threshold = 0.5;
  std::size_t timesteps = 4;

  void validate() const;
};

// Fully connected layer; weight is [in x out] so that a batch [B x in]
// maps to [B x out].
struct Linear {
  Tensor weight;
  std::optional<Tensor> bias;

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
};

struct SnnModel {
  std::vector<Linear> layers;
  LifConfig lif;
  SurrogateSpec surrogate;
  // Treat the (1 - s) reset factor as a constant during backward.
  bool detach_reset = true;

  // Builds a model with layer widths {in, hidden..., classes}. Weights are
  // drawn from U(-sqrt(6/fan_in), sqrt(6/fan_in)) and biases from
  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)). Hidden biases are always present;
  // the readout bias is optional.
  static SnnModel create(std::span<const std::size_t> widths, LifConfig lif,
                         SurrogateSpec surrogate, bool readout_bias,
                         std::uint64_t seed);

  void validate() const;

  std::size_t input_features() const { return layers.front().in_features(); }
  std::size_t classes() const { return layers.back().out_features(); }
  std::size_t hidden_layers() const { return layers.size() - 1; }
  std::vector<std::size_t> widths() const;

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
};

// Membrane potential and last spikes of each hidden layer, as nodes on the
// tape that owns the current forward pass.
struct LayerState {
  std::vector<Var> membrane;
  std::vector<Var> spikes;

  bool initialized() const { return !membrane.empty(); }
};

LayerState reset_state(Tape& tape, const SnnModel& model, std::size_t batch);

struct LifStepOptions {
  bool detach_reset = true;
  // When false the caller has already applied the (1 - leak) factor.
  bool scale_input = true;
};

// Advances hidden layer `layer` by one step and returns its new spikes.
Var lif_step(LayerState& state, std::size_t layer, Var input_current,
             const LifConfig& cfg, const SurrogateSpec& surrogate = {},
             const LifStepOptions& options = {});

struct BoundLayer {
  Var weight;
  std::optional<Var> bias;
};

// Places the model parameters on the tape as leaves.
std::vector<BoundLayer> bind_parameters(Tape& tape, const SnnModel& model,
                                        bool requires_grad);

// Sub-network logits f_1(x) ... f_T(x), each [batch x classes], all on one
// tape so gradients flow through time.
std::vector<Var> forward_timesteps(const SnnModel& model,
                                   std::span<const BoundLayer> params, Var x);
// Convenience overload binding the parameters as constants.
std::vector<Var> forward_timesteps(const SnnModel& model, Var x);

// Mean over the time axis.
Var aggregate_output(std::span<const Var> logits_per_t);
Tensor aggregate_output(const Tensor& logits_per_t);

// Packs per-step logits into a [T x batch x classes] tensor.
Tensor stack_timesteps(std::span<const Var> logits_per_t);

// Tape-free evaluation helpers.
Tensor predict_timesteps(const SnnModel& model, const Tensor& x);
Tensor predict_logits(const SnnModel& model, const Tensor& x);
std::vector<std::size_t> predict_classes(const SnnModel& model,
                                         const Tensor& x);

// Checkpoint I/O. See docs in README for the text layout.
void write_checkpoint(std::ostream& out, const SnnModel& model);
SnnModel read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const SnnModel& model);
SnnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace rte

#endif  // RTE_SNN_HPP_

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

#include "rte/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "rte/error.hpp"
#include "rte/objectives.hpp"

namespace rte {

const char* objective_name(AttackObjective o) {
  switch (o) {
    case AttackObjective::kCeAggregate:
      return "ce-on-aggregate";
    case AttackObjective::kKlAggregate:
      return "kl-on-aggregate";
    case AttackObjective::kCeSubnet:
      return "ce-subnet";
    case AttackObjective::kKlSubnet:
      return "kl-subnet";
    case AttackObjective::kL2Subnet:
      return "l2-subnet";
  }
  return "?";
}

AttackObjective parse_objective(const std::string& name) {
  for (auto o : {AttackObjective::kCeAggregate, AttackObjective::kKlAggregate,
                 AttackObjective::kCeSubnet, AttackObjective::kKlSubnet,
                 AttackObjective::kL2Subnet}) {
    if (name == objective_name(o)) return o;
  }
  throw ContractError("unknown attack objective '" + name + "'");
}

bool is_subnet_objective(AttackObjective o) {
  return o == AttackObjective::kCeSubnet || o == AttackObjective::kKlSubnet ||
         o == AttackObjective::kL2Subnet;
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ContractError("attack epsilon must be >= 0");
  }
  if (steps >= 1 && !(alpha > 0.0)) {
    throw ContractError("attack alpha must be > 0 when steps >= 1");
  }
  if (!(box.lo <= box.hi)) throw ContractError("attack box is empty");
}

Tensor project_ball(const Tensor& x_adv, const Tensor& x, double epsilon,
                    Box box) {
  require_same_shape(x_adv, x, "project_ball");
  RTE_REQUIRE(epsilon >= 0.0, "project_ball: epsilon must be >= 0");
  Tensor out = x_adv;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = std::min(std::max(out[i], x[i] - epsilon), x[i] + epsilon);
    out[i] = std::min(std::max(v, box.lo), box.hi);
  }
  return out;
}

namespace {

constexpr double sign(double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

void check_batch(const SnnModel& model, const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != model.input_features()) {
    throw DimensionError("attack input " + shape_string(x.shape()) +
                         " does not match model with " +
                         std::to_string(model.input_features()) + " features");
  }
}

bool needs_labels(AttackObjective o) {
  return o == AttackObjective::kCeAggregate || o == AttackObjective::kCeSubnet;
}

// Clean-side distribution for the divergence objectives, [B x classes].
std::optional<Tensor> reference(const SnnModel& model, const Tensor& x,
                                const AttackConfig& cfg) {
  if (needs_labels(cfg.objective)) return std::nullopt;
  Tape tape;
  const auto logits = forward_timesteps(model, tape.constant(x));
  const Var z = cfg.objective == AttackObjective::kKlAggregate
                    ? aggregate_output(logits)
                    : logits[cfg.timestep];
  return softmax(z).value();
}

// Per-row objective at x_adv on the given tape.
Var objective_rows(const SnnModel& model, std::span<const BoundLayer> params,
                   Var x_adv, const std::optional<Tensor>& ref,
                   std::span<const std::size_t> labels,
                   const AttackConfig& cfg) {
  Tape& tape = *x_adv.tape();
  const auto logits = forward_timesteps(model, params, x_adv);
  switch (cfg.objective) {
    case AttackObjective::kCeAggregate:
      return cross_entropy_rows(softmax(aggregate_output(logits)), labels,
                                kDefaultKlEpsilon);
    case AttackObjective::kKlAggregate:
      return kl_rows(tape.constant(*ref), softmax(aggregate_output(logits)),
                     kDefaultKlEpsilon);
    case AttackObjective::kCeSubnet:
      return cross_entropy_rows(softmax(logits[cfg.timestep]), labels,
                                kDefaultKlEpsilon);
    case AttackObjective::kKlSubnet:
      return kl_rows(tape.constant(*ref), softmax(logits[cfg.timestep]),
                     kDefaultKlEpsilon);
    case AttackObjective::kL2Subnet:
      return l2_rows(tape.constant(*ref), softmax(logits[cfg.timestep]));
  }
  throw ContractError("unhandled attack objective");
}

void check_config(const SnnModel& model, const Tensor& x,
                  std::span<const std::size_t> labels, const AttackConfig& cfg) {
  cfg.validate();
  check_batch(model, x);
  if (is_subnet_objective(cfg.objective) &&
      cfg.timestep >= model.lif.timesteps) {
    throw ContractError("sub-network index " + std::to_string(cfg.timestep) +
                        " out of range for T=" +
                        std::to_string(model.lif.timesteps));
  }
  if (needs_labels(cfg.objective) && labels.size() != x.dim(0)) {
    throw DimensionError("attack needs " + std::to_string(x.dim(0)) +
                         " labels, got " + std::to_string(labels.size()));
  }
}

Tensor input_gradient(const SnnModel& model, const Tensor& x_adv,
                      const std::optional<Tensor>& ref,
                      std::span<const std::size_t> labels,
                      const AttackConfig& cfg) {
  Tape tape;
  const auto params = bind_parameters(tape, model, false);
  const Var xv = tape.leaf(x_adv, true);
  const Var loss = sum(objective_rows(model, params, xv, ref, labels, cfg));
  tape.backward(loss);
  return tape.grad(xv);
}

}  // namespace

Tensor fgsm(const SnnModel& model, const Tensor& x,
            std::span<const std::size_t> labels, double epsilon, Box box) {
  AttackConfig cfg;
  cfg.epsilon = epsilon;
  cfg.steps = 0;
  cfg.box = box;
  cfg.objective = AttackObjective::kCeAggregate;
  check_config(model, x, labels, cfg);
  const Tensor g = input_gradient(model, x, std::nullopt, labels, cfg);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::min(std::max(x[i] + epsilon * sign(g[i]), box.lo), box.hi);
  }
  return out;
}

Tensor pgd(const SnnModel& model, const Tensor& x,
           std::span<const std::size_t> labels, const AttackConfig& cfg,
           Rng& rng) {
  check_config(model, x, labels, cfg);
  const std::optional<Tensor> ref = reference(model, x, cfg);
  Tensor x_adv = x;
  if (cfg.random_start && cfg.epsilon > 0.0) {
    std::uniform_real_distribution<double> u(-cfg.epsilon, cfg.epsilon);
    for (std::size_t i = 0; i < x_adv.size(); ++i) x_adv[i] = x[i] + u(rng);
    x_adv = project_ball(x_adv, x, cfg.epsilon, cfg.box);
  }
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const Tensor g = input_gradient(model, x_adv, ref, labels, cfg);
    for (std::size_t i = 0; i < x_adv.size(); ++i) {
      x_adv[i] += cfg.alpha * sign(g[i]);
    }
    x_adv = project_ball(x_adv, x, cfg.epsilon, cfg.box);
  }
  return x_adv;
}

Tensor subnet_pgd(const SnnModel& model, const Tensor& x, std::size_t m,
                  const AttackConfig& cfg, Rng& rng) {
  if (m >= model.lif.timesteps) {
    throw ContractError("subnet_pgd: timestep " + std::to_string(m) +
                        " out of range for T=" +
                        std::to_string(model.lif.timesteps));
  }
  AttackConfig sub = cfg;
  sub.timestep = m;
  if (sub.objective != AttackObjective::kL2Subnet) {
    sub.objective = AttackObjective::kKlSubnet;
  }
  return pgd(model, x, {}, sub, rng);
}

std::vector<double> attack_objective_rows(const SnnModel& model,
                                          const Tensor& x, const Tensor& x_adv,
                                          std::span<const std::size_t> labels,
                                          const AttackConfig& cfg) {
  check_config(model, x, labels, cfg);
  require_same_shape(x, x_adv, "attack_objective");
  const std::optional<Tensor> ref = reference(model, x, cfg);
  Tape tape;
  const auto params = bind_parameters(tape, model, false);
  const Var rows =
      objective_rows(model, params, tape.constant(x_adv), ref, labels, cfg);
  return rows.value().values();
}

double attack_objective(const SnnModel& model, const Tensor& x,
                        const Tensor& x_adv,
                        std::span<const std::size_t> labels,
                        const AttackConfig& cfg) {
  const auto rows = attack_objective_rows(model, x, x_adv, labels, cfg);
  double s = 0.0;
  for (double v : rows) s += v;
  return s / static_cast<double>(rows.size());
}

}  // namespace rte

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

// l-infinity bounded sign-gradient attacks on SnnModel.
//
// Inputs are batches [B x features]. Objectives are summed over the batch
// before differentiation; rows do not interact, so each row receives the
// sign of its own per-example gradient.

#ifndef RTE_ATTACKS_HPP_
#define RTE_ATTACKS_HPP_

#include <span>
#include <string>

#include "rte/random.hpp"
#include "rte/snn.hpp"
#include "rte/tensor.hpp"

namespace rte {

enum class AttackObjective {
  kCeAggregate,  // CE(f(x'), y) on the time-averaged logits
  kKlAggregate,  // KL(p(x) || p(x')) on the time-averaged logits (TRADES)
  kCeSubnet,     // CE(f_m(x'), y) for one sub-network
  kKlSubnet,     // KL(p_m(x) || p_m(x')) for one sub-network
  kL2Subnet,     // ||p_m(x) - p_m(x')||_2 for one sub-network
};

const char* objective_name(AttackObjective o);
AttackObjective parse_objective(const std::string& name);
bool is_subnet_objective(AttackObjective o);

struct Box {
  double lo = 0.0;
  double hi = 1.0;
};

struct AttackConfig {
  double epsilon = 0.05;
  double alpha = 0.0125;
  std::size_t steps = 7;
  bool random_start = true;
  AttackObjective objective = AttackObjective::kCeAggregate;
  // 0-based sub-network index for the *Subnet objectives.
  std::size_t timestep = 0;
  Box box;

  void validate() const;
};

// Clip into [x - eps, x + eps] intersected with the box.
Tensor project_ball(const Tensor& x_adv, const Tensor& x, double epsilon,
                    Box box = {});

// clip_box(x + eps * sign(grad_x CE(f(x), y))), sign(0) = 0.
Tensor fgsm(const SnnModel& model, const Tensor& x,
            std::span<const std::size_t> labels, double epsilon, Box box = {});

// Optional U(-eps, eps) start, then `steps` iterations of
//   x' <- project(x' + alpha * sign(grad objective(x'))).
// The clean-side reference of the KL / l2 objectives is evaluated once at x
// and held constant.
Tensor pgd(const SnnModel& model, const Tensor& x,
           std::span<const std::size_t> labels, const AttackConfig& cfg,
           Rng& rng);

// PGD against sub-network m (0-based) maximizing KL(p_m(x) || p_m(x')).
// A cfg with a subnet objective keeps it (kL2Subnet for the l2 metric);
// otherwise kKlSubnet is used.
Tensor subnet_pgd(const SnnModel& model, const Tensor& x, std::size_t m,
                  const AttackConfig& cfg, Rng& rng);

// Batch-mean value of the configured objective at x_adv, with the reference
// side taken at x.
double attack_objective(const SnnModel& model, const Tensor& x,
                        const Tensor& x_adv,
                        std::span<const std::size_t> labels,
                        const AttackConfig& cfg);

// Per-row objective values (same semantics as attack_objective).
std::vector<double> attack_objective_rows(const SnnModel& model,
                                          const Tensor& x, const Tensor& x_adv,
                                          std::span<const std::size_t> labels,
                                          const AttackConfig& cfg);

}  // namespace rte

#endif  // RTE_ATTACKS_HPP_

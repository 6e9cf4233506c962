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

#include "rte/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "rte/error.hpp"
#include "rte/snn.hpp"

namespace rte {

ProbVector::ProbVector(std::vector<double> p) : p_(std::move(p)) {
  RTE_REQUIRE(!p_.empty(), "empty probability vector");
  double total = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ContractError("probability entries must be finite and >= 0");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ContractError("probabilities sum to " + std::to_string(total));
  }
}

ProbVector softmax(std::span<const double> logits) {
  RTE_REQUIRE(!logits.empty(), "softmax of an empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return ProbVector(std::move(p));
}

double cross_entropy_onehot(const ProbVector& p, std::size_t y, double eps) {
  if (y >= p.size()) {
    throw ContractError("class index " + std::to_string(y) +
                        " out of range for " + std::to_string(p.size()) +
                        " classes");
  }
  return -std::log(std::max(p[y], eps));
}

double kl_divergence(const ProbVector& p, const ProbVector& q, double eps) {
  if (p.size() != q.size()) {
    throw DimensionError("kl_divergence: lengths " + std::to_string(p.size()) +
                         " and " + std::to_string(q.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / std::max(q[i], eps));
  }
  return s;
}

const char* kl_direction_name(KlDirection d) {
  return d == KlDirection::kRefFirst ? "ref-first" : "adv-first";
}

KlDirection parse_kl_direction(const std::string& name) {
  if (name == "ref-first") return KlDirection::kRefFirst;
  if (name == "adv-first") return KlDirection::kAdvFirst;
  throw ContractError("unknown kl direction '" + name + "'");
}

void LossConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ContractError("gamma must be >= 0");
  }
  if (!(kl_epsilon > 0.0)) throw ContractError("kl_epsilon must be > 0");
}

namespace {

void check_sequences(std::span<const Var> a, std::span<const Var> b) {
  RTE_REQUIRE(!a.empty(), "loss needs at least one timestep");
  if (a.size() != b.size()) {
    throw DimensionError("clean and adversarial logits have " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + " timesteps");
  }
  for (std::size_t t = 0; t < a.size(); ++t) {
    require_same_shape(a[t].value(), b[t].value(), "loss logits");
  }
}

}  // namespace

Var tet_ce_loss(std::span<const Var> logits_per_t,
                std::span<const std::size_t> labels, double eps) {
  RTE_REQUIRE(!logits_per_t.empty(), "tet_ce_loss needs at least one timestep");
  std::vector<Var> per_step;
  per_step.reserve(logits_per_t.size());
  for (const Var& z : logits_per_t) {
    per_step.push_back(mean(cross_entropy_rows(softmax(z), labels, eps)));
  }
  return average(per_step);
}

Var rte_regularizer(std::span<const Var> logits_clean,
                    std::span<const Var> logits_adv, const LossConfig& cfg) {
  check_sequences(logits_clean, logits_adv);
  std::vector<Var> per_step;
  per_step.reserve(logits_clean.size());
  for (std::size_t t = 0; t < logits_clean.size(); ++t) {
    const Var p = softmax(logits_clean[t]);
    const Var q = softmax(logits_adv[t]);
    const Var kl = cfg.kl_direction == KlDirection::kRefFirst
                       ? kl_rows(p, q, cfg.kl_epsilon)
                       : kl_rows(q, p, cfg.kl_epsilon);
    per_step.push_back(mean(kl));
  }
  return average(per_step);
}

Var rte_loss(std::span<const Var> logits_clean, std::span<const Var> logits_adv,
             std::span<const std::size_t> labels, const LossConfig& cfg) {
  cfg.validate();
  check_sequences(logits_clean, logits_adv);
  // (1/T) sum_t (CE_t + gamma KL_t) split into its two linear parts.
  const Var ce = tet_ce_loss(logits_clean, labels, cfg.kl_epsilon);
  const Var reg = rte_regularizer(logits_clean, logits_adv, cfg);
  return add(ce, scale(reg, cfg.gamma));
}

Var trades_loss(std::span<const Var> logits_clean,
                std::span<const Var> logits_adv,
                std::span<const std::size_t> labels, double beta, double eps) {
  RTE_REQUIRE(beta >= 0.0, "trades beta must be >= 0");
  check_sequences(logits_clean, logits_adv);
  const Var p = softmax(aggregate_output(logits_clean));
  const Var q = softmax(aggregate_output(logits_adv));
  const Var ce = mean(cross_entropy_rows(p, labels, eps));
  const Var kl = mean(kl_rows(p, q, eps));
  return add(ce, scale(kl, beta));
}

}  // namespace rte

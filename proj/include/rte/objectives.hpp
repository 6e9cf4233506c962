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

#ifndef RTE_OBJECTIVES_HPP_
#define RTE_OBJECTIVES_HPP_

#include <span>
#include <string>
#include <vector>

#include "rte/autodiff.hpp"

namespace rte {

inline constexpr double kDefaultKlEpsilon = 1e-12;

// Categorical distribution: entries >= 0 summing to 1 within 1e-9.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> p);

  std::span<const double> values() const { return p_; }
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }

 private:
  std::vector<double> p_;
};

ProbVector softmax(std::span<const double> logits);

// -log(max(p[y], eps)).
double cross_entropy_onehot(const ProbVector& p, std::size_t y,
                            double eps = kDefaultKlEpsilon);

// sum_i p_i log(p_i / max(q_i, eps)), with 0 log 0 = 0.
double kl_divergence(const ProbVector& p, const ProbVector& q,
                     double eps = kDefaultKlEpsilon);

enum class KlDirection {
  kRefFirst,  // KL(p_t(x) || p_t(x'))
  kAdvFirst,  // KL(p_t(x') || p_t(x))
};

const char* kl_direction_name(KlDirection d);
KlDirection parse_kl_direction(const std::string& name);

struct LossConfig {
  double gamma = 0.0;
  double kl_epsilon = kDefaultKlEpsilon;
  KlDirection kl_direction = KlDirection::kRefFirst;

  void validate() const;
};

// Tape losses. Per-step logits are [batch x classes] each; every loss is a
// scalar averaged over the batch.

// mean_t mean_b CE(softmax(f_t(x_b)), y_b).
Var tet_ce_loss(std::span<const Var> logits_per_t,
                std::span<const std::size_t> labels,
                double eps = kDefaultKlEpsilon);

// (1/T) sum_t [ CE(p_t(x), y) + gamma KL(p_t(x) || p_t(x')) ], batch-mean.
// The label term is the cross-entropy to the one-hot label.
Var rte_loss(std::span<const Var> logits_clean, std::span<const Var> logits_adv,
             std::span<const std::size_t> labels, const LossConfig& cfg);

// Only the regularizer (1/T) sum_t KL(p_t(x) || p_t(x')), batch-mean.
Var rte_regularizer(std::span<const Var> logits_clean,
                    std::span<const Var> logits_adv, const LossConfig& cfg);

// CE(p(x), y) + beta KL(p(x) || p(x')) on the time-aggregated outputs.
Var trades_loss(std::span<const Var> logits_clean,
                std::span<const Var> logits_adv,
                std::span<const std::size_t> labels, double beta,
                double eps = kDefaultKlEpsilon);

}  // namespace rte

#endif  // RTE_OBJECTIVES_HPP_

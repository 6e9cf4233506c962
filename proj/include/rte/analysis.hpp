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

#ifndef RTE_ANALYSIS_HPP_
#define RTE_ANALYSIS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rte/attacks.hpp"
#include "rte/data.hpp"
#include "rte/snn.hpp"

namespace rte {

struct EvalReport {
  double clean_accuracy = 0.0;
  std::vector<double> robust_accuracy;  // one per attack, in input order
  double worst_case_accuracy = 0.0;     // per-example AND over attacks
  double tradeoff = 0.0;                // clean + worst-case
};

enum class AttackKind { kFgsm, kPgd };

struct EvalAttack {
  AttackKind kind = AttackKind::kPgd;
  AttackConfig config;

  // "fgsm:<eps>" or "pgd:<eps>:<steps>".
  std::string label() const;
};

// "fgsm:<eps>" or "pgd:<eps>:<steps>[:<alpha>]". PGD evaluation attacks
// use the aggregated CE objective with a random start; alpha defaults to
// 2.5 * eps / steps.
EvalAttack parse_eval_attack(const std::string& spec);

// An example counts as robust under an attack when the aggregated argmax on
// that attack's x' is correct; the worst case requires robustness under
// every attack at once.
EvalReport robust_accuracy(const SnnModel& model, const Dataset& data,
                           std::span<const EvalAttack> attacks,
                           std::uint64_t seed);

double tradeoff_metric(double clean, double robust);

enum class ShiftMetric { kKl, kL2 };

const char* metric_name(ShiftMetric m);
ShiftMetric parse_metric(const std::string& name);

struct TransferOptions {
  double epsilon = 0.05;
  double alpha = 0.0125;
  std::size_t steps = 10;
  ShiftMetric metric = ShiftMetric::kKl;
  bool random_start = true;
  // Evaluation subset size; 0 or >= dataset size uses everything.
  std::size_t n_samples = 256;
  std::uint64_t seed = 0;
  Box box;
};

// Row t holds the mean shift D[p_m(x), p_m(x'_t)] of every sub-network m
// under the worst-case input x'_t crafted against sub-network t.
struct TransferMatrix {
  std::size_t timesteps = 0;
  std::vector<double> values;  // row-major [source t][target m]
  ShiftMetric metric = ShiftMetric::kKl;
  double epsilon = 0.0;
  std::size_t steps = 0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;

  double at(std::size_t t, std::size_t m) const {
    return values[t * timesteps + m];
  }
  double mean_diagonal() const;
  double mean_off_diagonal() const;
  double mean() const;
  // Mean entry at each |t - m| = 0 .. T-1.
  std::vector<double> mean_by_gap() const;
};

TransferMatrix transferability_matrix(const SnnModel& model,
                                      const Dataset& data,
                                      const TransferOptions& options);

// Lattice of losses CE(f(x + a_i dir1 + b_j dir2), y) with a_i, b_j evenly
// spaced over [-extent, extent] (resolution points each, so the exact
// centre is present when resolution is odd).
struct SurfaceGrid {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> values;  // row-major [i over a][j over b]

  double at(std::size_t i, std::size_t j) const {
    return values[i * b.size() + j];
  }
};

SurfaceGrid loss_surface_grid(const SnnModel& model, const Tensor& x,
                              std::size_t y, const Tensor& dir1,
                              const Tensor& dir2, double extent,
                              std::size_t resolution);

// sign(grad_x CE) and a random +-1 vector with its dir1 component removed
// and rescaled to the same l2 norm.
std::pair<Tensor, Tensor> default_surface_directions(const SnnModel& model,
                                                     const Tensor& x,
                                                     std::size_t y,
                                                     std::uint64_t seed);

// Plain numeric text: one row per line, comma separated, shortest
// round-trip formatting.
void write_csv(const std::filesystem::path& path, std::size_t rows,
               std::size_t cols, std::span<const double> values);
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path);

std::string format_number(double v);

}  // namespace rte

#endif  // RTE_ANALYSIS_HPP_

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

#include "rte/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rte/error.hpp"
#include "rte/objectives.hpp"
#include "rte/random.hpp"

namespace rte {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Robust accuracy

std::string EvalAttack::label() const {
  if (kind == AttackKind::kFgsm) return "fgsm:" + format_number(config.epsilon);
  return "pgd:" + format_number(config.epsilon) + ":" +
         std::to_string(config.steps);
}

namespace {

double parse_field(const std::string& s, const std::string& spec) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ContractError("bad number '" + s + "' in attack spec '" + spec + "'");
  }
  return v;
}

}  // namespace

EvalAttack parse_eval_attack(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  EvalAttack a;
  a.config.objective = AttackObjective::kCeAggregate;
  a.config.random_start = true;
  if (parts.size() == 2 && parts[0] == "fgsm") {
    a.kind = AttackKind::kFgsm;
    a.config.epsilon = parse_field(parts[1], spec);
    a.config.steps = 1;
    a.config.alpha = a.config.epsilon > 0.0 ? a.config.epsilon : 1.0;
    a.config.random_start = false;
  } else if ((parts.size() == 3 || parts.size() == 4) && parts[0] == "pgd") {
    a.kind = AttackKind::kPgd;
    a.config.epsilon = parse_field(parts[1], spec);
    const double steps = parse_field(parts[2], spec);
    if (steps < 0 || steps != std::floor(steps)) {
      throw ContractError("bad step count in attack spec '" + spec + "'");
    }
    a.config.steps = static_cast<std::size_t>(steps);
    if (parts.size() == 4) {
      a.config.alpha = parse_field(parts[3], spec);
    } else {
      a.config.alpha = a.config.epsilon > 0.0 && a.config.steps > 0
                           ? 2.5 * a.config.epsilon / static_cast<double>(a.config.steps)
                           : 1.0;
    }
  } else {
    throw ContractError("attack spec '" + spec +
                        "' is not fgsm:<eps> or pgd:<eps>:<steps>[:<alpha>]");
  }
  a.config.validate();
  return a;
}

EvalReport robust_accuracy(const SnnModel& model, const Dataset& data,
                           std::span<const EvalAttack> attacks,
                           std::uint64_t seed) {
  RTE_REQUIRE(data.size() > 0, "robust_accuracy: empty dataset");
  RTE_REQUIRE(!attacks.empty(), "robust_accuracy: empty attack list");
  const std::size_t n = data.size();
  std::vector<char> robust_all(n, 1);
  EvalReport report;

  const auto correct_mask = [&](const Tensor& x) {
    const auto pred = predict_classes(model, x);
    std::vector<char> ok(n);
    for (std::size_t i = 0; i < n; ++i) ok[i] = pred[i] == data.labels[i];
    return ok;
  };
  const auto percent = [n](const std::vector<char>& mask) {
    return 100.0 * static_cast<double>(std::count(mask.begin(), mask.end(), 1)) /
           static_cast<double>(n);
  };

  report.clean_accuracy = percent(correct_mask(data.inputs));
  for (std::size_t k = 0; k < attacks.size(); ++k) {
    const EvalAttack& a = attacks[k];
    Tensor x_adv;
    if (a.kind == AttackKind::kFgsm) {
      x_adv = fgsm(model, data.inputs, data.labels, a.config.epsilon, a.config.box);
    } else {
      Rng rng = make_rng(seed, {stream::kEval, 1000 + k});
      x_adv = pgd(model, data.inputs, data.labels, a.config, rng);
    }
    const auto ok = correct_mask(x_adv);
    for (std::size_t i = 0; i < n; ++i) robust_all[i] &= ok[i];
    report.robust_accuracy.push_back(percent(ok));
  }
  report.worst_case_accuracy = percent(robust_all);
  report.tradeoff = tradeoff_metric(report.clean_accuracy, report.worst_case_accuracy);
  return report;
}

double tradeoff_metric(double clean, double robust) {
  if (!(clean >= 0.0 && clean <= 100.0) || !(robust >= 0.0 && robust <= 100.0)) {
    throw ContractError("accuracies must lie in [0, 100]");
  }
  return clean + robust;
}

// ---------------------------------------------------------------------------
// Transferability matrix

const char* metric_name(ShiftMetric m) {
  return m == ShiftMetric::kKl ? "kl" : "l2";
}

ShiftMetric parse_metric(const std::string& name) {
  if (name == "kl") return ShiftMetric::kKl;
  if (name == "l2") return ShiftMetric::kL2;
  throw ContractError("unknown shift metric '" + name + "'");
}

double TransferMatrix::mean_diagonal() const {
  double s = 0.0;
  for (std::size_t t = 0; t < timesteps; ++t) s += at(t, t);
  return s / static_cast<double>(timesteps);
}

double TransferMatrix::mean_off_diagonal() const {
  if (timesteps < 2) return 0.0;
  double s = 0.0;
  for (std::size_t t = 0; t < timesteps; ++t)
    for (std::size_t m = 0; m < timesteps; ++m)
      if (t != m) s += at(t, m);
  return s / static_cast<double>(timesteps * (timesteps - 1));
}

double TransferMatrix::mean() const {
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

std::vector<double> TransferMatrix::mean_by_gap() const {
  std::vector<double> sum(timesteps, 0.0), count(timesteps, 0.0);
  for (std::size_t t = 0; t < timesteps; ++t)
    for (std::size_t m = 0; m < timesteps; ++m) {
      const std::size_t gap = t > m ? t - m : m - t;
      sum[gap] += at(t, m);
      count[gap] += 1.0;
    }
  for (std::size_t g = 0; g < timesteps; ++g) sum[g] /= count[g];
  return sum;
}

TransferMatrix transferability_matrix(const SnnModel& model,
                                      const Dataset& data,
                                      const TransferOptions& options) {
  RTE_REQUIRE(data.size() > 0, "transferability_matrix: empty dataset");
  const std::size_t T = model.lif.timesteps;

  Dataset eval = data;
  if (options.n_samples > 0 && options.n_samples < data.size()) {
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng pick = make_rng(options.seed, {stream::kTransfer, 0});
    std::shuffle(idx.begin(), idx.end(), pick);
    idx.resize(options.n_samples);
    std::sort(idx.begin(), idx.end());
    eval = data.subset(idx);
  }
  const std::size_t n = eval.size();

  AttackConfig attack;
  attack.epsilon = options.epsilon;
  attack.alpha = options.alpha;
  attack.steps = options.steps;
  attack.random_start = options.random_start;
  attack.box = options.box;
  attack.objective = options.metric == ShiftMetric::kKl
                         ? AttackObjective::kKlSubnet
                         : AttackObjective::kL2Subnet;

  const Tensor clean = predict_timesteps(model, eval.inputs);  // [T x n x C]
  const std::size_t C = model.classes();

  // Per-step softmax of a [T x n x C] block.
  const auto probs_of = [&](const Tensor& logits) {
    std::vector<std::vector<double>> p(T * n);
    for (std::size_t m = 0; m < T; ++m)
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = logits.data().subspan((m * n + i) * C, C);
        const ProbVector pv = softmax(row);
        p[m * n + i].assign(pv.values().begin(), pv.values().end());
      }
    return p;
  };
  const auto p_clean = probs_of(clean);

  TransferMatrix out;
  out.timesteps = T;
  out.values.assign(T * T, 0.0);
  out.metric = options.metric;
  out.epsilon = options.epsilon;
  out.steps = options.steps;
  out.n_samples = n;
  out.seed = options.seed;

  for (std::size_t t = 0; t < T; ++t) {
    Rng rng = make_rng(options.seed, {stream::kTransfer, 1 + t});
    const Tensor x_adv = subnet_pgd(model, eval.inputs, t, attack, rng);
    const auto p_adv = probs_of(predict_timesteps(model, x_adv));
    for (std::size_t m = 0; m < T; ++m) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& p = p_clean[m * n + i];
        const auto& q = p_adv[m * n + i];
        if (options.metric == ShiftMetric::kKl) {
          s += kl_divergence(ProbVector(p), ProbVector(q));
        } else {
          double d2 = 0.0;
          for (std::size_t c = 0; c < C; ++c) d2 += (p[c] - q[c]) * (p[c] - q[c]);
          s += std::sqrt(d2);
        }
      }
      out.values[t * T + m] = s / static_cast<double>(n);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss surface

namespace {

Tensor as_row(const Tensor& v, std::size_t features, const char* what) {
  if (v.size() != features || (v.rank() == 2 && v.dim(0) != 1) || v.rank() > 2) {
    throw DimensionError(std::string(what) + " must be a single input of " +
                         std::to_string(features) + " features, got " +
                         shape_string(v.shape()));
  }
  return Tensor({1, features}, v.values());
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SurfaceGrid loss_surface_grid(const SnnModel& model, const Tensor& x,
                              std::size_t y, const Tensor& dir1,
                              const Tensor& dir2, double extent,
                              std::size_t resolution) {
  RTE_REQUIRE(resolution >= 2, "loss_surface_grid: resolution must be >= 2");
  RTE_REQUIRE(extent >= 0.0, "loss_surface_grid: extent must be >= 0");
  RTE_REQUIRE(y < model.classes(), "loss_surface_grid: label out of range");
  const std::size_t d = model.input_features();
  const Tensor x0 = as_row(x, d, "x");
  const Tensor u = as_row(dir1, d, "dir1");
  const Tensor v = as_row(dir2, d, "dir2");
  const double nu = std::sqrt(dot(u, u)), nv = std::sqrt(dot(v, v));
  if (std::abs(dot(u, v)) > 1e-9 * std::max(1.0, nu * nv)) {
    throw ContractError("loss_surface_grid: directions are not orthogonal");
  }

  SurfaceGrid grid;
  for (std::size_t i = 0; i < resolution; ++i) {
    const double c = -extent + 2.0 * extent * static_cast<double>(i) /
                                   static_cast<double>(resolution - 1);
    grid.a.push_back(c);
    grid.b.push_back(c);
  }
  // Centre exactly zero for odd resolutions.
  if (resolution % 2 == 1) {
    grid.a[resolution / 2] = 0.0;
    grid.b[resolution / 2] = 0.0;
  }

  const std::size_t points = resolution * resolution;
  Tensor batch({points, d});
  for (std::size_t i = 0; i < resolution; ++i)
    for (std::size_t j = 0; j < resolution; ++j)
      for (std::size_t k = 0; k < d; ++k)
        batch.at(i * resolution + j, k) = x0[k] + grid.a[i] * u[k] + grid.b[j] * v[k];

  const Tensor logits = predict_logits(model, batch);
  const std::size_t C = model.classes();
  grid.values.resize(points);
  for (std::size_t r = 0; r < points; ++r) {
    const ProbVector p = softmax(logits.data().subspan(r * C, C));
    grid.values[r] = cross_entropy_onehot(p, y);
  }
  return grid;
}

std::pair<Tensor, Tensor> default_surface_directions(const SnnModel& model,
                                                     const Tensor& x,
                                                     std::size_t y,
                                                     std::uint64_t seed) {
  const std::size_t d = model.input_features();
  RTE_REQUIRE(d >= 2, "default_surface_directions: need at least 2 features");
  const Tensor x0 = as_row(x, d, "x");
  const std::size_t labels[] = {y};
  // fgsm with eps = 1 and an unbounded box yields x + sign(grad).
  const Tensor stepped = fgsm(model, x0, labels, 1.0, Box{-1e300, 1e300});
  Rng rng = make_rng(seed, {stream::kSurface});
  std::bernoulli_distribution coin(0.5);

  Tensor u({1, d});
  // Exact signs; stepped - x0 can round to 1 - ulp.
  for (std::size_t k = 0; k < d; ++k) {
    u[k] = stepped[k] > x0[k] ? 1.0 : (stepped[k] < x0[k] ? -1.0 : 0.0);
  }
  if (dot(u, u) == 0.0) {
    for (std::size_t k = 0; k < d; ++k) u[k] = coin(rng) ? 1.0 : -1.0;
  }
  Tensor v({1, d});
  double vv = 0.0;
  const double uu = dot(u, u);
  for (int attempt = 0; attempt < 64 && vv <= 1e-12 * uu; ++attempt) {
    for (std::size_t k = 0; k < d; ++k) v[k] = coin(rng) ? 1.0 : -1.0;
    const double proj = dot(u, v) / uu;
    for (std::size_t k = 0; k < d; ++k) v[k] -= proj * u[k];
    vv = dot(v, v);
  }
  RTE_REQUIRE(vv > 1e-12 * uu, "default_surface_directions: no orthogonal direction");
  const double s = std::sqrt(uu / vv);
  for (double& e : v.data()) e *= s;
  return {u, v};
}

// ---------------------------------------------------------------------------
// CSV

void write_csv(const std::filesystem::path& path, std::size_t rows,
               std::size_t cols, std::span<const double> values) {
  if (values.size() != rows * cols) {
    throw DimensionError("write_csv: " + std::to_string(values.size()) +
                         " values for " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << format_number(values[r * cols + c]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc()) {
        throw FormatError(path.string() + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace rte

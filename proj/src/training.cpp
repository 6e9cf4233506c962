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

#include "rte/training.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "rte/error.hpp"
#include "rte/random.hpp"

namespace rte {

const char* method_name(Method m) {
  switch (m) {
    case Method::kRte:
      return "rte";
    case Method::kAt:
      return "at";
    case Method::kTrades:
      return "trades";
    case Method::kClean:
      return "clean";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (auto m : {Method::kRte, Method::kAt, Method::kTrades, Method::kClean}) {
    if (name == method_name(m)) return m;
  }
  throw ContractError("unknown training method '" + name + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractError("epochs must be >= 1");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ContractError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ContractError("momentum must lie in [0, 1)");
  }
  if (!(gamma >= 0.0)) throw ContractError("gamma must be >= 0");
  if (!(grad_clip >= 0.0)) throw ContractError("grad_clip must be >= 0");
  if (!(kl_epsilon > 0.0)) throw ContractError("kl_epsilon must be > 0");
  attack.validate();
}

void sgd_step(std::span<Tensor* const> params, double learning_rate,
              double momentum, std::vector<std::vector<double>>& velocity) {
  if (velocity.size() != params.size()) {
    velocity.assign(params.size(), {});
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (!p.has_grad()) {
      throw ContractError("sgd_step: parameter " + std::to_string(i) +
                          " has no gradient");
    }
    auto g = p.grad();
    auto& v = velocity[i];
    if (v.size() != p.size()) v.assign(p.size(), 0.0);
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = momentum * v[j] + g[j];
      p[j] -= learning_rate * v[j];
    }
  }
}

double clip_grad_norm(std::span<Tensor* const> params, double max_norm) {
  double sq = 0.0;
  for (const Tensor* p : params) {
    for (double g : p->grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Tensor* p : params) {
      std::vector<double> g(p->grad().begin(), p->grad().end());
      for (double& v : g) v *= s;
      p->set_grad(std::move(g));
    }
  }
  return norm;
}

namespace {

struct Step {
  Tape& tape;
  std::span<const BoundLayer> params;
};

// Builds the loss on a fresh tape, backpropagates and applies one update.
template <typename BuildLoss>
double update(SnnModel& model, const TrainConfig& cfg, Sgd& opt,
              BuildLoss&& build_loss) {
  Tape tape;
  const auto bound = bind_parameters(tape, model, true);
  const Var loss = build_loss(Step{tape, bound});
  tape.backward(loss);

  std::vector<Tensor*> params = model.parameters();
  std::size_t k = 0;
  for (const BoundLayer& b : bound) {
    params[k++]->set_grad(tape.grad(b.weight).values());
    if (b.bias) params[k++]->set_grad(tape.grad(*b.bias).values());
  }
  clip_grad_norm(params, cfg.grad_clip);
  opt.step(params);
  for (Tensor* p : params) {
    p->clear_grad();
    if (!p->all_finite()) {
      throw ContractError("non-finite parameter after update");
    }
  }
  return loss.value().item();
}

template <typename PerBatch>
EpochStats run_epoch(const Dataset& data, const TrainConfig& cfg,
                     std::size_t epoch, PerBatch&& per_batch) {
  cfg.validate();
  RTE_REQUIRE(data.size() > 0, "training on an empty dataset");
  const auto batches =
      batch_iter(data, cfg.batch_size, derive_seed(cfg.seed, {stream::kShuffle, epoch}));
  EpochStats stats;
  double weighted = 0.0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    Rng rng = make_rng(cfg.seed, {stream::kBatch, epoch, b});
    const double loss = per_batch(batches[b], rng, stats);
    weighted += loss * static_cast<double>(batches[b].y.size());
  }
  stats.mean_loss = weighted / static_cast<double>(data.size());
  return stats;
}

void require_method(const TrainConfig& cfg, Method m) {
  if (cfg.method != m) {
    throw ContractError(std::string("train_epoch_") + method_name(m) +
                        " called with method " + method_name(cfg.method));
  }
}

}  // namespace

EpochStats train_epoch_rte(SnnModel& model, const Dataset& data,
                           const TrainConfig& cfg, std::size_t epoch,
                           Sgd& opt) {
  require_method(cfg, Method::kRte);
  const LossConfig loss_cfg{cfg.gamma, cfg.kl_epsilon, cfg.kl_direction};
  return run_epoch(data, cfg, epoch,
                   [&](const Batch& batch, Rng& rng, EpochStats& stats) {
    std::uniform_int_distribution<std::size_t> pick(0, model.lif.timesteps - 1);
    const std::size_t m = pick(rng);
    stats.sampled_timesteps.push_back(m);
    const Tensor x_adv = subnet_pgd(model, batch.x, m, cfg.attack, rng);
    return update(model, cfg, opt, [&](Step s) {
      const auto clean = forward_timesteps(model, s.params, s.tape.constant(batch.x));
      const auto adv = forward_timesteps(model, s.params, s.tape.constant(x_adv));
      return rte_loss(clean, adv, batch.y, loss_cfg);
    });
  });
}

EpochStats train_epoch_at(SnnModel& model, const Dataset& data,
                          const TrainConfig& cfg, std::size_t epoch, Sgd& opt) {
  require_method(cfg, Method::kAt);
  AttackConfig attack = cfg.attack;
  attack.objective = AttackObjective::kCeAggregate;
  return run_epoch(data, cfg, epoch,
                   [&](const Batch& batch, Rng& rng, EpochStats&) {
    const Tensor x_adv = pgd(model, batch.x, batch.y, attack, rng);
    return update(model, cfg, opt, [&](Step s) {
      const auto adv = forward_timesteps(model, s.params, s.tape.constant(x_adv));
      return tet_ce_loss(adv, batch.y, cfg.kl_epsilon);
    });
  });
}

EpochStats train_epoch_trades(SnnModel& model, const Dataset& data,
                              const TrainConfig& cfg, std::size_t epoch,
                              Sgd& opt) {
  require_method(cfg, Method::kTrades);
  AttackConfig attack = cfg.attack;
  attack.objective = AttackObjective::kKlAggregate;
  return run_epoch(data, cfg, epoch,
                   [&](const Batch& batch, Rng& rng, EpochStats&) {
    const Tensor x_adv = pgd(model, batch.x, batch.y, attack, rng);
    return update(model, cfg, opt, [&](Step s) {
      const auto clean = forward_timesteps(model, s.params, s.tape.constant(batch.x));
      const auto adv = forward_timesteps(model, s.params, s.tape.constant(x_adv));
      return trades_loss(clean, adv, batch.y, cfg.gamma, cfg.kl_epsilon);
    });
  });
}

EpochStats train_epoch_clean(SnnModel& model, const Dataset& data,
                             const TrainConfig& cfg, std::size_t epoch,
                             Sgd& opt) {
  require_method(cfg, Method::kClean);
  return run_epoch(data, cfg, epoch,
                   [&](const Batch& batch, Rng&, EpochStats&) {
    return update(model, cfg, opt, [&](Step s) {
      const auto clean = forward_timesteps(model, s.params, s.tape.constant(batch.x));
      return tet_ce_loss(clean, batch.y, cfg.kl_epsilon);
    });
  });
}

EpochStats train_epoch(SnnModel& model, const Dataset& data,
                       const TrainConfig& cfg, std::size_t epoch, Sgd& opt) {
  switch (cfg.method) {
    case Method::kRte:
      return train_epoch_rte(model, data, cfg, epoch, opt);
    case Method::kAt:
      return train_epoch_at(model, data, cfg, epoch, opt);
    case Method::kTrades:
      return train_epoch_trades(model, data, cfg, epoch, opt);
    case Method::kClean:
      return train_epoch_clean(model, data, cfg, epoch, opt);
  }
  throw ContractError("unhandled training method");
}

namespace {

constexpr std::size_t kEvalBatch = 256;

std::size_t count_correct(const SnnModel& model, const Tensor& x,
                          std::span<const std::size_t> y) {
  const auto pred = predict_classes(model, x);
  std::size_t c = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) c += pred[i] == y[i];
  return c;
}

}  // namespace

double clean_accuracy(const SnnModel& model, const Dataset& data) {
  RTE_REQUIRE(data.size() > 0, "accuracy of an empty dataset");
  std::size_t correct = 0;
  for (const Batch& b : sequential_batches(data, kEvalBatch)) {
    correct += count_correct(model, b.x, b.y);
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
}

double pgd_accuracy(const SnnModel& model, const Dataset& data, double epsilon,
                    std::size_t steps, std::uint64_t seed) {
  RTE_REQUIRE(data.size() > 0, "accuracy of an empty dataset");
  if (steps == 0) return clean_accuracy(model, data);
  AttackConfig attack;
  attack.epsilon = epsilon;
  attack.steps = steps;
  attack.alpha = epsilon > 0.0 ? 2.5 * epsilon / static_cast<double>(steps) : 1.0;
  attack.random_start = true;
  attack.objective = AttackObjective::kCeAggregate;
  std::size_t correct = 0;
  const auto batches = sequential_batches(data, kEvalBatch);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    Rng rng = make_rng(seed, {stream::kEval, b});
    const Tensor x_adv = pgd(model, batches[b].x, batches[b].y, attack, rng);
    correct += count_correct(model, x_adv, batches[b].y);
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainReport train(SnnModel& model, const Dataset& data, const Dataset& eval,
                  const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  model.validate();
  Sgd opt(cfg.learning_rate, cfg.momentum);
  TrainReport report;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.cosine_decay) {
      opt.set_learning_rate(cfg.learning_rate * 0.5 *
                            (1.0 + std::cos(std::numbers::pi * static_cast<double>(e) /
                                            static_cast<double>(cfg.epochs))));
    }
    const EpochStats stats = train_epoch(model, data, cfg, e, opt);
    EpochRecord rec;
    rec.epoch = e + 1;
    rec.mean_loss = stats.mean_loss;
    rec.clean_accuracy = clean_accuracy(model, eval);
    rec.robust_accuracy =
        cfg.eval_steps == 0
            ? rec.clean_accuracy
            : pgd_accuracy(model, eval, cfg.attack.epsilon, cfg.eval_steps,
                           derive_seed(cfg.seed, {stream::kEval, e}));
    rec.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return report;
}

}  // namespace rte

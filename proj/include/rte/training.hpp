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

#ifndef RTE_TRAINING_HPP_
#define RTE_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rte/attacks.hpp"
#include "rte/data.hpp"
#include "rte/objectives.hpp"
#include "rte/snn.hpp"

namespace rte {

enum class Method { kRte, kAt, kTrades, kClean };

const char* method_name(Method m);
Method parse_method(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  // RTE regularization weight; TRADES uses it as beta.
  double gamma = 6.0;
  AttackConfig attack;
  std::uint64_t seed = 0;
  Method method = Method::kRte;
  // Global-norm gradient clip; 0 disables.
  double grad_clip = 5.0;
  bool cosine_decay = false;
  double kl_epsilon = kDefaultKlEpsilon;
  KlDirection kl_direction = KlDirection::kRefFirst;
  // PGD iterations for the per-epoch robust accuracy (0 skips it).
  std::size_t eval_steps = 10;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double clean_accuracy = 0.0;
  double robust_accuracy = 0.0;
  double mean_loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::string checkpoint_path;
};

// Plain SGD with heavy-ball momentum:
//   velocity <- momentum * velocity + grad;  param <- param - lr * velocity.
// Every parameter must carry a gradient.
void sgd_step(std::span<Tensor* const> params, double learning_rate,
              double momentum, std::vector<std::vector<double>>& velocity);

class Sgd {
 public:
  Sgd(double learning_rate, double momentum)
      : learning_rate_(learning_rate), momentum_(momentum) {}

  void step(std::span<Tensor* const> params) {
    sgd_step(params, learning_rate_, momentum_, velocity_);
  }
  void set_learning_rate(double lr) { learning_rate_ = lr; }
  double learning_rate() const { return learning_rate_; }

 private:
  double learning_rate_;
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

// Rescales all gradients so their joint l2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(std::span<Tensor* const> params, double max_norm);

struct EpochStats {
  double mean_loss = 0.0;
  // Sub-network index drawn for each batch (RTE only).
  std::vector<std::size_t> sampled_timesteps;
};

// One pass over the data with the method named in cfg. `epoch` is 0-based
// and, together with cfg.seed and the batch index, fixes every random draw.
EpochStats train_epoch(SnnModel& model, const Dataset& data,
                       const TrainConfig& cfg, std::size_t epoch, Sgd& opt);

// Per-method entry points; each requires cfg.method to match.
EpochStats train_epoch_rte(SnnModel& model, const Dataset& data,
                           const TrainConfig& cfg, std::size_t epoch, Sgd& opt);
EpochStats train_epoch_at(SnnModel& model, const Dataset& data,
                          const TrainConfig& cfg, std::size_t epoch, Sgd& opt);
EpochStats train_epoch_trades(SnnModel& model, const Dataset& data,
                              const TrainConfig& cfg, std::size_t epoch,
                              Sgd& opt);
EpochStats train_epoch_clean(SnnModel& model, const Dataset& data,
                             const TrainConfig& cfg, std::size_t epoch,
                             Sgd& opt);

// Accuracy (percent) of the time-aggregated prediction.
double clean_accuracy(const SnnModel& model, const Dataset& data);

// Accuracy (percent) under PGD-k on the aggregated CE, step 2.5 eps / k,
// random start. k = 0 returns clean accuracy.
double pgd_accuracy(const SnnModel& model, const Dataset& data, double epsilon,
                    std::size_t steps, std::uint64_t seed);

// Runs cfg.epochs epochs, evaluating on `eval` after each one.
TrainReport train(SnnModel& model, const Dataset& data, const Dataset& eval,
                  const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace rte

#endif  // RTE_TRAINING_HPP_

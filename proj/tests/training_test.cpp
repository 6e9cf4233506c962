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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rte/data.hpp"
#include "rte/error.hpp"
#include "rte/training.hpp"

namespace rte {
namespace {

SnnModel blob_model(std::size_t T = 4, std::uint64_t seed = 0) {
  LifConfig lif;
  lif.timesteps = T;
  const std::size_t widths[] = {2, 16, 2};
  return SnnModel::create(widths, lif, {}, true, seed);
}

Dataset blobs(std::size_t n = 96, std::uint64_t seed = 0) {
  return synth_blobs(n, 2, 2, 0.1, seed);
}

TrainConfig quick(Method method) {
  TrainConfig cfg;
  cfg.method = method;
  cfg.epochs = 5;
  cfg.batch_size = 16;
  cfg.eval_steps = 0;
  cfg.attack.steps = 3;
  return cfg;
}

std::vector<Tensor> snapshot(SnnModel& m) {
  std::vector<Tensor> out;
  for (Tensor* p : m.parameters()) out.push_back(*p);
  return out;
}

TEST(SgdTest, PlainStep) {
  Tensor p({1}, {1.0});
  p.set_grad({0.2});
  Tensor* params[] = {&p};
  Sgd opt(1.0, 0.0);
  opt.step(params);
  EXPECT_DOUBLE_EQ(p[0], 0.8);
}

TEST(SgdTest, ZeroGradientLeavesParameter) {
  Tensor p({3}, {0.1, -2.0, 5.0});
  p.set_grad({0.0, 0.0, 0.0});
  Tensor* params[] = {&p};
  Sgd opt(0.5, 0.9);
  opt.step(params);
  EXPECT_EQ(p, Tensor({3}, {0.1, -2.0, 5.0}));
}

TEST(SgdTest, MomentumRecursion) {
  // v1 = g1, p1 = p0 - lr v1; v2 = 0.9 v1 + g2, p2 = p1 - lr v2.
  Tensor p({1}, {1.0});
  Tensor* params[] = {&p};
  Sgd opt(0.1, 0.9);
  p.set_grad({0.5});
  opt.step(params);
  EXPECT_DOUBLE_EQ(p[0], 1.0 - 0.1 * 0.5);
  p.set_grad({-0.2});
  opt.step(params);
  EXPECT_DOUBLE_EQ(p[0], 1.0 - 0.1 * 0.5 - 0.1 * (0.9 * 0.5 - 0.2));
}

TEST(SgdTest, MissingGradientThrows) {
  Tensor p({1}, {1.0});
  Tensor* params[] = {&p};
  Sgd opt(0.1, 0.9);
  EXPECT_THROW(opt.step(params), ContractError);
}

TEST(ClipTest, GlobalNorm) {
  Tensor a({1}, {0.0}), b({1}, {0.0});
  a.set_grad({3.0});
  b.set_grad({4.0});
  Tensor* params[] = {&a, &b};
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 1.0), 5.0);
  EXPECT_NEAR(a.grad()[0], 0.6, 1e-15);
  EXPECT_NEAR(b.grad()[0], 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 10.0), 1.0);
  EXPECT_NEAR(a.grad()[0], 0.6, 1e-15);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = TrainConfig{};
  cfg.gamma = -1.0;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ContractError);
  EXPECT_EQ(parse_method("trades"), Method::kTrades);
  EXPECT_THROW(parse_method("fast"), ContractError);
}

// With no regularizer and no perturbation the robust objectives reduce to
// plain temporal CE, update for update.
TEST(ReductionTest, RteWithoutPerturbationOrRegularizerIsClean) {
  const Dataset data = blobs();
  TrainConfig rte = quick(Method::kRte);
  rte.gamma = 0.0;
  rte.attack.epsilon = 0.0;
  TrainConfig clean = rte;
  clean.method = Method::kClean;
  SnnModel a = blob_model(), b = blob_model();
  Sgd oa(rte.learning_rate, rte.momentum), ob(clean.learning_rate, clean.momentum);
  for (std::size_t e = 0; e < 3; ++e) {
    const auto sa = train_epoch(a, data, rte, e, oa);
    const auto sb = train_epoch(b, data, clean, e, ob);
    EXPECT_EQ(sa.mean_loss, sb.mean_loss);
  }
  EXPECT_EQ(snapshot(a), snapshot(b));
}

TEST(ReductionTest, AtWithoutPerturbationIsClean) {
  const Dataset data = blobs();
  TrainConfig at = quick(Method::kAt);
  at.attack.epsilon = 0.0;
  TrainConfig clean = at;
  clean.method = Method::kClean;
  SnnModel a = blob_model(), b = blob_model();
  Sgd oa(at.learning_rate, at.momentum), ob(clean.learning_rate, clean.momentum);
  for (std::size_t e = 0; e < 2; ++e) {
    train_epoch(a, data, at, e, oa);
    train_epoch(b, data, clean, e, ob);
  }
  EXPECT_EQ(snapshot(a), snapshot(b));
}

// TRADES keeps CE on the aggregated output, so with beta = 0 the adversarial
// branch carries no weight and the attack budget cannot change training.
TEST(ReductionTest, TradesWithoutRegularizerIgnoresAttack) {
  const Dataset data = blobs();
  TrainConfig attacked = quick(Method::kTrades);
  attacked.gamma = 0.0;
  attacked.attack.epsilon = 0.1;
  TrainConfig unattacked = attacked;
  unattacked.attack.epsilon = 0.0;
  SnnModel a = blob_model(), b = blob_model();
  Sgd oa(0.05, 0.9), ob(0.05, 0.9);
  for (std::size_t e = 0; e < 2; ++e) {
    const auto sa = train_epoch(a, data, attacked, e, oa);
    const auto sb = train_epoch(b, data, unattacked, e, ob);
    EXPECT_EQ(sa.mean_loss, sb.mean_loss);
  }
  EXPECT_EQ(snapshot(a), snapshot(b));
}

TEST(SubnetSamplingTest, SingleTimestepAlwaysZero) {
  const Dataset data = blobs(40);
  TrainConfig cfg = quick(Method::kRte);
  cfg.batch_size = 4;
  SnnModel m = blob_model(1);
  Sgd opt(cfg.learning_rate, cfg.momentum);
  const auto stats = train_epoch(m, data, cfg, 0, opt);
  ASSERT_EQ(stats.sampled_timesteps.size(), 10u);
  for (std::size_t t : stats.sampled_timesteps) EXPECT_EQ(t, 0u);
}

TEST(SubnetSamplingTest, UniformOverTimesteps) {
  const Dataset data = blobs(500);
  TrainConfig cfg = quick(Method::kRte);
  cfg.batch_size = 1;
  cfg.attack.steps = 1;
  SnnModel m = blob_model(4);
  Sgd opt(cfg.learning_rate, cfg.momentum);
  std::vector<double> count(4, 0.0);
  double total = 0.0;
  for (std::size_t e = 0; e < 2; ++e) {
    for (std::size_t t : train_epoch(m, data, cfg, e, opt).sampled_timesteps) {
      ASSERT_LT(t, 4u);
      count[t] += 1.0;
      total += 1.0;
    }
  }
  for (double c : count) EXPECT_NEAR(100.0 * c / total, 25.0, 5.0);
}

TEST(TrainTest, LossDecreasesForEveryMethod) {
  const Dataset data = blobs(160);
  for (Method method : {Method::kRte, Method::kAt, Method::kTrades, Method::kClean}) {
    SnnModel m = blob_model();
    const TrainReport r = train(m, data, data, quick(method));
    ASSERT_EQ(r.epochs.size(), 5u);
    EXPECT_LT(r.epochs[4].mean_loss, r.epochs[0].mean_loss) << method_name(method);
  }
}

TEST(TrainTest, ReproducibleAndSeedSensitive) {
  const Dataset data = blobs();
  TrainConfig cfg = quick(Method::kRte);
  cfg.epochs = 3;
  cfg.eval_steps = 2;
  SnnModel a = blob_model(), b = blob_model(), c = blob_model();
  const TrainReport ra = train(a, data, data, cfg);
  const TrainReport rb = train(b, data, data, cfg);
  cfg.seed = 1;
  train(c, data, data, cfg);
  EXPECT_EQ(snapshot(a), snapshot(b));
  EXPECT_FALSE(snapshot(a) == snapshot(c));
  for (std::size_t e = 0; e < ra.epochs.size(); ++e) {
    EXPECT_EQ(ra.epochs[e].mean_loss, rb.epochs[e].mean_loss);
    EXPECT_EQ(ra.epochs[e].clean_accuracy, rb.epochs[e].clean_accuracy);
    EXPECT_EQ(ra.epochs[e].robust_accuracy, rb.epochs[e].robust_accuracy);
  }
}

TEST(TrainTest, FiniteParametersAndRecords) {
  const Dataset data = blobs();
  for (Method method : {Method::kRte, Method::kAt, Method::kTrades, Method::kClean}) {
    SnnModel m = blob_model();
    TrainConfig cfg = quick(method);
    cfg.learning_rate = 0.5;
    cfg.eval_steps = 3;
    const TrainReport r = train(m, data, data, cfg);
    for (const Tensor* p : std::as_const(m).parameters()) EXPECT_TRUE(p->all_finite());
    for (const EpochRecord& rec : r.epochs) {
      EXPECT_TRUE(std::isfinite(rec.mean_loss));
      EXPECT_GE(rec.clean_accuracy, 0.0);
      EXPECT_LE(rec.clean_accuracy, 100.0);
      EXPECT_GE(rec.robust_accuracy, 0.0);
      EXPECT_LE(rec.robust_accuracy, 100.0);
    }
  }
}

TEST(TrainTest, MethodMismatchThrows) {
  const Dataset data = blobs(16);
  SnnModel m = blob_model();
  Sgd opt(0.1, 0.9);
  const TrainConfig cfg = quick(Method::kAt);
  EXPECT_THROW(train_epoch_rte(m, data, cfg, 0, opt), ContractError);
  EXPECT_THROW(train_epoch_trades(m, data, cfg, 0, opt), ContractError);
  EXPECT_NO_THROW(train_epoch_at(m, data, cfg, 0, opt));
}

TEST(AccuracyTest, ZeroBudgetMatchesClean) {
  const Dataset data = blobs();
  SnnModel m = blob_model();
  train(m, data, data, quick(Method::kClean));
  EXPECT_EQ(pgd_accuracy(m, data, 0.0, 10, 3), clean_accuracy(m, data));
  EXPECT_EQ(pgd_accuracy(m, data, 0.05, 0, 3), clean_accuracy(m, data));
  EXPECT_LE(pgd_accuracy(m, data, 0.2, 10, 3), clean_accuracy(m, data));
}

}  // namespace
}  // namespace rte

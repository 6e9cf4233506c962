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

#include "oracles.hpp"
#include "rte/error.hpp"
#include "rte/objectives.hpp"
#include "rte/snn.hpp"
#include "test_support.hpp"

namespace rte {
namespace {

using testing::random_tensor;

// Per-step logits as tape constants.
std::vector<Var> slices(Tape& tape, const std::vector<Tensor>& t) {
  std::vector<Var> out;
  for (const Tensor& s : t) out.push_back(tape.constant(s));
  return out;
}

// Logits whose softmax is exactly p (up to rounding).
Tensor log_row(std::vector<double> p) {
  for (double& v : p) v = std::log(v);
  const std::size_t n = p.size();
  return Tensor::matrix(1, n, std::move(p));
}

double direct_ce(const Tensor& logits, std::size_t r, std::size_t y) {
  oracle::Vec z;
  for (std::size_t c = 0; c < logits.dim(1); ++c) z.push_back(logits.at(r, c));
  return -std::log(oracle::softmax(z)[y]);
}

TEST(SoftmaxTest, KnownValues) {
  const double zero[] = {0.0, 0.0};
  const ProbVector a = softmax(zero);
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], 0.5);
  const double ln2[] = {std::log(2.0), 0.0};
  const ProbVector b = softmax(ln2);
  EXPECT_NEAR(b[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(b[1], 1.0 / 3.0, 1e-15);
}

TEST(SoftmaxTest, ShiftInvariance) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Tensor z = random_tensor({6}, rng, -20.0, 20.0);
    std::vector<double> shifted = z.values();
    for (double& v : shifted) v += 37.5;
    const ProbVector p = softmax(z.data()), q = softmax(shifted);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(p[k], q[k], 1e-12);
  }
}

TEST(ProbVectorTest, Validation) {
  EXPECT_THROW(ProbVector({0.5, 0.6}), ContractError);
  EXPECT_THROW(ProbVector({-0.1, 1.1}), ContractError);
  EXPECT_NO_THROW(ProbVector({0.25, 0.75}));
}

TEST(CrossEntropyTest, KnownValues) {
  EXPECT_EQ(cross_entropy_onehot(ProbVector({1.0, 0.0}), 0), 0.0);
  EXPECT_NEAR(cross_entropy_onehot(ProbVector({0.5, 0.5}), 0), 0.693147, 1e-6);
  EXPECT_DOUBLE_EQ(cross_entropy_onehot(ProbVector({1.0, 0.0}), 1), -std::log(1e-12));
  EXPECT_THROW(cross_entropy_onehot(ProbVector({1.0, 0.0}), 2), ContractError);
}

TEST(KlTest, KnownValues) {
  const ProbVector p({0.3, 0.7});
  EXPECT_EQ(kl_divergence(p, p), 0.0);
  EXPECT_NEAR(kl_divergence(ProbVector({1.0, 0.0}), ProbVector({0.5, 0.5})),
              0.693147, 1e-6);
}

TEST(KlTest, Asymmetry) {
  const ProbVector a({0.9, 0.1}), b({0.5, 0.5});
  const double ab = kl_divergence(a, b), ba = kl_divergence(b, a);
  // 0.9 ln 1.8 + 0.1 ln 0.2 and 0.5 ln(5/9) + 0.5 ln 5.
  EXPECT_NEAR(ab, 0.9 * std::log(1.8) + 0.1 * std::log(0.2), 1e-15);
  EXPECT_NEAR(ba, 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(5.0), 1e-15);
  EXPECT_NEAR(ab, 0.368, 5e-4);
  EXPECT_NEAR(ba, 0.511, 5e-4);
  EXPECT_NE(ab, ba);
}

TEST(KlTest, ClampKeepsValueFinite) {
  const double v = kl_divergence(ProbVector({0.5, 0.5}), ProbVector({1.0, 0.0}));
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 0.5 * std::log(0.5) + 0.5 * std::log(0.5 / 1e-12), 1e-12);
}

TEST(KlTest, LengthMismatch) {
  EXPECT_THROW(kl_divergence(ProbVector({1.0}), ProbVector({0.5, 0.5})), DimensionError);
}

TEST(KlTest, DirectionNames) {
  for (KlDirection d : {KlDirection::kRefFirst, KlDirection::kAdvFirst}) {
    EXPECT_EQ(parse_kl_direction(kl_direction_name(d)), d);
  }
  EXPECT_THROW(parse_kl_direction("sideways"), ContractError);
}

TEST(LossConfigTest, Validation) {
  EXPECT_THROW((LossConfig{-1.0}.validate()), ContractError);
  EXPECT_THROW((LossConfig{1.0, 0.0}.validate()), ContractError);
  EXPECT_NO_THROW((LossConfig{0.0}.validate()));
}

TEST(TetLossTest, SingleStepIsPlainCe) {
  std::mt19937_64 rng(2);
  const Tensor z = random_tensor({4, 3}, rng, -3, 3);
  const std::size_t y[] = {0, 2, 1, 1};
  Tape tape;
  const double got = tet_ce_loss(slices(tape, {z}), y).value().item();
  double want = 0.0;
  for (std::size_t r = 0; r < 4; ++r) want += direct_ce(z, r, y[r]);
  EXPECT_NEAR(got, want / 4.0, 1e-12);
  EXPECT_NEAR(tet_ce_loss(slices(tape, {z, z, z}), y).value().item(), got, 1e-12);
}

TEST(TetLossTest, MatchesDirectSum) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tensor> zs;
    for (int t = 0; t < 5; ++t) zs.push_back(random_tensor({3, 4}, rng, -4, 4));
    const std::size_t y[] = {3, 0, 1};
    Tape tape;
    double want = 0.0;
    for (const Tensor& z : zs)
      for (std::size_t r = 0; r < 3; ++r) want += direct_ce(z, r, y[r]);
    EXPECT_NEAR(tet_ce_loss(slices(tape, zs), y).value().item(), want / 15.0, 1e-12);
  }
}

TEST(RteLossTest, ZeroGammaIsTet) {
  std::mt19937_64 rng(4);
  std::vector<Tensor> c, a;
  for (int t = 0; t < 3; ++t) {
    c.push_back(random_tensor({2, 3}, rng, -2, 2));
    a.push_back(random_tensor({2, 3}, rng, -2, 2));
  }
  const std::size_t y[] = {1, 2};
  Tape tape;
  const auto cv = slices(tape, c), av = slices(tape, a);
  EXPECT_EQ(rte_loss(cv, av, y, LossConfig{0.0}).value().item(),
            tet_ce_loss(cv, y).value().item());
  EXPECT_EQ(rte_loss(cv, cv, y, LossConfig{5.0}).value().item(),
            tet_ce_loss(cv, y).value().item());
  EXPECT_EQ(rte_regularizer(cv, cv, LossConfig{5.0}).value().item(), 0.0);
}

TEST(RteLossTest, TwoStepHandValue) {
  Tape tape;
  const auto clean = slices(tape, {log_row({0.7, 0.3}), log_row({0.6, 0.4})});
  const auto adv = slices(tape, {log_row({0.5, 0.5}), log_row({0.6, 0.4})});
  const std::size_t y[] = {0};
  const double kl1 = 0.7 * std::log(0.7 / 0.5) + 0.3 * std::log(0.3 / 0.5);
  const double want = 0.5 * ((-std::log(0.7) + kl1) + (-std::log(0.6) + 0.0));
  EXPECT_NEAR(rte_loss(clean, adv, y, LossConfig{1.0}).value().item(), want, 1e-12);
}

TEST(RteLossTest, DirectionSwitch) {
  Tape tape;
  const auto clean = slices(tape, {log_row({0.9, 0.1})});
  const auto adv = slices(tape, {log_row({0.5, 0.5})});
  const LossConfig ref{1.0, kDefaultKlEpsilon, KlDirection::kRefFirst};
  const LossConfig rev{1.0, kDefaultKlEpsilon, KlDirection::kAdvFirst};
  EXPECT_NEAR(rte_regularizer(clean, adv, ref).value().item(),
              oracle::kl({0.9, 0.1}, {0.5, 0.5}), 1e-12);
  EXPECT_NEAR(rte_regularizer(clean, adv, rev).value().item(),
              oracle::kl({0.5, 0.5}, {0.9, 0.1}), 1e-12);
}

TEST(RteLossTest, NonNegative) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Tensor> c, a;
    for (int t = 0; t < 4; ++t) {
      c.push_back(random_tensor({3, 3}, rng, -10, 10));
      a.push_back(random_tensor({3, 3}, rng, -10, 10));
    }
    const std::size_t y[] = {0, 1, 2};
    Tape tape;
    EXPECT_GE(rte_loss(slices(tape, c), slices(tape, a), y, LossConfig{3.0}).value().item(), 0.0);
  }
}

TEST(RteLossTest, GradientWrtLogits) {
  std::mt19937_64 rng(6);
  std::vector<Tensor> c0, a0;
  for (int t = 0; t < 3; ++t) {
    c0.push_back(random_tensor({2, 3}, rng, -2, 2));
    a0.push_back(random_tensor({2, 3}, rng, -2, 2));
  }
  const std::size_t y[] = {2, 0};
  const LossConfig cfg{1.5};
  Tape tape;
  std::vector<Var> cv, av;
  for (const Tensor& t : c0) cv.push_back(tape.leaf(t));
  for (const Tensor& t : a0) av.push_back(tape.leaf(t));
  tape.backward(rte_loss(cv, av, y, cfg));
  for (std::size_t which = 0; which < 6; ++which) {
    const bool is_clean = which < 3;
    const std::size_t t = which % 3;
    const auto f = [&](const Tensor& probe) {
      auto c = c0, a = a0;
      (is_clean ? c : a)[t] = probe;
      Tape tp;
      return rte_loss(slices(tp, c), slices(tp, a), y, cfg).value().item();
    };
    const auto num = testing::numeric_gradient(f, (is_clean ? c0 : a0)[t]);
    const Tensor g = tape.grad(is_clean ? cv[t] : av[t]);
    for (std::size_t i = 0; i < num.size(); ++i) EXPECT_NEAR(g[i], num[i], 1e-6);
  }
}

TEST(TradesLossTest, Reductions) {
  std::mt19937_64 rng(7);
  std::vector<Tensor> c, a;
  for (int t = 0; t < 3; ++t) {
    c.push_back(random_tensor({2, 2}, rng, -2, 2));
    a.push_back(random_tensor({2, 2}, rng, -2, 2));
  }
  const std::size_t y[] = {1, 0};
  Tape tape;
  const auto cv = slices(tape, c), av = slices(tape, a);
  const Tensor agg = aggregate_output(Tensor({3, 2, 2}, [&] {
    std::vector<double> d;
    for (const Tensor& s : c) d.insert(d.end(), s.values().begin(), s.values().end());
    return d;
  }()));
  const double ce = (direct_ce(agg, 0, 1) + direct_ce(agg, 1, 0)) / 2.0;
  EXPECT_NEAR(trades_loss(cv, av, y, 0.0).value().item(), ce, 1e-12);
  EXPECT_NEAR(trades_loss(cv, cv, y, 4.0).value().item(), ce, 1e-12);
}

TEST(TradesLossTest, HandTwoClassCase) {
  // Single step so the aggregate is the slice itself.
  Tape tape;
  const auto clean = slices(tape, {log_row({0.8, 0.2})});
  const auto adv = slices(tape, {log_row({0.4, 0.6})});
  const std::size_t y[] = {1};
  const double want = -std::log(0.2) +
                      2.0 * (0.8 * std::log(0.8 / 0.4) + 0.2 * std::log(0.2 / 0.6));
  EXPECT_NEAR(trades_loss(clean, adv, y, 2.0).value().item(), want, 1e-12);
}

// Exact inequalities, on random instances (the acceptance runner repeats
// these at a larger count).
TEST(InequalityTest, Pinsker) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    const ProbVector p = softmax(random_tensor({5}, rng, -6, 6).data());
    const ProbVector q = softmax(random_tensor({5}, rng, -6, 6).data());
    double l1 = 0.0;
    for (std::size_t k = 0; k < 5; ++k) l1 += std::abs(p[k] - q[k]);
    EXPECT_LE(0.5 * l1 * l1, kl_divergence(p, q) + 1e-12);
  }
}

TEST(InequalityTest, AggregateCeBoundedByMeanCe) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 2000; ++i) {
    std::vector<Tensor> zs;
    for (int t = 0; t < 4; ++t) zs.push_back(random_tensor({1, 3}, rng, -5, 5));
    const std::size_t y[] = {static_cast<std::size_t>(i % 3)};
    Tape tape;
    const auto v = slices(tape, zs);
    const Tensor agg = aggregate_output(v).value();
    EXPECT_LE(direct_ce(agg, 0, y[0]), tet_ce_loss(v, y).value().item() + 1e-12);
  }
}

}  // namespace
}  // namespace rte

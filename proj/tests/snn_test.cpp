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

#include <sstream>

#include "gradient_check.hpp"
#include "oracles.hpp"
#include "rte/error.hpp"
#include "rte/snn.hpp"
#include "test_support.hpp"

namespace rte {
namespace {

using testing::random_tensor;
using testing::to_oracle;

SnnModel make_model(std::vector<std::size_t> widths, std::size_t T,
                    std::uint64_t seed, bool readout_bias = true) {
  LifConfig lif;
  lif.timesteps = T;
  return SnnModel::create(widths, lif, {}, readout_bias, seed);
}

// Drives one neuron through lif_step with a constant raw input.
std::pair<std::vector<double>, std::vector<double>> run_single_neuron(
    double leak, double v_th, const std::vector<double>& raw) {
  SnnModel model = make_model({1, 1, 1}, raw.size(), 0);
  LifConfig cfg = model.lif;
  cfg.leak = leak;
  cfg.threshold = v_th;
  Tape tape;
  LayerState state = reset_state(tape, model, 1);
  std::vector<double> v, s;
  for (double c : raw) {
    const Var spikes =
        lif_step(state, 0, tape.constant(Tensor::matrix(1, 1, {c})), cfg);
    v.push_back(state.membrane[0].value().item());
    s.push_back(spikes.value().item());
  }
  return {v, s};
}

TEST(LifConfigTest, Validation) {
  LifConfig ok;
  EXPECT_NO_THROW(ok.validate());
  for (LifConfig bad : {LifConfig{0.0, 0.5, 4}, LifConfig{1.5, 0.5, 4},
                        LifConfig{0.5, 0.0, 4}, LifConfig{0.5, 0.5, 0}}) {
    EXPECT_THROW(bad.validate(), ContractError);
  }
  EXPECT_NO_THROW((LifConfig{1.0, 0.5, 4}.validate()));
}

TEST(SnnModelTest, LayerDimensionsChain) {
  const SnnModel m = make_model({2, 16, 8, 3}, 4, 1);
  EXPECT_EQ(m.widths(), (std::vector<std::size_t>{2, 16, 8, 3}));
  EXPECT_EQ(m.hidden_layers(), 2u);
  EXPECT_EQ(m.input_features(), 2u);
  EXPECT_EQ(m.classes(), 3u);
  SnnModel broken = m;
  broken.layers[1].weight = Tensor({15, 8});
  EXPECT_THROW(broken.validate(), DimensionError);
}

TEST(SnnModelTest, CreateIsSeeded) {
  const SnnModel a = make_model({2, 8, 2}, 4, 9);
  const SnnModel b = make_model({2, 8, 2}, 4, 9);
  const SnnModel c = make_model({2, 8, 2}, 4, 10);
  EXPECT_EQ(a.layers[0].weight, b.layers[0].weight);
  EXPECT_FALSE(a.layers[0].weight == c.layers[0].weight);
  EXPECT_FALSE(make_model({2, 8, 2}, 4, 9, false).layers.back().bias.has_value());
}

TEST(ResetStateTest, AllZeros) {
  const SnnModel m = make_model({3, 5, 4, 2}, 4, 0);
  Tape tape;
  const LayerState s1 = reset_state(tape, m, 4);
  const LayerState s2 = reset_state(tape, m, 4);
  ASSERT_EQ(s1.membrane.size(), 2u);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(s1.membrane[l].value(), Tensor({4, m.widths()[l + 1]}));
    EXPECT_EQ(s1.spikes[l].value(), Tensor({4, m.widths()[l + 1]}));
    EXPECT_EQ(s1.membrane[l].value(), s2.membrane[l].value());
  }
}

TEST(LifStepTest, HandRecurrence) {
  // (1 - leak) * c = 0.3 every step.
  const auto [v, s] = run_single_neuron(0.5, 0.5, {0.6, 0.6, 0.6, 0.6});
  EXPECT_NEAR(v[0], 0.3, 1e-12);
  EXPECT_NEAR(v[1], 0.45, 1e-12);
  EXPECT_NEAR(v[2], 0.525, 1e-12);
  EXPECT_NEAR(v[3], 0.3, 1e-12);  // reset after the spike
  EXPECT_EQ(s, (std::vector<double>{0, 0, 1, 0}));
}

TEST(LifStepTest, ZeroInputStaysQuiet) {
  const auto [v, s] = run_single_neuron(0.5, 0.5, std::vector<double>(6, 0.0));
  for (double e : v) EXPECT_EQ(e, 0.0);
  for (double e : s) EXPECT_EQ(e, 0.0);
}

TEST(LifStepTest, ThresholdTieSpikes) {
  const auto [v, s] = run_single_neuron(0.5, 0.5, {1.0});
  EXPECT_EQ(v[0], 0.5);
  EXPECT_EQ(s[0], 1.0);
}

TEST(LifStepTest, LeakWithoutSpikes) {
  // One drive, then silence below threshold: V decays by exactly `leak`.
  const auto [v, s] = run_single_neuron(0.8, 10.0, {5.0, 0, 0, 0, 0});
  for (std::size_t t = 1; t < v.size(); ++t) EXPECT_EQ(v[t], 0.8 * v[t - 1]);
  for (double e : s) EXPECT_EQ(e, 0.0);
}

TEST(LifStepTest, MatchesIndependentRecurrence) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> leak(0.05, 1.0), th(0.05, 2.0), in(-1.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double l = leak(rng), v_th = th(rng);
    std::vector<double> raw(12);
    for (double& c : raw) c = in(rng);
    const auto [v, s] = run_single_neuron(l, v_th, raw);
    const auto ref = oracle::lif_neuron(l, v_th, raw);
    for (std::size_t t = 0; t < raw.size(); ++t) {
      EXPECT_NEAR(v[t], ref.membrane[t], 1e-12);
      EXPECT_EQ(s[t], ref.spikes[t]);
    }
  }
}

TEST(LifStepTest, RejectsMismatchedCurrent) {
  const SnnModel m = make_model({2, 3, 2}, 2, 0);
  Tape tape;
  LayerState state = reset_state(tape, m, 2);
  EXPECT_THROW(lif_step(state, 0, tape.constant(Tensor({2, 4})), m.lif), DimensionError);
  LayerState empty;
  EXPECT_THROW(lif_step(empty, 0, tape.constant(Tensor({2, 3})), m.lif), ContractError);
}

TEST(ForwardTest, SingleStepIsOneFeedforwardPass) {
  const SnnModel m = make_model({3, 6, 2}, 1, 4);
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({5, 3}, rng, 0.0, 1.0);
  Tape tape;
  const auto logits = forward_timesteps(m, tape.constant(x));
  ASSERT_EQ(logits.size(), 1u);
  // One LIF step from rest: s = [(1 - leak)(xW + b) >= v_th].
  for (std::size_t r = 0; r < 5; ++r) {
    std::vector<double> s(6);
    for (std::size_t j = 0; j < 6; ++j) {
      double c = (*m.layers[0].bias)[j];
      for (std::size_t i = 0; i < 3; ++i) c += x.at(r, i) * m.layers[0].weight.at(i, j);
      s[j] = (1.0 - m.lif.leak) * c >= m.lif.threshold ? 1.0 : 0.0;
    }
    for (std::size_t k = 0; k < 2; ++k) {
      double z = (*m.layers[1].bias)[k];
      for (std::size_t j = 0; j < 6; ++j) z += s[j] * m.layers[1].weight.at(j, k);
      EXPECT_NEAR(logits[0].value().at(r, k), z, 1e-12);
    }
  }
}

TEST(ForwardTest, DeadNetworkOutputsReadoutBias) {
  for (bool bias : {true, false}) {
    SnnModel m = make_model({3, 4, 4, 2}, 5, 2, bias);
    for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) {
      for (double& w : m.layers[l].weight.data()) w = 0.0;
      for (double& b : m.layers[l].bias->data()) b = 0.0;
    }
    std::mt19937_64 rng(2);
    Tape tape;
    const auto logits = forward_timesteps(m, tape.constant(random_tensor({3, 3}, rng)));
    for (const Var& f : logits)
      for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t k = 0; k < 2; ++k)
          EXPECT_EQ(f.value().at(r, k), bias ? (*m.layers.back().bias)[k] : 0.0);
  }
}

TEST(ForwardTest, MatchesIndependentRecurrence) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SnnModel m = make_model({2, 16, 3}, 4, seed);
    // Larger weights so that neurons actually fire and reset.
    for (double& w : m.layers[0].weight.data()) w *= 3.0;
    std::mt19937_64 rng(100 + seed);
    const Tensor x = random_tensor({8, 2}, rng, 0.0, 1.0);
    const Tensor got = predict_timesteps(m, x);
    const auto layers = to_oracle(m);
    double spikes_seen = 0.0;
    for (std::size_t r = 0; r < 8; ++r) {
      const auto ref = oracle::snn_forward(layers, m.lif.leak, m.lif.threshold, 4,
                                           {x.at(r, 0), x.at(r, 1)});
      for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t k = 0; k < 3; ++k)
          EXPECT_NEAR(got[(t * 8 + r) * 3 + k], ref[t][k], 1e-12);
      spikes_seen += std::abs(ref[0][0] - ref[3][0]);
    }
    EXPECT_GT(spikes_seen, 0.0) << "oracle run never changed state";
  }
}

TEST(ForwardTest, HiddenActivityIsBinary) {
  const SnnModel m = make_model({4, 10, 10, 3}, 6, 8);
  std::mt19937_64 rng(8);
  const Tensor x = random_tensor({7, 4}, rng, 0.0, 1.0);
  Tape tape;
  LayerState state = reset_state(tape, m, 7);
  const auto params = bind_parameters(tape, m, false);
  for (std::size_t t = 0; t < 6; ++t) {
    Var h = tape.constant(x);
    for (std::size_t l = 0; l < 2; ++l) {
      const Var current = add_row_bias(matmul(h, params[l].weight), *params[l].bias);
      h = lif_step(state, l, current, m.lif, m.surrogate);
      for (double s : h.value().data()) EXPECT_TRUE(s == 0.0 || s == 1.0);
    }
  }
}

TEST(ForwardTest, StatelessAndDeterministic) {
  const SnnModel m = make_model({3, 8, 2}, 4, 3);
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor({4, 3}, rng, 0.0, 1.0);
  const Tensor other = random_tensor({4, 3}, rng, 0.0, 1.0);
  const Tensor first = predict_timesteps(m, x);
  (void)predict_timesteps(m, other);
  EXPECT_EQ(predict_timesteps(m, x), first);
}

TEST(ForwardTest, RejectsWrongFeatureCount) {
  const SnnModel m = make_model({3, 8, 2}, 4, 3);
  EXPECT_THROW(predict_logits(m, Tensor({2, 4})), DimensionError);
}

TEST(AggregateTest, SingleSliceIsIdentity) {
  const Tensor slice({1, 2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(aggregate_output(slice), Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
}

TEST(AggregateTest, TwoSlices) {
  EXPECT_EQ(aggregate_output(Tensor({2, 1, 2}, {2, 0, 0, 2})), Tensor::matrix(1, 2, {1, 1}));
}

TEST(AggregateTest, RandomSlicesMatchDirectMean) {
  std::mt19937_64 rng(12);
  const Tensor s = random_tensor({5, 3, 4}, rng);
  const Tensor got = aggregate_output(s);
  for (std::size_t i = 0; i < 12; ++i) {
    double acc = 0.0;
    for (std::size_t t = 0; t < 5; ++t) acc += s[t * 12 + i];
    EXPECT_NEAR(got[i], acc / 5.0, 1e-12);
  }
}

TEST(AggregateTest, EnsembleIdentity) {
  const SnnModel m = make_model({3, 8, 4}, 5, 6);
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor({6, 3}, rng, 0.0, 1.0);
  Tape tape;
  const auto logits = forward_timesteps(m, tape.constant(x));
  const Tensor via_tape = aggregate_output(logits).value();
  EXPECT_EQ(via_tape, predict_logits(m, x));
  EXPECT_LT(max_abs_diff(via_tape, aggregate_output(stack_timesteps(logits))), 1e-15);
}

TEST(GradientTest, SmoothedNetworkMatchesFiniteDifferences) {
  const std::size_t widths[] = {3, 6, 5, 2};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto r = testing::check_rte_gradients(testing::smooth_model(widths, 4, seed), seed);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed;
    EXPECT_GT(r.checked, 50u);
  }
}

TEST(GradientTest, DetachFlagLeavesForwardUnchanged) {
  const std::size_t widths[] = {3, 6, 2};
  SnnModel a = testing::smooth_model(widths, 4, 1);
  SnnModel b = a;
  b.detach_reset = true;
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor({2, 3}, rng, 0.0, 1.0);
  EXPECT_EQ(predict_timesteps(a, x), predict_timesteps(b, x));
}

TEST(CheckpointTest, RoundTripIsExact) {
  SnnModel m = make_model({3, 7, 5, 2}, 6, 13, false);
  m.lif.leak = 0.3;
  m.surrogate = {SurrogateKind::kRectangle, 0.4, false};
  m.detach_reset = false;
  std::stringstream ss;
  write_checkpoint(ss, m);
  const SnnModel r = read_checkpoint(ss);
  ASSERT_EQ(r.layers.size(), m.layers.size());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    EXPECT_EQ(r.layers[l].weight, m.layers[l].weight);
    EXPECT_EQ(r.layers[l].bias.has_value(), m.layers[l].bias.has_value());
    if (m.layers[l].bias) {
      EXPECT_EQ(*r.layers[l].bias, *m.layers[l].bias);
    }
  }
  EXPECT_EQ(r.lif.leak, 0.3);
  EXPECT_EQ(r.lif.timesteps, 6u);
  EXPECT_EQ(r.surrogate.kind, SurrogateKind::kRectangle);
  EXPECT_EQ(r.surrogate.width, 0.4);
  EXPECT_FALSE(r.detach_reset);
}

TEST(CheckpointTest, RejectsBadInput) {
  std::stringstream bad_header("not-a-checkpoint 1\n");
  EXPECT_THROW(read_checkpoint(bad_header), FormatError);
  std::stringstream ss;
  write_checkpoint(ss, make_model({2, 3, 2}, 2, 0));
  std::string text = ss.str();
  std::stringstream truncated(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_checkpoint(truncated), Error);
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/model.ckpt"), IoError);
}

}  // namespace
}  // namespace rte

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "common/errors.h"
#include "gradcheck.h"
#include "layers/attention.h"
#include "layers/conv_bn.h"
#include "layers/embedding.h"
#include "layers/lstm.h"

namespace mute::nn {
namespace {

using ad::Tape;
using ad::Tensor;
using ad::Var;
using testing::gradcheck;
using testing::random_tensor;

std::vector<double> values(Var v) {
  return {v.value().data().begin(), v.value().data().end()};
}

TEST(LstmCell, ZeroParamsZeroStateGivesZero) {
  auto params = LstmCellParams::zeros(3, 4);
  Tape tape;
  Rng rng(1);
  LstmState s = lstm_cell_step(params, tape.constant(random_tensor({3}, rng)),
                               lstm_zero_state(tape, 4));
  for (double x : values(s.h)) EXPECT_EQ(x, 0.0);
  for (double x : values(s.c)) EXPECT_EQ(x, 0.0);
}

TEST(LstmCell, ZeroParamsHalveCellState) {
  auto params = LstmCellParams::zeros(2, 3);
  Tape tape;
  Tensor c0 = Tensor::vector({1.0, -2.0, 0.3});
  LstmState s = lstm_cell_step(
      params, tape.constant(Tensor::vector({5.0, -1.0})),
      {tape.constant(Tensor::vector({0.2, 0.1, 0.4})), tape.constant(c0)});
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(s.c.value()[i], 0.5 * c0[i]);
    EXPECT_EQ(s.h.value()[i], 0.5 * std::tanh(0.5 * c0[i]));
  }
}

TEST(LstmCell, ShapeMismatch) {
  auto params = LstmCellParams::zeros(2, 3);
  Tape tape;
  EXPECT_THROW(lstm_cell_step(params, tape.constant(Tensor({3})),
                              lstm_zero_state(tape, 3)),
               DimensionError);
}

TEST(LstmCell, ForgetBiasInitializedToOne) {
  Rng rng(4);
  auto p = LstmCellParams::random(3, 5, rng);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(p.bias[i], (i >= 5 && i < 10) ? 1.0 : 0.0);
  }
  const double k = 1.0 / std::sqrt(5.0);
  for (double w : p.w_input.data()) EXPECT_LE(std::abs(w), k);
}

TEST(LstmCell, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  LstmCellParams p{random_tensor({12, 4}, rng), random_tensor({12, 3}, rng),
                   random_tensor({12}, rng)};
  Tensor x = random_tensor({4}, rng);
  Tensor h = random_tensor({3}, rng);
  Tensor c = random_tensor({3}, rng);
  auto r = gradcheck(
      [&](Tape& t) {
        LstmState s = lstm_cell_step(p, t.param(x), {t.param(h), t.param(c)});
        return ad::sum(s.h);
      },
      {&p.w_input, &p.w_hidden, &p.bias, &x, &h, &c}, 1e-5, 1e-5, 1e-4);
  EXPECT_EQ(r.failures, 0u) << r.worst;
  EXPECT_LT(r.max_abs_diff, 1e-5);
}

TEST(BiLstm, SingleFrameIsTwoIndependentCells) {
  Rng rng(9);
  std::vector<BiLstmLayer> layers = {
      {LstmCellParams::random(3, 2, rng), LstmCellParams::random(3, 2, rng)}};
  Tensor x = random_tensor({1, 3}, rng);
  Tape tape;
  Var out = run_bilstm(layers, tape.constant(x));
  Var frame = tape.constant(Tensor::vector({x[0], x[1], x[2]}));
  LstmState f = lstm_cell_step(layers[0].forward, frame,
                               lstm_zero_state(tape, 2));
  LstmState b = lstm_cell_step(layers[0].backward, frame,
                               lstm_zero_state(tape, 2));
  EXPECT_EQ(out.shape(), (ad::Shape{1, 4}));
  EXPECT_EQ(out.value()[0], f.h.value()[0]);
  EXPECT_EQ(out.value()[1], f.h.value()[1]);
  EXPECT_EQ(out.value()[2], b.h.value()[0]);
  EXPECT_EQ(out.value()[3], b.h.value()[1]);
}

TEST(BiLstm, ReversedInputSwapsDirections) {
  Rng rng(10);
  auto fwd = LstmCellParams::random(3, 4, rng);
  auto bwd = LstmCellParams::random(3, 4, rng);
  std::vector<BiLstmLayer> layers = {{fwd, bwd}};
  std::vector<BiLstmLayer> swapped = {{bwd, fwd}};
  const std::size_t frames = 6;
  Tensor x = random_tensor({frames, 3}, rng);
  Tensor rev({frames, 3});
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t j = 0; j < 3; ++j) rev.at(t, j) = x.at(frames - 1 - t, j);
  }
  Tape tape;
  const Tensor& a = run_bilstm(layers, tape.constant(x)).value();
  const Tensor& b = run_bilstm(swapped, tape.constant(rev)).value();
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(a.at(t, j), b.at(frames - 1 - t, 4 + j));
      EXPECT_EQ(a.at(t, 4 + j), b.at(frames - 1 - t, j));
    }
  }
}

TEST(BiLstm, ZeroWeightsGiveZeroOutput) {
  std::vector<BiLstmLayer> layers = {
      {LstmCellParams::zeros(3, 2), LstmCellParams::zeros(3, 2)},
      {LstmCellParams::zeros(4, 2), LstmCellParams::zeros(4, 2)}};
  Rng rng(12);
  Tape tape;
  for (double v : values(run_bilstm(layers,
                                    tape.constant(random_tensor({5, 3}, rng))))) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(BiLstm, EmptySequenceIsContractError) {
  std::vector<BiLstmLayer> layers = {
      {LstmCellParams::zeros(3, 2), LstmCellParams::zeros(3, 2)}};
  Tape tape;
  EXPECT_THROW(run_bilstm(layers, tape.constant(Tensor({0, 3}))),
               ContractError);
}

TEST(BiLstm, GradientMatchesFiniteDifferences) {
  Rng rng(13);
  std::vector<BiLstmLayer> layers = {
      {LstmCellParams::random(2, 3, rng), LstmCellParams::random(2, 3, rng)},
      {LstmCellParams::random(6, 2, rng), LstmCellParams::random(6, 2, rng)}};
  Tensor x = random_tensor({4, 2}, rng);
  std::vector<Tensor*> params = {&x};
  for (auto& l : layers) {
    for (auto* c : {&l.forward, &l.backward}) {
      params.insert(params.end(), {&c->w_input, &c->w_hidden, &c->bias});
    }
  }
  auto r = gradcheck(
      [&](Tape& t) {
        Var out = run_bilstm(layers, t.param(x));
        return ad::sum(out * out);
      },
      params);
  EXPECT_EQ(r.failures, 0u) << r.worst;
}

ConvParams small_conv(Rng& rng) { return ConvParams::random(2, 3, 3, 2, 1, rng); }

TEST(ConvBn, FrozenIdentityStatsGiveReluOfConvolution) {
  Rng rng(14);
  ConvParams conv = small_conv(rng);
  for (auto& b : conv.bias.data()) b = rng.uniform(-1, 1);
  BatchNormState bn = BatchNormState::identity(3);
  bn.mode = BnMode::kFrozen;
  Tensor x = random_tensor({7, 2}, rng);
  Tape tape;
  Var out = conv_bn_forward(bn, BnMode::kFrozen, conv, tape.constant(x));
  Var cols = ad::im2col(tape.constant(x), 3, 2, 1);
  Var raw = ad::add_rowvec(ad::matmul(cols, tape.param(conv.weight)),
                           tape.param(conv.bias));
  EXPECT_TRUE(out.value().same_values(ad::relu(raw).value()));
}

TEST(ConvBn, TrainModeConstantChannelNormalizesToZero) {
  Rng rng(15);
  ConvParams conv = small_conv(rng);
  for (auto& w : conv.weight.data()) w = 0.0;
  conv.bias = Tensor::vector({0.7, -3.0, 2.5});
  BatchNormState bn = BatchNormState::identity(3);
  Tape tape;
  Var out = conv_bn_forward(bn, BnMode::kTrain, conv,
                            tape.constant(random_tensor({9, 2}, rng)));
  for (double v : values(out)) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(ConvBn, TrainModeRunningStatsDeterministic) {
  Rng rng(16);
  ConvParams conv = small_conv(rng);
  Tensor x = random_tensor({8, 2}, rng);
  BatchNormState a = BatchNormState::identity(3);
  BatchNormState b = BatchNormState::identity(3);
  Tape tape;
  conv_bn_forward(a, BnMode::kTrain, conv, tape.constant(x));
  conv_bn_forward(b, BnMode::kTrain, conv, tape.constant(x));
  EXPECT_TRUE(a.running_mean.same_values(b.running_mean));
  EXPECT_TRUE(a.running_var.same_values(b.running_var));
  EXPECT_FALSE(a.running_mean.same_values(
      BatchNormState::identity(3).running_mean));
}

TEST(ConvBn, EvalAndFrozenNeverWriteRunningStats) {
  Rng rng(17);
  ConvParams conv = small_conv(rng);
  for (BnMode mode : {BnMode::kEval, BnMode::kFrozen}) {
    BatchNormState bn = BatchNormState::identity(3);
    bn.running_mean = Tensor::vector({0.1, 0.2, 0.3});
    bn.running_var = Tensor::vector({1.1, 0.9, 2.0});
    bn.mode = mode;
    const BatchNormState before = bn;
    Tape tape;
    conv_bn_forward(bn, mode, conv, tape.constant(random_tensor({6, 2}, rng)));
    EXPECT_TRUE(bn.running_mean.same_values(before.running_mean));
    EXPECT_TRUE(bn.running_var.same_values(before.running_var));
    EXPECT_THROW(
        conv_bn_forward(bn, BnMode::kTrain, conv,
                        tape.constant(random_tensor({6, 2}, rng))),
        ContractError);
  }
}

TEST(ConvBn, TooShortInputIsContractError) {
  Rng rng(18);
  ConvParams conv = small_conv(rng);
  BatchNormState bn = BatchNormState::identity(3);
  Tape tape;
  EXPECT_THROW(conv_bn_forward(bn, BnMode::kTrain, conv,
                               tape.constant(Tensor({2, 2}))),
               ContractError);
}

TEST(ConvBn, OutputLengthFormula) {
  EXPECT_EQ(conv_output_length(16, 3, 2, 1), 8u);
  EXPECT_EQ(conv_output_length(8, 3, 2, 1), 4u);
  EXPECT_EQ(conv_output_length(3, 3, 2, 1), 2u);
}

TEST(ConvBn, GradientMatchesFiniteDifferencesInTrainMode) {
  Rng rng(19);
  ConvParams conv = small_conv(rng);
  BatchNormState bn = BatchNormState::identity(3);
  bn.scale = random_tensor({3}, rng, 0.5, 1.5);
  bn.shift = random_tensor({3}, rng);
  Tensor x1 = random_tensor({7, 2}, rng);
  Tensor x2 = random_tensor({5, 2}, rng);
  auto r = gradcheck(
      [&](Tape& t) {
        std::vector<Var> xs = {t.param(x1), t.param(x2)};
        auto out = conv_bn_forward(bn, BnMode::kTrain, conv, xs);
        return ad::sum(ad::tanh(out[0])) + ad::sum(out[1] * out[1]);
      },
      {&conv.weight, &conv.bias, &bn.scale, &bn.shift, &x1, &x2});
  EXPECT_EQ(r.failures, 0u) << r.worst;
}

TEST(Attention, SingleFrameGetsAllWeight) {
  Rng rng(20);
  auto params = AttentionParams::random(4, 3, 5, rng);
  Tape tape;
  Tensor keys = random_tensor({1, 3}, rng);
  auto res = attention_step(params, tape.constant(random_tensor({4}, rng)),
                            tape.constant(keys));
  EXPECT_EQ(res.weights.value()[0], 1.0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(res.context.value()[j], keys[j]);
}

TEST(Attention, IdenticalKeysGiveUniformWeights) {
  Rng rng(21);
  auto params = AttentionParams::random(4, 3, 5, rng);
  Tensor key = random_tensor({3}, rng);
  Tensor keys({6, 3});
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t j = 0; j < 3; ++j) keys.at(t, j) = key[j];
  }
  Tape tape;
  auto res = attention_step(params, tape.constant(random_tensor({4}, rng)),
                            tape.constant(keys));
  for (double w : values(res.weights)) EXPECT_NEAR(w, 1.0 / 6.0, 1e-15);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(res.context.value()[j], key[j], 1e-14);
  }
}

TEST(Attention, PropertyWeightsNormalizedContextInHull) {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t frames = 1 + rng.below(9);
    auto params = AttentionParams::random(4, 3, 5, rng);
    Tensor keys = random_tensor({frames, 3}, rng);
    Tape tape;
    auto res = attention_step(params, tape.constant(random_tensor({4}, rng)),
                              tape.constant(keys));
    ASSERT_EQ(res.weights.size(), frames);
    double total = 0.0;
    for (double w : values(res.weights)) {
      EXPECT_GE(w, 0.0);
      total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (std::size_t j = 0; j < 3; ++j) {
      double lo = keys.at(0, j), hi = keys.at(0, j);
      for (std::size_t t = 1; t < frames; ++t) {
        lo = std::min(lo, keys.at(t, j));
        hi = std::max(hi, keys.at(t, j));
      }
      EXPECT_GE(res.context.value()[j], lo - 1e-12);
      EXPECT_LE(res.context.value()[j], hi + 1e-12);
    }
  }
}

TEST(Attention, EmptyKeysIsContractError) {
  Rng rng(23);
  auto params = AttentionParams::random(4, 3, 5, rng);
  Tape tape;
  EXPECT_THROW(attention_step(params, tape.constant(Tensor({4})),
                              tape.constant(Tensor({0, 3}))),
               ContractError);
}

TEST(Attention, GradientMatchesFiniteDifferences) {
  Rng rng(24);
  auto p = AttentionParams::random(4, 3, 5, rng);
  Tensor query = random_tensor({4}, rng);
  Tensor keys = random_tensor({6, 3}, rng);
  auto r = gradcheck(
      [&](Tape& t) {
        auto res = attention_step(p, t.param(query), t.param(keys));
        return ad::sum(res.context * res.context) +
               ad::sum(ad::tanh(res.weights));
      },
      {&p.query_proj, &p.key_proj, &p.energy, &query, &keys});
  EXPECT_EQ(r.failures, 0u) << r.worst;
}

TEST(Embedding, OneHotTableReturnsBasisVector) {
  Tensor table({4, 4});
  for (std::size_t i = 0; i < 4; ++i) table.at(i, i) = 1.0;
  Tape tape;
  for (std::size_t i = 0; i < 4; ++i) {
    auto e = values(embed(tape, table, i));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(e[j], i == j ? 1.0 : 0.0);
  }
  EXPECT_THROW(embed(tape, table, 4), IndexError);
}

TEST(Embedding, ZeroProjectionGivesUniformDistribution) {
  Tensor w({5, 3});
  Tensor b({5});
  Rng rng(25);
  Tape tape;
  Var p = ad::softmax(project(w, b, tape.constant(random_tensor({3}, rng))));
  for (double x : values(p)) EXPECT_NEAR(x, 0.2, 1e-15);
}

TEST(Embedding, GradientOnlyOnLookedUpRows) {
  Rng rng(26);
  Tensor table = random_tensor({6, 3}, rng);
  table.set_requires_grad(true);
  Tape tape;
  Var a = embed(tape, table, 1);
  Var b = embed(tape, table, 4);
  tape.backward(ad::sum(a * b));
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (r == 1 || r == 4) {
        EXPECT_NE(table.grad()[r * 3 + j], 0.0);
      } else {
        EXPECT_EQ(table.grad()[r * 3 + j], 0.0);
      }
    }
  }
}

}  // namespace
}  // namespace mute::nn

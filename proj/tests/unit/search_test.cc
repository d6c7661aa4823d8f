// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>

#include "common/errors.h"
#include "data/batch.h"
#include "gradcheck.h"
#include "search/nbest.h"
#include "search/search.h"

namespace mute::search {
namespace {

using ad::Tensor;
using data::Token;
using data::TokenSeq;
using testing::random_tensor;

// Three content tokens plus end-of-sequence.
ModelConfig tiny_config() {
  ModelConfig c;
  c.vocab_size = 6;
  c.feature_dim = 3;
  c.conv_layers = 1;
  c.conv_channels = 3;
  c.encoder_layers = 1;
  c.encoder_hidden = 2;
  c.decoder_layers = 1;
  c.decoder_hidden = 4;
  c.embedding_size = 4;
  c.attention_size = 3;
  c.variant = Variant::kBaseline;
  return c;
}

LasModel sharp_model(std::uint64_t seed, double gain) {
  LasModel m = LasModel::create(tiny_config(), seed);
  for (auto& e : m.parameters()) {
    for (auto& x : e.tensor->data()) x *= gain;
  }
  m.set_bn_mode(nn::BnMode::kEval);
  return m;
}

struct Best {
  TokenSeq tokens;
  double score = -1e300;
};

Best exhaustive(const LasModel& m, const Tensor& f, std::size_t max_len) {
  Best best;
  std::function<void(TokenSeq&)> walk = [&](TokenSeq& prefix) {
    TokenSeq full = prefix;
    full.push_back(data::kEos);
    const double s = sequence_log_prob(m, f, full);
    if (s > best.score || (s == best.score && full < best.tokens)) {
      best = {full, s};
    }
    if (prefix.size() + 1 >= max_len) return;
    for (Token k = data::kFirstContent; k < m.config.vocab_size; ++k) {
      prefix.push_back(k);
      walk(prefix);
      prefix.pop_back();
    }
  };
  TokenSeq prefix;
  walk(prefix);
  return best;
}

TEST(FuseStep, LambdaZeroAndUniformLm) {
  std::vector<double> asr{-0.1, -2.0, -3.5};
  std::vector<double> uniform(3, -std::log(3.0));
  EXPECT_EQ(fuse_step(asr, uniform, 0.0), asr);
  std::vector<double> f = fuse_step(asr, uniform, 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(f[i], asr[i] - std::log(3.0));
  EXPECT_THROW(fuse_step(asr, std::vector<double>(2), 0.5), DimensionError);
}

TEST(FuseStep, ArgmaxMatchesEnumeration) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(5), l(5);
    for (auto& x : a) x = rng.uniform(-5, 0);
    for (auto& x : l) x = rng.uniform(-5, 0);
    const double lambda = rng.uniform(0, 2);
    std::vector<double> f = fuse_step(a, l, lambda);
    std::size_t best = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      if (a[i] + lambda * l[i] > a[best] + lambda * l[best]) best = i;
    }
    EXPECT_EQ(std::max_element(f.begin(), f.end()) - f.begin(),
              static_cast<long>(best));
  }
}

TEST(SequenceLogProb, AgreesWithTrainingLoss) {
  LasModel m = sharp_model(3, 2.0);
  Rng rng(1);
  data::Utterance u{"u", random_tensor({7, 3}, rng), {3, 5, 4}};
  const data::Utterance* p = &u;
  data::Batch batch = data::batch_utterances(std::span(&p, 1));
  ad::Tape tape(false);
  const double loss =
      loss_audio_text(m, tape, batch, nn::BnMode::kEval).value().data()[0];
  TokenSeq full = u.tokens;
  full.push_back(data::kEos);
  EXPECT_NEAR(sequence_log_prob(m, u.features, full), -4.0 * loss, 1e-10);
}

TEST(BeamSearch, ExhaustiveOracleOnRandomToyModels) {
  constexpr std::size_t kMaxLen = 4;
  int agree = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    LasModel m = sharp_model(seed, 4.0);
    Rng rng(1000 + seed);
    Tensor f = random_tensor({4 + rng.below(5), 3}, rng);
    Best oracle = exhaustive(m, f, kMaxLen);
    NBestList nb = beam_search(m, f, 64, kMaxLen, nullptr, {0.0, 0.0});
    ASSERT_FALSE(nb.empty());
    agree += nb[0].tokens == oracle.tokens;
    EXPECT_NEAR(nb[0].score, oracle.score, 1e-9);
    for (std::size_t b : {1, 2, 3, 5}) {
      EXPECT_LE(beam_search(m, f, b, kMaxLen, nullptr, {0.0, 0.0})[0].score,
                nb[0].score + 1e-12);
    }
  }
  EXPECT_EQ(agree, 100);
}

TEST(BeamSearch, WidthOneEqualsGreedy) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    LasModel m = sharp_model(seed, 3.0);
    Rng rng(seed);
    Tensor f = random_tensor({6, 3}, rng);
    Hypothesis g = greedy_decode(m, f, 6);
    NBestList nb = beam_search(m, f, 1, 6, nullptr, {0.0, 0.0});
    ASSERT_EQ(nb.size(), 1u);
    EXPECT_EQ(nb[0].tokens, g.tokens);
    EXPECT_EQ(nb[0].score, g.score);
  }
}

TEST(BeamSearch, LambdaZeroIgnoresLanguageModel) {
  LasModel m = sharp_model(2, 3.0);
  LmConfig lc;
  lc.vocab_size = 6;
  lc.embedding_size = 3;
  lc.hidden = 4;
  lc.layers = 1;
  FusionLm lm = FusionLm::create(lc, 4);
  Rng rng(2);
  Tensor f = random_tensor({6, 3}, rng);
  NBestList a = beam_search(m, f, 4, 5, nullptr, {0.0, 0.0});
  NBestList b = beam_search(m, f, 4, 5, &lm, {0.0, 0.0});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].tokens, b[i].tokens);
    EXPECT_EQ(a[i].score, b[i].score);
    EXPECT_EQ(b[i].lm_score, 0.0);
  }
  NBestList c = beam_search(m, f, 4, 5, &lm, {0.5, 0.0});
  for (const auto& h : c) {
    EXPECT_NEAR(h.score, h.asr_score + 0.5 * h.lm_score, 1e-12);
    EXPECT_LT(h.lm_score, 0.0);
  }
}

TEST(BeamSearch, SortedFiniteAndFinished) {
  LasModel m = sharp_model(7, 2.0);
  Rng rng(7);
  Tensor f = random_tensor({8, 3}, rng);
  for (double alpha : {0.0, 0.7}) {
    NBestList nb = beam_search(m, f, 8, 6, nullptr, {0.0, alpha});
    ASSERT_FALSE(nb.empty());
    EXPECT_LE(nb.size(), 8u);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      EXPECT_TRUE(std::isfinite(nb[i].score));
      EXPECT_TRUE(nb[i].finished);
      EXPECT_EQ(nb[i].tokens.back(), data::kEos);
      EXPECT_LE(nb[i].tokens.size(), 6u);
      if (i > 0) EXPECT_GE(nb[i - 1].normalized(alpha), nb[i].normalized(alpha));
    }
  }
}

TEST(BeamSearch, MaxLengthOneAndErrors) {
  LasModel m = sharp_model(1, 1.0);
  Rng rng(1);
  Tensor f = random_tensor({5, 3}, rng);
  Hypothesis g = greedy_decode(m, f, 1);
  EXPECT_EQ(g.tokens, (TokenSeq{data::kEos}));
  NBestList nb = beam_search(m, f, 4, 1);
  ASSERT_EQ(nb.size(), 1u);
  EXPECT_EQ(nb[0].tokens, (TokenSeq{data::kEos}));
  EXPECT_THROW(greedy_decode(m, Tensor(), 4), ContractError);
  EXPECT_THROW(beam_search(m, f, 0, 4), ContractError);
  EXPECT_THROW(beam_search(m, f, 2, 0), ContractError);
  EXPECT_THROW(beam_search(m, f, 2, 4, nullptr, {-1.0, 0.0}), ContractError);
}

TEST(BeamSearch, Deterministic) {
  LasModel m = sharp_model(5, 3.0);
  Rng rng(5);
  Tensor f = random_tensor({9, 3}, rng);
  NBestList a = beam_search(m, f, 5, 6);
  NBestList b = beam_search(m, f, 5, 6);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].tokens, b[i].tokens);
    EXPECT_EQ(a[i].score, b[i].score);
  }
  EXPECT_EQ(greedy_decode(m, f, 6).tokens, greedy_decode(m, f, 6).tokens);
}

TEST(NBestFile, RoundTripIsLossless) {
  data::Vocabulary vocab = data::Vocabulary::synthetic(3);
  LasModel m = sharp_model(6, 3.0);
  Rng rng(6);
  std::vector<UtteranceNBest> records;
  for (int i = 0; i < 3; ++i) {
    Tensor f = random_tensor({7, 3}, rng);
    records.push_back({"utt-" + std::to_string(i), beam_search(m, f, 4, 5)});
  }
  const auto path = std::filesystem::temp_directory_path() / "mute_nbest.tsv";
  write_nbest(path.string(), records, vocab);
  std::vector<UtteranceNBest> back = read_nbest(path.string(), vocab);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(back[i].id, records[i].id);
    ASSERT_EQ(back[i].hypotheses.size(), records[i].hypotheses.size());
    for (std::size_t k = 0; k < back[i].hypotheses.size(); ++k) {
      const auto& x = back[i].hypotheses[k];
      const auto& y = records[i].hypotheses[k];
      EXPECT_EQ(x.tokens, y.tokens);
      EXPECT_EQ(x.score, y.score);
      EXPECT_EQ(x.asr_score, y.asr_score);
      EXPECT_EQ(x.lm_score, y.lm_score);
    }
  }
  EXPECT_EQ(render_nbest(back, vocab), render_nbest(records, vocab));
  EXPECT_THROW(parse_nbest("u\t2\t0\t0\t0\tba\n", vocab), ParseError);
  EXPECT_THROW(parse_nbest("u\t1\tx\t0\t0\tba\n", vocab), ParseError);
  EXPECT_THROW(parse_nbest("u\t1\t0\t0\n", vocab), ParseError);
}

}  // namespace
}  // namespace mute::search

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "common/errors.h"
#include "data/batch.h"
#include "gradcheck.h"
#include "model/checkpoint.h"
#include "model/fusion_lm.h"
#include "model/las_model.h"

namespace mute {
namespace {

using ad::Tape;
using ad::Tensor;
using ad::Var;
using testing::gradcheck;
using testing::random_tensor;

ModelConfig toy_config(Variant v) {
  ModelConfig c;
  c.vocab_size = 7;
  c.feature_dim = 3;
  c.conv_layers = 2;
  c.conv_channels = 3;
  c.encoder_layers = 1;
  c.encoder_hidden = 2;
  c.decoder_layers = 2;
  c.decoder_hidden = 3;
  c.embedding_size = 3;
  c.attention_size = 3;
  c.variant = v;
  c.text_split = 1;
  return c;
}

data::Utterance make_utterance(const std::string& id, std::size_t frames,
                               data::TokenSeq tokens, std::size_t dim,
                               Rng& rng) {
  return {id, random_tensor({frames, dim}, rng, -1.0, 1.0), std::move(tokens)};
}

struct ToyData {
  std::vector<data::Utterance> utts;
  std::vector<data::TextSample> texts;
  data::Batch audio;
  data::Batch text;
};

ToyData toy_data(std::size_t dim, std::uint64_t seed = 5) {
  Rng rng(seed);
  ToyData d;
  d.utts.push_back(make_utterance("a", 8, {3, 4, 5}, dim, rng));
  d.utts.push_back(make_utterance("b", 11, {6, 3}, dim, rng));
  d.texts.push_back({"t0", {4, 4, 6, 5}});
  d.texts.push_back({"t1", {3}});
  std::vector<const data::Utterance*> u{&d.utts[0], &d.utts[1]};
  std::vector<const data::TextSample*> t{&d.texts[0], &d.texts[1]};
  d.audio = data::batch_utterances(u);
  d.text = data::batch_texts(t);
  return d;
}

void enable_grads(LasModel& m) {
  for (auto& e : m.parameters()) {
    e.tensor->set_requires_grad(true);
    e.tensor->zero_grad();
  }
}

bool all_zero(std::span<const double> xs) {
  for (double x : xs) {
    if (x != 0.0) return false;
  }
  return true;
}

TEST(LasModel, DeskEncodeDownsamplesSixteenFramesToFour) {
  LasModel m = LasModel::create(ModelConfig::preset("desk"), 1);
  Rng rng(2);
  Tape tape(false);
  Var enc = encode(m, tape, random_tensor({16, 8}, rng), nn::BnMode::kEval);
  EXPECT_EQ(enc.shape(), (ad::Shape{4, m.config.encoder_size()}));
  EXPECT_EQ(m.config.encoded_length(16), 4u);
}

TEST(LasModel, FrozenEncodeLeavesStatisticsAndIsDeterministic) {
  LasModel m = LasModel::create(ModelConfig::preset("desk"), 1);
  Rng rng(3);
  Tensor x = random_tensor({13, 8}, rng);
  {
    Tape tape(false);
    encode(m, tape, x, nn::BnMode::kTrain);
  }
  m.set_bn_mode(nn::BnMode::kFrozen);
  const std::uint64_t before = encoder_hash(m);
  Tape t1(false), t2(false);
  Var a = encode(m, t1, x, nn::BnMode::kFrozen);
  Var b = encode(m, t2, x, nn::BnMode::kFrozen);
  EXPECT_EQ(encoder_hash(m), before);
  EXPECT_TRUE(a.value().same_values(b.value()));
  Tape t3(false);
  EXPECT_THROW(encode(m, t3, x, nn::BnMode::kTrain), ContractError);
}

TEST(LasModel, TooShortInputIsContractError) {
  LasModel m = LasModel::create(ModelConfig::preset("desk"), 1);
  Tape tape(false);
  EXPECT_THROW(encode(m, tape, Tensor({2, 8}), nn::BnMode::kEval),
               ContractError);
}

TEST(LasModel, RegistryIsPartition) {
  for (Variant v : {Variant::kBaseline, Variant::kMuteZ, Variant::kMuteL,
                    Variant::kMuteZt, Variant::kMuteLt}) {
    LasModel m = LasModel::create(toy_config(v), 4);
    std::set<const Tensor*> seen;
    std::set<std::string> paths;
    std::set<Partition> parts;
    for (const auto& e : m.parameters()) {
      EXPECT_TRUE(seen.insert(e.tensor).second) << e.path;
      EXPECT_TRUE(paths.insert(e.path).second) << e.path;
      parts.insert(e.partition);
    }
    // Every trainable tensor of the model is registered.
    std::size_t expected = 4 * m.convs.size() + 6 * m.encoder.size() + 1 +
                           3 * m.decoder.size() + 3 + 2 +
                           (has_learnable_context(v) ? 1 : 0);
    EXPECT_EQ(seen.size(), expected);
    EXPECT_EQ(parts.count(Partition::kDecoderText) > 0, is_split(v));
    EXPECT_EQ(parts.count(Partition::kLearnableContext) > 0,
              has_learnable_context(v));
  }
}

TEST(LasModel, SingleFrameForcesAttentionContext) {
  ModelConfig c = toy_config(Variant::kBaseline);
  LasModel m = LasModel::create(c, 6);
  Rng rng(7);
  Tape tape(false);
  Var keys = tape.constant(random_tensor({1, c.encoder_size()}, rng));
  nn::AttentionKeys prepared = nn::prepare_attention(m.attention, keys);
  DecoderState s = initial_audio_state(m, tape);
  data::Token prev = data::kSos;
  for (int step = 0; step < 3; ++step) {
    StepOutput a = decode_step_audio(m, prev, s, prepared);
    StepOutput b =
        decode_step_with_context(m, prev, s, ad::row(keys, 0));
    EXPECT_EQ(a.weights.value()[0], 1.0);
    EXPECT_TRUE(a.logits.value().same_values(b.logits.value()));
    double total = 0.0;
    for (double p : ad::softmax(a.logits).value().data()) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
    s = a.state;
    prev = 3 + step;
  }
}

TEST(LasModel, OutOfRangeTokenIsIndexError) {
  LasModel m = LasModel::create(toy_config(Variant::kMuteZ), 6);
  Tape tape(false);
  EXPECT_THROW(decode_step_text(m, tape, 7, initial_text_state(m, tape)),
               IndexError);
}

// Copies values by registry path; for the lt split layer the extra context
// columns are filled with random values.
void copy_by_path(LasModel& dst, LasModel& src, Rng& rng) {
  auto sp = src.parameters();
  for (auto& e : dst.parameters()) {
    const Tensor* s = nullptr;
    for (auto& f : sp) {
      if (f.path == e.path) s = f.tensor;
    }
    if (!s) {
      for (auto& x : e.tensor->data()) x = rng.uniform(-1, 1);
      continue;
    }
    if (s->shape() == e.tensor->shape()) {
      std::copy(s->data().begin(), s->data().end(), e.tensor->data().begin());
    } else {
      ASSERT_EQ(s->rows(), e.tensor->rows());
      for (std::size_t r = 0; r < s->rows(); ++r) {
        for (std::size_t col = 0; col < e.tensor->cols(); ++col) {
          e.tensor->at(r, col) =
              col < s->cols() ? s->at(r, col) : rng.uniform(-1, 1);
        }
      }
    }
  }
}

TEST(LasModel, AudioPathIdenticalAcrossVariants) {
  ToyData d = toy_data(3);
  LasModel base = LasModel::create(toy_config(Variant::kBaseline), 9);
  Rng rng(10);
  double reference = 0.0;
  {
    Tape tape(false);
    reference = loss_audio_text(base, tape, d.audio, nn::BnMode::kTrain)
                    .value()
                    .item();
  }
  for (Variant v : {Variant::kMuteZ, Variant::kMuteL, Variant::kMuteZt,
                    Variant::kMuteLt}) {
    LasModel m = LasModel::create(toy_config(v), 11);
    copy_by_path(m, base, rng);
    if (has_learnable_context(v)) {
      for (auto& x : m.context.data()) x = rng.uniform(-1, 1);
    }
    Tape tape(false);
    const double loss =
        loss_audio_text(m, tape, d.audio, nn::BnMode::kTrain).value().item();
    EXPECT_EQ(loss, reference) << variant_name(v);
  }
}

TEST(LasModel, MuteZTextStepEqualsZeroContextAudioStep) {
  ModelConfig c = toy_config(Variant::kMuteZ);
  LasModel m = LasModel::create(c, 12);
  Tape tape(false);
  DecoderState s = initial_text_state(m, tape);
  StepOutput a = decode_step_text(m, tape, 4, s);
  StepOutput b = decode_step_with_context(
      m, 4, s, tape.constant(Tensor({c.encoder_size()})));
  EXPECT_TRUE(a.logits.value().same_values(b.logits.value()));
}

TEST(LasModel, BaselineHasNoTextPath) {
  LasModel m = LasModel::create(toy_config(Variant::kBaseline), 12);
  ToyData d = toy_data(3);
  Tape tape(false);
  EXPECT_THROW(decode_step_text(m, tape, 4, initial_audio_state(m, tape)),
               ContractError);
  EXPECT_THROW(loss_text_only(m, tape, d.text), ContractError);
}

std::vector<double> text_logits(LasModel& m) {
  Tape tape(false);
  DecoderState s = initial_text_state(m, tape);
  std::vector<double> out;
  for (data::Token t : {data::kSos, data::Token{4}, data::Token{5}}) {
    StepOutput o = decode_step_text(m, tape, t, s);
    out.insert(out.end(), o.logits.value().data().begin(),
               o.logits.value().data().end());
    s = o.state;
  }
  return out;
}

TEST(LasModel, SplitTextPathIgnoresLowerDecoderAndAttention) {
  for (Variant v : {Variant::kMuteZt, Variant::kMuteLt}) {
    LasModel m = LasModel::create(toy_config(v), 13);
    const std::vector<double> before = text_logits(m);
    Rng rng(14);
    for (auto& e : m.parameters()) {
      if (e.partition == Partition::kDecoderAudio ||
          e.partition == Partition::kAttention ||
          e.partition == Partition::kEncoder) {
        for (auto& x : e.tensor->data()) x += rng.uniform(-1, 1);
      }
    }
    EXPECT_EQ(text_logits(m), before) << variant_name(v);
  }
}

TEST(LasModel, LearnableContextFeedsSplitTextPath) {
  LasModel m = LasModel::create(toy_config(Variant::kMuteLt), 15);
  const std::vector<double> before = text_logits(m);
  m.context[0] = 0.5;
  EXPECT_NE(text_logits(m), before);
}

TEST(LasModel, UntrainedDeskLossNearLogVocab) {
  LasModel m = LasModel::create(ModelConfig::preset("desk"), 16);
  Rng rng(17);
  std::vector<data::Utterance> utts;
  for (int i = 0; i < 4; ++i) {
    data::TokenSeq toks;
    for (int j = 0; j < 5; ++j) toks.push_back(3 + rng.below(16));
    utts.push_back(make_utterance("u" + std::to_string(i), 15, toks, 8, rng));
  }
  std::vector<const data::Utterance*> ptrs;
  for (auto& u : utts) ptrs.push_back(&u);
  Tape tape(false);
  const double loss =
      loss_audio_text(m, tape, data::batch_utterances(ptrs), nn::BnMode::kTrain)
          .value()
          .item();
  const double ln_v = std::log(19.0);
  EXPECT_NEAR(loss, ln_v, 0.1 * ln_v);
}

// Teacher-forced loss of a single example assembled step by step.
double manual_loss(LasModel& m, const data::Utterance& u) {
  Tape tape(false);
  Var enc = encode(m, tape, u.features, nn::BnMode::kTrain);
  nn::AttentionKeys keys = nn::prepare_attention(m.attention, enc);
  DecoderState s = initial_audio_state(m, tape);
  data::Token prev = data::kSos;
  double total = 0.0;
  for (std::size_t i = 0; i <= u.tokens.size(); ++i) {
    StepOutput o = decode_step_audio(m, prev, s, keys);
    const data::Token target = i < u.tokens.size() ? u.tokens[i] : data::kEos;
    total -= ad::log_softmax(o.logits).value()[target];
    s = o.state;
    prev = target;
  }
  return total / static_cast<double>(u.tokens.size() + 1);
}

TEST(LasModel, SingleExampleBatchMatchesManualLoss) {
  ToyData d = toy_data(3);
  LasModel m = LasModel::create(toy_config(Variant::kBaseline), 18);
  const data::Utterance* u = &d.utts[0];
  Tape tape(false);
  const double batched =
      loss_audio_text(m, tape,
                      data::batch_utterances(std::span(&u, 1)),
                      nn::BnMode::kTrain)
          .value()
          .item();
  EXPECT_NEAR(batched, manual_loss(m, d.utts[0]), 1e-14);
}

TEST(LasModel, PaddedBatchIsTokenWeightedMeanInEvalMode) {
  ToyData d = toy_data(3);
  LasModel m = LasModel::create(toy_config(Variant::kMuteL), 19);
  Tape tape(false);
  const double batched =
      loss_text_only(m, tape, d.text).value().item();
  double weighted = 0.0;
  double count = 0.0;
  for (const auto& t : d.texts) {
    const data::TextSample* p = &t;
    Tape single(false);
    const double l =
        loss_text_only(m, single, data::batch_texts(std::span(&p, 1)))
            .value()
            .item();
    weighted += l * static_cast<double>(t.tokens.size() + 1);
    count += static_cast<double>(t.tokens.size() + 1);
  }
  EXPECT_NEAR(batched, weighted / count, 1e-13);
}

TEST(LasModel, TextLossTouchesOnlyTextSidePartitions) {
  ToyData d = toy_data(3);
  for (Variant v : {Variant::kMuteZ, Variant::kMuteL, Variant::kMuteZt,
                    Variant::kMuteLt}) {
    LasModel m = LasModel::create(toy_config(v), 20);
    for (auto& x : m.context.data()) x = 0.3;
    enable_grads(m);
    Tape tape;
    tape.backward(loss_text_only(m, tape, d.text));
    for (const auto& e : m.parameters()) {
      const bool excluded =
          e.partition == Partition::kEncoder ||
          (is_split(v) && (e.partition == Partition::kDecoderAudio ||
                           e.partition == Partition::kAttention)) ||
          (!is_split(v) && e.partition == Partition::kAttention);
      if (excluded) {
        EXPECT_TRUE(all_zero(e.tensor->grad())) << variant_name(v) << " " << e.path;
      } else if (e.path != "decoder.lstm1.w_input" || v != Variant::kMuteLt) {
        EXPECT_FALSE(all_zero(e.tensor->grad())) << variant_name(v) << " " << e.path;
      }
    }
  }
}

TEST(LasModel, AudioLossReachesEveryDecoderPartition) {
  ToyData d = toy_data(3);
  LasModel m = LasModel::create(toy_config(Variant::kMuteLt), 21);
  enable_grads(m);
  Tape tape;
  tape.backward(loss_audio_text(m, tape, d.audio, nn::BnMode::kTrain));
  for (const auto& e : m.parameters()) {
    if (e.partition == Partition::kLearnableContext) {
      EXPECT_TRUE(all_zero(e.tensor->grad()));
    } else {
      EXPECT_FALSE(all_zero(e.tensor->grad())) << e.path;
    }
  }
}

std::vector<Tensor*> all_params(LasModel& m) {
  std::vector<Tensor*> out;
  for (auto& e : m.parameters()) out.push_back(e.tensor);
  return out;
}

TEST(LasModel, FullAudioLossGradientMatchesFiniteDifferences) {
  ToyData d = toy_data(3);
  LasModel m = LasModel::create(toy_config(Variant::kBaseline), 22);
  Rng rng(23);
  for (auto& e : m.parameters()) {
    for (auto& x : e.tensor->data()) x += rng.uniform(-0.3, 0.3);
  }
  auto r = gradcheck(
      [&](Tape& t) {
        return loss_audio_text(m, t, d.audio, nn::BnMode::kTrain);
      },
      all_params(m), 1e-5, 1e-7, 1e-4);
  EXPECT_EQ(r.failures, 0u) << r.worst;
}

TEST(LasModel, TextLossGradientMatchesFiniteDifferences) {
  ToyData d = toy_data(3);
  for (Variant v : {Variant::kMuteL, Variant::kMuteLt}) {
    LasModel m = LasModel::create(toy_config(v), 24);
    Rng rng(25);
    for (auto& x : m.context.data()) x = rng.uniform(-1, 1);
    auto r = gradcheck(
        [&](Tape& t) { return loss_text_only(m, t, d.text); }, all_params(m),
        1e-5, 1e-7, 1e-4);
    EXPECT_EQ(r.failures, 0u) << variant_name(v) << " " << r.worst;
  }
}

TEST(LasModel, CheckpointRoundTripIsBitExact) {
  LasModel m = LasModel::create(toy_config(Variant::kMuteLt), 26);
  m.context[1] = 0.25;
  m.norms[0].running_var[2] = 1.5;
  m.set_bn_mode(nn::BnMode::kFrozen);
  const auto path = std::filesystem::temp_directory_path() / "mute_model.ckpt";
  save_model(m, path.string());
  LasModel back = load_model(path.string());
  EXPECT_EQ(back.bn_mode(), nn::BnMode::kFrozen);
  EXPECT_EQ(back.config.variant, Variant::kMuteLt);
  auto a = m.parameters();
  auto b = back.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].path, b[i].path);
    EXPECT_TRUE(a[i].tensor->same_values(*b[i].tensor)) << a[i].path;
  }
  EXPECT_EQ(encoder_hash(m), encoder_hash(back));
  EXPECT_EQ(model_to_archive(m).serialize(),
            model_to_archive(back).serialize());
  std::filesystem::remove(path);
}

TEST(LasModel, CorruptCheckpointIsParseError) {
  LasModel m = LasModel::create(toy_config(Variant::kBaseline), 27);
  std::string bytes = model_to_archive(m).serialize();
  EXPECT_THROW(Archive::deserialize(bytes.substr(0, bytes.size() - 3)),
               ParseError);
  EXPECT_THROW(Archive::deserialize("garbage"), ParseError);
}

TEST(LasModel, SplitConfigValidation) {
  ModelConfig c = toy_config(Variant::kMuteZt);
  c.text_split = 2;
  EXPECT_THROW(c.validate(), ContractError);
  c.text_split = 0;
  EXPECT_THROW(c.validate(), ContractError);
  c = toy_config(Variant::kMuteLt);
  c.embedding_size = 4;
  EXPECT_THROW(c.validate(), ContractError);
}

TEST(LasModel, PaperLargePresetSizes) {
  ModelConfig c = ModelConfig::preset("paper-large");
  EXPECT_EQ(c.encoder_layers, 4u);
  EXPECT_EQ(c.encoder_hidden, 1024u);
  EXPECT_EQ(c.decoder_layers, 4u);
  EXPECT_EQ(c.decoder_hidden, 1024u);
  EXPECT_EQ(c.conv_layers, 2u);
  EXPECT_EQ(c.text_split, 2u);
  LmConfig lm = LmConfig::preset("paper-lm");
  EXPECT_EQ(lm.layers, 2u);
  EXPECT_EQ(lm.hidden, 2048u);
}

TEST(FusionLm, ZeroWeightsGiveUniformLogProbs) {
  LmConfig c;
  FusionLm lm = FusionLm::create(c, 1);
  for (auto& e : lm.parameters()) {
    for (auto& x : e.tensor->data()) x = 0.0;
  }
  Tape tape(false);
  LmStep s = lm_step(lm, data::kSos, lm_initial_state(lm, tape), tape);
  for (double x : s.log_probs.value().data()) {
    EXPECT_NEAR(x, -std::log(19.0), 1e-14);
  }
}

TEST(FusionLm, LogProbsNormalizeAndRoundTrip) {
  FusionLm lm = FusionLm::create(LmConfig{}, 2);
  Tape tape(false);
  DecoderState st = lm_initial_state(lm, tape);
  for (data::Token t : {data::kSos, data::Token{5}, data::Token{7}}) {
    LmStep s = lm_step(lm, t, st, tape);
    double total = 0.0;
    for (double x : s.log_probs.value().data()) total += std::exp(x);
    EXPECT_NEAR(total, 1.0, 1e-12);
    st = s.state;
  }
  FusionLm back = lm_from_archive(lm_to_archive(lm));
  EXPECT_EQ(lm_to_archive(back).serialize(), lm_to_archive(lm).serialize());
}

TEST(FusionLm, LossGradientMatchesFiniteDifferences) {
  LmConfig c;
  c.vocab_size = 7;
  c.embedding_size = 3;
  c.hidden = 4;
  c.layers = 2;
  FusionLm lm = FusionLm::create(c, 3);
  ToyData d = toy_data(3);
  std::vector<Tensor*> params;
  for (auto& e : lm.parameters()) params.push_back(e.tensor);
  auto r = gradcheck([&](Tape& t) { return lm_loss(lm, t, d.text); }, params);
  EXPECT_EQ(r.failures, 0u) << r.worst;
}

}  // namespace
}  // namespace mute

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "model/fusion_lm.h"

#include <cmath>

#include "common/errors.h"
#include "common/rng.h"
#include "layers/embedding.h"

namespace mute {

FusionLm FusionLm::create(const LmConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(mix_seed(seed, 3));
  FusionLm lm;
  lm.config = config;
  lm.embedding = ad::Tensor({config.vocab_size, config.embedding_size});
  const double ke = 1.0 / std::sqrt(static_cast<double>(config.embedding_size));
  for (auto& w : lm.embedding.data()) w = rng.uniform(-ke, ke);
  std::size_t in = config.embedding_size;
  for (std::size_t j = 0; j < config.layers; ++j) {
    lm.layers.push_back(nn::LstmCellParams::random(in, config.hidden, rng));
    in = config.hidden;
  }
  lm.proj_weight = ad::Tensor({config.vocab_size, config.hidden});
  lm.proj_bias = ad::Tensor({config.vocab_size});
  const double kp = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  for (auto& w : lm.proj_weight.data()) w = rng.uniform(-kp, kp);
  return lm;
}

std::vector<ParamEntry> FusionLm::parameters() {
  // The lm has no partitions of its own; everything is trainable together.
  const Partition p = Partition::kSharedDecoderIo;
  std::vector<ParamEntry> out{{"lm.embedding", &embedding, p}};
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const std::string prefix = "lm.lstm" + std::to_string(j);
    out.push_back({prefix + ".w_input", &layers[j].w_input, p});
    out.push_back({prefix + ".w_hidden", &layers[j].w_hidden, p});
    out.push_back({prefix + ".bias", &layers[j].bias, p});
  }
  out.push_back({"lm.proj.weight", &proj_weight, p});
  out.push_back({"lm.proj.bias", &proj_bias, p});
  return out;
}

DecoderState lm_initial_state(const FusionLm& lm, ad::Tape& tape) {
  DecoderState s;
  for (std::size_t j = 0; j < lm.layers.size(); ++j) {
    s.layers.push_back(nn::lstm_zero_state(tape, lm.config.hidden));
  }
  return s;
}

namespace {

ad::Var lm_logits(const FusionLm& lm, data::Token prev,
                  const DecoderState& state, ad::Tape& tape,
                  DecoderState& next) {
  if (state.layers.size() != lm.layers.size()) {
    throw ContractError("lm_step: state has wrong layer count");
  }
  ad::Var x = nn::embed(tape, lm.embedding, prev);
  next.layers.clear();
  for (std::size_t j = 0; j < lm.layers.size(); ++j) {
    next.layers.push_back(nn::lstm_cell_step(lm.layers[j], x, state.layers[j]));
    x = next.layers.back().h;
  }
  return nn::project(lm.proj_weight, lm.proj_bias, x);
}

}  // namespace

LmStep lm_step(const FusionLm& lm, data::Token prev, const DecoderState& state,
               ad::Tape& tape) {
  LmStep out;
  out.log_probs = ad::log_softmax(lm_logits(lm, prev, state, tape, out.state));
  return out;
}

ad::Var lm_loss(const FusionLm& lm, ad::Tape& tape, const data::Batch& batch) {
  if (batch.size() == 0) throw ContractError("lm_loss: empty batch");
  std::vector<std::vector<ad::Var>> rows(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    DecoderState state = lm_initial_state(lm, tape);
    data::Token prev = data::kSos;
    for (std::size_t u = 0; u <= batch.lengths[b]; ++u) {
      DecoderState next;
      rows[b].push_back(lm_logits(lm, prev, state, tape, next));
      state = std::move(next);
      if (u < batch.lengths[b]) prev = batch.tokens[b][u];
    }
  }
  return padded_cross_entropy(tape, rows, batch, lm.config.vocab_size);
}

}  // namespace mute

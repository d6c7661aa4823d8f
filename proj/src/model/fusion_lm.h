// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_MODEL_FUSION_LM_H_
#define MUTE_MODEL_FUSION_LM_H_

#include <cstdint>
#include <vector>

#include "autodiff/tape.h"
#include "data/types.h"
#include "layers/lstm.h"
#include "model/config.h"
#include "model/las_model.h"

namespace mute {

// Token-level LSTM language model used for shallow fusion.
struct FusionLm {
  LmConfig config;
  ad::Tensor embedding;  // [V x E]
  std::vector<nn::LstmCellParams> layers;
  ad::Tensor proj_weight;  // [V x H]
  ad::Tensor proj_bias;    // [V]

  static FusionLm create(const LmConfig& config, std::uint64_t seed);
  std::vector<ParamEntry> parameters();
};

struct LmStep {
  ad::Var log_probs;  // [V]
  DecoderState state;
};

DecoderState lm_initial_state(const FusionLm& lm, ad::Tape& tape);
LmStep lm_step(const FusionLm& lm, data::Token prev, const DecoderState& state,
               ad::Tape& tape);
// Mean next-token cross-entropy over a text-only batch.
ad::Var lm_loss(const FusionLm& lm, ad::Tape& tape, const data::Batch& batch);

}  // namespace mute

#endif  // MUTE_MODEL_FUSION_LM_H_

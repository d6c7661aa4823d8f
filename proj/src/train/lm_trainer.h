// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_TRAIN_LM_TRAINER_H_
#define MUTE_TRAIN_LM_TRAINER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "common/config_text.h"
#include "data/types.h"
#include "model/fusion_lm.h"
#include "train/optimizer.h"

namespace mute::train {

struct LmTrainConfig {
  OptimizerConfig optimizer{OptimizerKind::kAdam, 3e-3};
  double clip_norm = 5.0;
  std::size_t batch = 32;
  std::size_t steps = 2000;
  std::uint64_t seed = 1;
  std::size_t eval_every = 250;

  void validate() const;
  static LmTrainConfig read(const ConfigSection* section);
  void write(ConfigSection& section) const;
};

struct LmLogRow {
  std::size_t step = 0;
  double train_loss = 0.0;  // mean over the steps since the previous row
  double valid_loss = 0.0;
  double valid_perplexity = 0.0;
  bool best = false;
};

std::string render_lm_log(const std::vector<LmLogRow>& rows);

// Mean next-token cross-entropy over every token and end marker of texts.
double lm_cross_entropy(const FusionLm& lm,
                        std::span<const data::TextSample> texts);

// Trains lm in place and leaves it at the parameters with the lowest
// validation loss seen on the evaluation cadence.
std::vector<LmLogRow> train_lm(FusionLm& lm, const LmTrainConfig& config,
                               std::span<const data::TextSample> text,
                               std::span<const data::TextSample> valid);

}  // namespace mute::train

#endif  // MUTE_TRAIN_LM_TRAINER_H_

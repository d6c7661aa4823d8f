// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_SEARCH_SEARCH_H_
#define MUTE_SEARCH_SEARCH_H_

#include <span>
#include <vector>

#include "autodiff/tape.h"
#include "data/types.h"
#include "model/fusion_lm.h"
#include "model/las_model.h"

namespace mute::search {

struct Hypothesis {
  data::TokenSeq tokens;  // ends with end-of-sequence once finished
  double score = 0.0;     // sum of fused per-step scores
  double asr_score = 0.0;
  double lm_score = 0.0;  // zero when no language model took part
  bool finished = false;

  // score / length^alpha, length counting the end-of-sequence token.
  double normalized(double alpha) const;
  // Tokens without the trailing end-of-sequence.
  data::TokenSeq transcript() const;
};

using NBestList = std::vector<Hypothesis>;

struct FusionConfig {
  double lambda = 0.3;
  double alpha = 0.0;
  void validate() const;
};

inline constexpr std::size_t kDefaultBeam = 8;
inline constexpr std::size_t kDefaultMaxLength = 24;

// asr + lambda * lm, elementwise.
std::vector<double> fuse_step(std::span<const double> asr,
                              std::span<const double> lm, double lambda);

Hypothesis greedy_decode(const LasModel& model, const ad::Tensor& features,
                         std::size_t max_length);
// encoded must live on tape.
Hypothesis greedy_decode_encoded(const LasModel& model, ad::Tape& tape,
                                 ad::Var encoded, std::size_t max_length);

// Passing lm == nullptr or lambda == 0 decodes without fusion; in the latter
// case the language model is never evaluated.
NBestList beam_search(const LasModel& model, const ad::Tensor& features,
                      std::size_t beam, std::size_t max_length,
                      const FusionLm* lm = nullptr,
                      const FusionConfig& fusion = {});
NBestList beam_search_encoded(const LasModel& model, ad::Tape& tape,
                              ad::Var encoded, std::size_t beam,
                              std::size_t max_length,
                              const FusionLm* lm = nullptr,
                              const FusionConfig& fusion = {});

// Sum of per-step log-probabilities of tokens (which must end with
// end-of-sequence) under teacher forcing.
double sequence_log_prob(const LasModel& model, const ad::Tensor& features,
                         const data::TokenSeq& tokens);

}  // namespace mute::search

#endif  // MUTE_SEARCH_SEARCH_H_

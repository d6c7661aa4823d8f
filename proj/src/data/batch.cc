// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "data/batch.h"

#include <algorithm>
#include <string>

#include "common/errors.h"

namespace mute::data {

const char* batch_kind_name(BatchKind kind) {
  return kind == BatchKind::kAudioText ? "audio-text" : "text-only";
}

Batch make_batch(std::span<const Example> examples, std::size_t max_per_batch,
                 Token pad) {
  if (examples.empty()) throw ContractError("batch: no examples");
  if (examples.size() > max_per_batch) {
    throw ContractError("batch: " + std::to_string(examples.size()) +
                        " examples exceed the limit of " +
                        std::to_string(max_per_batch));
  }
  Batch b;
  b.kind = examples[0].utterance ? BatchKind::kAudioText : BatchKind::kTextOnly;
  std::size_t max_frames = 0;
  std::size_t feature_dim = 0;
  for (const Example& e : examples) {
    const bool audio = e.utterance != nullptr;
    if ((audio ? BatchKind::kAudioText : BatchKind::kTextOnly) != b.kind ||
        (audio && e.text) || (!audio && !e.text)) {
      throw ContractError("batch: examples mix audio-text and text-only kinds");
    }
    const TokenSeq& tokens = audio ? e.utterance->tokens : e.text->tokens;
    b.ids.push_back(audio ? e.utterance->id : e.text->id);
    b.tokens.push_back(tokens);
    b.lengths.push_back(tokens.size());
    b.max_length = std::max(b.max_length, tokens.size());
    if (audio) {
      const ad::Tensor& f = e.utterance->features;
      if (feature_dim != 0 && f.cols() != feature_dim) {
        throw DimensionError("batch: feature dimensions differ");
      }
      feature_dim = f.cols();
      max_frames = std::max(max_frames, f.rows());
    }
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    b.mask.emplace_back(b.max_length, 0);
    std::fill_n(b.mask[i].begin(), b.lengths[i], 1);
    b.tokens[i].resize(b.max_length, pad);
  }
  if (b.kind == BatchKind::kAudioText) {
    for (const Example& e : examples) {
      const ad::Tensor& f = e.utterance->features;
      std::vector<double> data(max_frames * feature_dim, 0.0);
      std::copy(f.data().begin(), f.data().end(), data.begin());
      b.features.emplace_back(ad::Shape{max_frames, feature_dim},
                              std::move(data));
      b.frame_lengths.push_back(f.rows());
    }
  }
  return b;
}

Batch batch_utterances(std::span<const Utterance* const> utterances) {
  std::vector<Example> ex;
  for (const Utterance* u : utterances) ex.push_back({u, nullptr});
  return make_batch(ex, ex.size());
}

Batch batch_texts(std::span<const TextSample* const> texts) {
  std::vector<Example> ex;
  for (const TextSample* t : texts) ex.push_back({nullptr, t});
  return make_batch(ex, ex.size());
}

}  // namespace mute::data

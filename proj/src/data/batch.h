// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_DATA_BATCH_H_
#define MUTE_DATA_BATCH_H_

#include <span>
#include <vector>

#include "data/types.h"

namespace mute::data {

// One of the two example kinds; exactly one pointer is set.
struct Example {
  const Utterance* utterance = nullptr;
  const TextSample* text = nullptr;
};

// Pads a homogeneous list of examples. Mixed kinds, empty input, or more
// than max_per_batch examples are contract errors.
Batch make_batch(std::span<const Example> examples, std::size_t max_per_batch,
                 Token pad = kPad);

Batch batch_utterances(std::span<const Utterance* const> utterances);
Batch batch_texts(std::span<const TextSample* const> texts);

}  // namespace mute::data

#endif  // MUTE_DATA_BATCH_H_

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_LAYERS_EMBEDDING_H_
#define MUTE_LAYERS_EMBEDDING_H_

#include "autodiff/tape.h"

namespace mute::nn {

// Row lookup in table [V x E].
ad::Var embed(ad::Tape& tape, const ad::Tensor& table, std::size_t token);

// Affine map of h [H] to vocabulary logits: weight [V x H] . h + bias [V].
ad::Var project(const ad::Tensor& weight, const ad::Tensor& bias, ad::Var h);

}  // namespace mute::nn

#endif  // MUTE_LAYERS_EMBEDDING_H_

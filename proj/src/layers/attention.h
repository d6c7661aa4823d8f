// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_LAYERS_ATTENTION_H_
#define MUTE_LAYERS_ATTENTION_H_

#include "autodiff/tape.h"
#include "common/rng.h"

namespace mute::nn {

// Additive (content-based) attention:
//   e_t = v . tanh(Wq q + Wk k_t),  w = softmax(e),  context = sum_t w_t k_t
inline constexpr const char* kAttentionForm = "additive";

struct AttentionParams {
  ad::Tensor query_proj;  // [A x H_dec]
  ad::Tensor key_proj;    // [H_enc x A], applied to the rows of the keys
  ad::Tensor energy;      // [A]

  static AttentionParams random(std::size_t query_size, std::size_t key_size,
                                std::size_t attention_size, Rng& rng);
};

// Per-sequence quantities that do not depend on the query.
struct AttentionKeys {
  ad::Var keys;        // [T x H_enc]
  ad::Var keys_t;      // [H_enc x T]
  ad::Var projected;   // [T x A]
};

AttentionKeys prepare_attention(const AttentionParams& params, ad::Var keys);

struct AttentionResult {
  ad::Var context;  // [H_enc]
  ad::Var weights;  // [T]
};

AttentionResult attention_step(const AttentionParams& params,
                               const AttentionKeys& keys, ad::Var query);
AttentionResult attention_step(const AttentionParams& params, ad::Var query,
                               ad::Var keys);

}  // namespace mute::nn

#endif  // MUTE_LAYERS_ATTENTION_H_

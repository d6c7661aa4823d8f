// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "layers/attention.h"

#include <cmath>

#include "common/errors.h"

namespace mute::nn {

AttentionParams AttentionParams::random(std::size_t query_size,
                                        std::size_t key_size,
                                        std::size_t attention_size, Rng& rng) {
  AttentionParams p;
  p.query_proj = ad::Tensor({attention_size, query_size});
  p.key_proj = ad::Tensor({key_size, attention_size});
  p.energy = ad::Tensor({attention_size});
  const double kq = 1.0 / std::sqrt(static_cast<double>(query_size));
  const double kk = 1.0 / std::sqrt(static_cast<double>(key_size));
  const double ke = 1.0 / std::sqrt(static_cast<double>(attention_size));
  for (auto& w : p.query_proj.data()) w = rng.uniform(-kq, kq);
  for (auto& w : p.key_proj.data()) w = rng.uniform(-kk, kk);
  for (auto& w : p.energy.data()) w = rng.uniform(-ke, ke);
  return p;
}

AttentionKeys prepare_attention(const AttentionParams& params, ad::Var keys) {
  if (keys.shape().size() != 2 || keys.shape()[0] == 0) {
    throw ContractError("attention: keys must be a non-empty [T x H] matrix, "
                        "got " + ad::shape_str(keys.shape()));
  }
  ad::Tape& tape = *keys.tape();
  return {keys, ad::transpose(keys),
          ad::matmul(keys, tape.param(params.key_proj))};
}

AttentionResult attention_step(const AttentionParams& params,
                               const AttentionKeys& keys, ad::Var query) {
  ad::Tape& tape = *query.tape();
  ad::Var q = ad::matvec(tape.param(params.query_proj), query);
  ad::Var hidden = ad::tanh(ad::add_rowvec(keys.projected, q));
  ad::Var energies = ad::matvec(hidden, tape.param(params.energy));
  ad::Var weights = ad::softmax(energies);
  return {ad::matvec(keys.keys_t, weights), weights};
}

AttentionResult attention_step(const AttentionParams& params, ad::Var query,
                               ad::Var keys) {
  return attention_step(params, prepare_attention(params, keys), query);
}

}  // namespace mute::nn

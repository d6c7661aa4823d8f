// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "layers/embedding.h"

#include <string>

#include "common/errors.h"

namespace mute::nn {

ad::Var embed(ad::Tape& tape, const ad::Tensor& table, std::size_t token) {
  if (token >= table.rows()) {
    throw IndexError("embed: token " + std::to_string(token) +
                     " out of range for vocabulary of " +
                     std::to_string(table.rows()));
  }
  return ad::row(tape.param(table), token);
}

ad::Var project(const ad::Tensor& weight, const ad::Tensor& bias, ad::Var h) {
  ad::Tape& tape = *h.tape();
  return ad::matvec(tape.param(weight), h) + tape.param(bias);
}

}  // namespace mute::nn

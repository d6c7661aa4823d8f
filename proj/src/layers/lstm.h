// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_LAYERS_LSTM_H_
#define MUTE_LAYERS_LSTM_H_

#include <span>
#include <vector>

#include "autodiff/tape.h"
#include "common/rng.h"

namespace mute::nn {

// Gate blocks are laid out (input, forget, candidate, output) along the
// first axis of every weight and of the bias.
struct LstmCellParams {
  ad::Tensor w_input;   // [4H x D]
  ad::Tensor w_hidden;  // [4H x H]
  ad::Tensor bias;      // [4H]

  std::size_t input_size() const { return w_input.cols(); }
  std::size_t hidden_size() const { return w_hidden.cols(); }

  static LstmCellParams zeros(std::size_t input_size, std::size_t hidden_size);
  // Uniform weights in [-1/sqrt(H), 1/sqrt(H)], forget bias 1, other bias 0.
  static LstmCellParams random(std::size_t input_size, std::size_t hidden_size,
                               Rng& rng);
};

struct LstmState {
  ad::Var h;
  ad::Var c;
};

LstmState lstm_zero_state(ad::Tape& tape, std::size_t hidden_size);

LstmState lstm_cell_step(const LstmCellParams& params, ad::Var x,
                         const LstmState& prev);

struct BiLstmLayer {
  LstmCellParams forward;
  LstmCellParams backward;
};

// Stacked bidirectional LSTM over the rows of x [T x F]. Each layer's output
// row t is [forward h_t ; backward h_t]; result is [T x 2H] of the top layer.
ad::Var run_bilstm(std::span<const BiLstmLayer> layers, ad::Var x);

}  // namespace mute::nn

#endif  // MUTE_LAYERS_LSTM_H_

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "layers/lstm.h"

#include <cmath>
#include <string>

#include "common/errors.h"

namespace mute::nn {

LstmCellParams LstmCellParams::zeros(std::size_t input_size,
                                     std::size_t hidden_size) {
  return {ad::Tensor({4 * hidden_size, input_size}),
          ad::Tensor({4 * hidden_size, hidden_size}),
          ad::Tensor({4 * hidden_size})};
}

LstmCellParams LstmCellParams::random(std::size_t input_size,
                                      std::size_t hidden_size, Rng& rng) {
  LstmCellParams p = zeros(input_size, hidden_size);
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  for (auto& w : p.w_input.data()) w = rng.uniform(-k, k);
  for (auto& w : p.w_hidden.data()) w = rng.uniform(-k, k);
  for (std::size_t i = hidden_size; i < 2 * hidden_size; ++i) p.bias[i] = 1.0;
  return p;
}

LstmState lstm_zero_state(ad::Tape& tape, std::size_t hidden_size) {
  return {tape.constant(ad::Tensor({hidden_size})),
          tape.constant(ad::Tensor({hidden_size}))};
}

LstmState lstm_cell_step(const LstmCellParams& params, ad::Var x,
                         const LstmState& prev) {
  const std::size_t hidden = params.hidden_size();
  if (x.shape() != ad::Shape{params.input_size()} ||
      prev.h.shape() != ad::Shape{hidden} ||
      prev.c.shape() != ad::Shape{hidden}) {
    throw DimensionError("lstm_cell_step: input " + ad::shape_str(x.shape()) +
                         ", state " + ad::shape_str(prev.h.shape()) +
                         " do not match cell D=" +
                         std::to_string(params.input_size()) +
                         " H=" + std::to_string(hidden));
  }
  ad::Tape& tape = *x.tape();
  ad::Var gates = ad::matvec(tape.param(params.w_input), x) +
                  ad::matvec(tape.param(params.w_hidden), prev.h) +
                  tape.param(params.bias);
  ad::Var in_gate = ad::sigmoid(ad::slice(gates, 0, hidden));
  ad::Var forget_gate = ad::sigmoid(ad::slice(gates, hidden, hidden));
  ad::Var candidate = ad::tanh(ad::slice(gates, 2 * hidden, hidden));
  ad::Var out_gate = ad::sigmoid(ad::slice(gates, 3 * hidden, hidden));
  ad::Var c = forget_gate * prev.c + in_gate * candidate;
  ad::Var h = out_gate * ad::tanh(c);
  return {h, c};
}

ad::Var run_bilstm(std::span<const BiLstmLayer> layers, ad::Var x) {
  if (x.shape().size() != 2 || x.shape()[0] == 0) {
    throw ContractError("run_bilstm: need a non-empty [T x F] sequence, got " +
                        ad::shape_str(x.shape()));
  }
  ad::Tape& tape = *x.tape();
  ad::Var current = x;
  for (const BiLstmLayer& layer : layers) {
    const std::size_t frames = current.shape()[0];
    std::vector<ad::Var> inputs(frames);
    for (std::size_t t = 0; t < frames; ++t) inputs[t] = ad::row(current, t);

    std::vector<ad::Var> fwd(frames), bwd(frames);
    LstmState s = lstm_zero_state(tape, layer.forward.hidden_size());
    for (std::size_t t = 0; t < frames; ++t) {
      s = lstm_cell_step(layer.forward, inputs[t], s);
      fwd[t] = s.h;
    }
    s = lstm_zero_state(tape, layer.backward.hidden_size());
    for (std::size_t t = frames; t-- > 0;) {
      s = lstm_cell_step(layer.backward, inputs[t], s);
      bwd[t] = s.h;
    }
    std::vector<ad::Var> rows(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      rows[t] = ad::concat({fwd[t], bwd[t]});
    }
    current = ad::stack_rows(rows);
  }
  return current;
}

}  // namespace mute::nn

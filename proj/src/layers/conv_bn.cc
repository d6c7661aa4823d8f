// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "layers/conv_bn.h"

#include <cmath>

#include "common/errors.h"

namespace mute::nn {

const char* bn_mode_name(BnMode mode) {
  switch (mode) {
    case BnMode::kTrain: return "train";
    case BnMode::kEval: return "eval";
    case BnMode::kFrozen: return "frozen";
  }
  return "?";
}

BnMode parse_bn_mode(const std::string& name) {
  if (name == "train") return BnMode::kTrain;
  if (name == "eval") return BnMode::kEval;
  if (name == "frozen") return BnMode::kFrozen;
  throw ContractError("unknown batch-norm mode '" + name + "'");
}

BatchNormState BatchNormState::identity(std::size_t channels) {
  BatchNormState s;
  s.scale = ad::Tensor::filled({channels}, 1.0);
  s.shift = ad::Tensor({channels});
  s.running_mean = ad::Tensor({channels});
  s.running_var = ad::Tensor::filled({channels}, 1.0);
  return s;
}

ConvParams ConvParams::random(std::size_t in_features, std::size_t channels,
                              std::size_t kernel, std::size_t stride,
                              std::size_t pad, Rng& rng) {
  ConvParams p;
  p.kernel = kernel;
  p.stride = stride;
  p.pad = pad;
  p.weight = ad::Tensor({kernel * in_features, channels});
  p.bias = ad::Tensor({channels});
  const double k = 1.0 / std::sqrt(static_cast<double>(kernel * in_features));
  for (auto& w : p.weight.data()) w = rng.uniform(-k, k);
  return p;
}

std::size_t conv_output_length(std::size_t frames, std::size_t kernel,
                               std::size_t stride, std::size_t pad) {
  if (frames < kernel) {
    throw ContractError("convolution: " + std::to_string(frames) +
                        " frames is shorter than kernel width " +
                        std::to_string(kernel));
  }
  return (frames + 2 * pad - kernel) / stride + 1;
}

std::vector<ad::Var> conv_bn_forward(const BatchNormState& bn, BnMode mode,
                                     const ConvParams& conv,
                                     std::span<const ad::Var> xs,
                                     BatchStats* stats) {
  if (xs.empty()) throw ContractError("conv_bn_forward: empty batch");
  if (mode == BnMode::kTrain && bn.mode != BnMode::kTrain) {
    throw ContractError("conv_bn_forward: batch-norm state is in " +
                        std::string(bn_mode_name(bn.mode)) +
                        " mode; batch statistics are not allowed");
  }
  ad::Tape& tape = *xs[0].tape();
  std::vector<ad::Var> convolved;
  std::vector<std::size_t> lengths;
  for (const ad::Var& x : xs) {
    if (x.shape().size() != 2 || x.shape()[1] != conv.in_features()) {
      throw DimensionError("conv_bn_forward: input " +
                           ad::shape_str(x.shape()) + " does not have " +
                           std::to_string(conv.in_features()) + " features");
    }
    conv_output_length(x.shape()[0], conv.kernel, conv.stride, conv.pad);
    ad::Var cols = ad::im2col(x, conv.kernel, conv.stride, conv.pad);
    convolved.push_back(ad::add_rowvec(
        ad::matmul(cols, tape.param(conv.weight)), tape.param(conv.bias)));
    lengths.push_back(convolved.back().shape()[0]);
  }
  ad::Var pooled = convolved.size() == 1 ? convolved[0]
                                         : ad::concat_rows(convolved);
  ad::Var normalized;
  if (mode == BnMode::kTrain) {
    BatchStats local;
    normalized = ad::batch_norm_train(pooled, tape.param(bn.scale),
                                      tape.param(bn.shift), bn.eps,
                                      &local.mean, &local.var);
    local.count = pooled.shape()[0];
    if (stats) *stats = std::move(local);
  } else {
    normalized = ad::batch_norm_infer(pooled, tape.param(bn.scale),
                                      tape.param(bn.shift),
                                      bn.running_mean.data(),
                                      bn.running_var.data(), bn.eps);
  }
  ad::Var activated = ad::relu(normalized);
  if (convolved.size() == 1) return {activated};
  std::vector<ad::Var> out;
  std::size_t begin = 0;
  for (std::size_t len : lengths) {
    out.push_back(ad::slice_rows(activated, begin, len));
    begin += len;
  }
  return out;
}

ad::Var conv_bn_forward(BatchNormState& bn, BnMode mode, const ConvParams& conv,
                        ad::Var x) {
  BatchStats stats;
  std::vector<ad::Var> out = conv_bn_forward(bn, mode, conv, {&x, 1}, &stats);
  if (mode == BnMode::kTrain) update_running_stats(bn, stats);
  return out[0];
}

void update_running_stats(BatchNormState& bn, const BatchStats& stats) {
  if (bn.mode != BnMode::kTrain) {
    throw ContractError("update_running_stats: state is in " +
                        std::string(bn_mode_name(bn.mode)) + " mode");
  }
  const double m = bn.momentum;
  const double n = static_cast<double>(stats.count);
  const double correction = stats.count > 1 ? n / (n - 1.0) : 1.0;
  for (std::size_t j = 0; j < stats.mean.size(); ++j) {
    bn.running_mean[j] = (1.0 - m) * bn.running_mean[j] + m * stats.mean[j];
    bn.running_var[j] =
        (1.0 - m) * bn.running_var[j] + m * stats.var[j] * correction;
  }
}

}  // namespace mute::nn

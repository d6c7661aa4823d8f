// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_LAYERS_CONV_BN_H_
#define MUTE_LAYERS_CONV_BN_H_

#include <span>
#include <string>
#include <vector>

#include "autodiff/tape.h"
#include "common/rng.h"

namespace mute::nn {

// kTrain normalizes with batch statistics and updates the running ones.
// kEval and kFrozen both normalize with running statistics and never write
// them; kFrozen marks an encoder whose statistics are pinned for retraining.
enum class BnMode { kTrain, kEval, kFrozen };

const char* bn_mode_name(BnMode mode);
BnMode parse_bn_mode(const std::string& name);

struct BatchNormState {
  ad::Tensor scale;         // [C]
  ad::Tensor shift;         // [C]
  ad::Tensor running_mean;  // [C]
  ad::Tensor running_var;   // [C], entries >= 0
  double momentum = 0.1;
  double eps = 1e-5;
  BnMode mode = BnMode::kTrain;

  static BatchNormState identity(std::size_t channels);
};

// Time convolution with channel mixing. weight is [K*F x C] so one matmul
// maps unfolded windows to channels.
struct ConvParams {
  ad::Tensor weight;  // [K*F x C]
  ad::Tensor bias;    // [C]
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t pad = 1;

  std::size_t in_features() const { return weight.rows() / kernel; }
  std::size_t channels() const { return weight.cols(); }

  static ConvParams random(std::size_t in_features, std::size_t channels,
                           std::size_t kernel, std::size_t stride,
                           std::size_t pad, Rng& rng);
};

std::size_t conv_output_length(std::size_t frames, std::size_t kernel,
                               std::size_t stride, std::size_t pad);

struct BatchStats {
  std::vector<double> mean;
  std::vector<double> var;
  std::size_t count = 0;
};

// conv -> batch norm -> relu for every sequence of a batch. Statistics in
// kTrain mode pool all frames of all sequences; kTrain is only accepted when
// the state itself is in kTrain mode. The state is read-only here;
// the batch statistics are reported through stats for the caller to fold in
// with update_running_stats.
std::vector<ad::Var> conv_bn_forward(const BatchNormState& bn, BnMode mode,
                                     const ConvParams& conv,
                                     std::span<const ad::Var> xs,
                                     BatchStats* stats = nullptr);

// Single-sequence convenience. Updates bn's running statistics when mode is
// kTrain.
ad::Var conv_bn_forward(BatchNormState& bn, BnMode mode, const ConvParams& conv,
                        ad::Var x);

// running <- (1 - momentum) * running + momentum * batch, with the unbiased
// variance when more than one frame was pooled.
void update_running_stats(BatchNormState& bn, const BatchStats& stats);

}  // namespace mute::nn

#endif  // MUTE_LAYERS_CONV_BN_H_

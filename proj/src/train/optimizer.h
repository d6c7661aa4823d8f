// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_TRAIN_OPTIMIZER_H_
#define MUTE_TRAIN_OPTIMIZER_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "autodiff/tensor.h"
#include "model/checkpoint.h"
#include "model/las_model.h"

namespace mute::train {

enum class OptimizerKind { kAdam, kSgd, kEmaSgd };
const char* optimizer_name(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;  // also the gradient-average decay of kEmaSgd
  double beta2 = 0.999;
  double epsilon = 1e-8;
  void validate() const;
};

using PartitionSet = std::array<bool, kPartitionCount>;
PartitionSet all_partitions();
PartitionSet decoder_partitions();
std::string partition_list(const PartitionSet& set);

struct ParamSlot {
  std::string path;
  ad::Tensor first;   // [same shape as the parameter]
  ad::Tensor second;  // Adam only
  std::uint64_t steps = 0;
};

struct OptimizerState {
  std::vector<ParamSlot> slots;  // registry order

  static OptimizerState create(std::span<const ParamEntry> params);
  void save(Archive& archive, const std::string& prefix) const;
  static OptimizerState load(const Archive& archive, const std::string& prefix,
                             std::span<const ParamEntry> params);
};

// Marks allowed parameters as gradient-tracked and every other one as a
// constant, clearing old gradients.
void mask_gradients(std::span<const ParamEntry> params,
                    const PartitionSet& allowed);
void zero_gradients(std::span<const ParamEntry> params);

// Global L2 norm of all gradients; rescales them when it exceeds max_norm
// (max_norm <= 0 disables clipping). Returns the norm before clipping.
double clip_gradients(std::span<const ParamEntry> params, double max_norm);

// One optimizer step. Partitions whose gradients are all zero are left
// untouched, step counters included. A nonzero gradient on a partition
// outside allowed is a ContractError.
void apply_update(std::span<const ParamEntry> params, OptimizerState& state,
                  const OptimizerConfig& config, const PartitionSet& allowed);

// Shadow copy of every parameter: shadow += (1-d)*(param - shadow), so a
// parameter that never moves keeps a bit-identical shadow. With
// warmup the effective decay is min(decay, (1+n)/(10+n)) after n updates.
struct EmaState {
  double decay = 0.999;
  bool warmup = true;
  std::uint64_t updates = 0;
  std::vector<std::string> paths;
  std::vector<ad::Tensor> shadow;

  static EmaState create(std::span<const ParamEntry> params, double decay,
                         bool warmup);
  void update(std::span<const ParamEntry> params);
  // Writes the shadow values into the matching parameters.
  void copy_to(std::span<const ParamEntry> params) const;
  void save(Archive& archive, const std::string& prefix) const;
  static EmaState load(const Archive& archive, const std::string& prefix,
                       std::span<const ParamEntry> params, double decay,
                       bool warmup);
};

void validate_ema_decay(double decay);

}  // namespace mute::train

#endif  // MUTE_TRAIN_OPTIMIZER_H_

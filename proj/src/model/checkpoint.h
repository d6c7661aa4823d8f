// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_MODEL_CHECKPOINT_H_
#define MUTE_MODEL_CHECKPOINT_H_

#include <string>
#include <utility>
#include <vector>

#include "autodiff/tensor.h"
#include "model/fusion_lm.h"
#include "model/las_model.h"

namespace mute {

// Versioned binary container: a kind tag, a config text block, and named
// tensors stored as shape plus raw little-endian doubles (bit-exact).
struct Archive {
  std::string kind;
  std::string config;
  std::vector<std::pair<std::string, ad::Tensor>> tensors;

  void add(const std::string& name, const ad::Tensor& t);
  const ad::Tensor* find(const std::string& name) const;
  const ad::Tensor& get(const std::string& name) const;

  std::string serialize() const;
  static Archive deserialize(const std::string& bytes);
  void save(const std::string& path) const;
  static Archive load(const std::string& path);
};

inline constexpr const char* kModelKind = "las-model";
inline constexpr const char* kLmKind = "fusion-lm";

Archive model_to_archive(LasModel& model);
LasModel model_from_archive(const Archive& archive);
void save_model(LasModel& model, const std::string& path);
LasModel load_model(const std::string& path);

Archive lm_to_archive(FusionLm& lm);
FusionLm lm_from_archive(const Archive& archive);
void save_lm(FusionLm& lm, const std::string& path);
FusionLm load_lm(const std::string& path);

// Copies every parameter and buffer value from src into dst (same config).
void copy_model_values(LasModel& dst, LasModel& src);

}  // namespace mute

#endif  // MUTE_MODEL_CHECKPOINT_H_

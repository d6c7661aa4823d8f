// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_MODEL_CONFIG_H_
#define MUTE_MODEL_CONFIG_H_

#include <string>

#include "common/config_text.h"

namespace mute {

enum class Variant { kBaseline, kMuteZ, kMuteL, kMuteZt, kMuteLt };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

// Text-only steps exist for every variant but the baseline.
inline bool has_text_path(Variant v) { return v != Variant::kBaseline; }
// Variants whose text path runs only through the upper decoder layers.
inline bool is_split(Variant v) {
  return v == Variant::kMuteZt || v == Variant::kMuteLt;
}
inline bool has_learnable_context(Variant v) {
  return v == Variant::kMuteL || v == Variant::kMuteLt;
}

struct ModelConfig {
  std::size_t vocab_size = 19;
  std::size_t feature_dim = 8;
  std::size_t conv_layers = 2;
  std::size_t conv_channels = 24;
  std::size_t conv_kernel = 3;
  std::size_t conv_stride = 2;
  std::size_t encoder_layers = 1;
  std::size_t encoder_hidden = 24;
  std::size_t decoder_layers = 2;
  std::size_t decoder_hidden = 32;
  std::size_t embedding_size = 32;
  std::size_t attention_size = 24;
  Variant variant = Variant::kBaseline;
  // Layers >= text_split form the text-only loop of the split variants.
  std::size_t text_split = 1;

  std::size_t encoder_size() const { return 2 * encoder_hidden; }
  std::size_t conv_pad() const { return conv_kernel / 2; }
  // Shortest input the conv stack accepts.
  std::size_t min_frames() const;
  std::size_t encoded_length(std::size_t frames) const;

  void validate() const;

  // "desk" or "paper-large".
  static ModelConfig preset(const std::string& name);
  // Keys are optional and override the preset named by "preset".
  static ModelConfig read(const ConfigSection* section);
  void write(ConfigSection& section) const;
};

struct LmConfig {
  std::size_t vocab_size = 19;
  std::size_t embedding_size = 32;
  std::size_t hidden = 64;
  std::size_t layers = 1;

  void validate() const;
  // "desk" or "paper-lm".
  static LmConfig preset(const std::string& name);
  static LmConfig read(const ConfigSection* section);
  void write(ConfigSection& section) const;
};

}  // namespace mute

#endif  // MUTE_MODEL_CONFIG_H_

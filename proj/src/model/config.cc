// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "model/config.h"

#include "common/errors.h"
#include "layers/conv_bn.h"

namespace mute {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kMuteZ: return "mute-z";
    case Variant::kMuteL: return "mute-l";
    case Variant::kMuteZt: return "mute-zt";
    case Variant::kMuteLt: return "mute-lt";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::kBaseline, Variant::kMuteZ, Variant::kMuteL,
                    Variant::kMuteZt, Variant::kMuteLt}) {
    if (name == variant_name(v)) return v;
  }
  throw ContractError("unknown variant '" + name +
                      "' (expected baseline, mute-z, mute-l, mute-zt, mute-lt)");
}

std::size_t ModelConfig::min_frames() const {
  for (std::size_t t = 1;; ++t) {
    std::size_t len = t;
    bool ok = true;
    for (std::size_t i = 0; i < conv_layers && ok; ++i) {
      if (len < conv_kernel) {
        ok = false;
      } else {
        len = nn::conv_output_length(len, conv_kernel, conv_stride, conv_pad());
      }
    }
    if (ok) return t;
  }
}

std::size_t ModelConfig::encoded_length(std::size_t frames) const {
  std::size_t t = frames;
  for (std::size_t i = 0; i < conv_layers; ++i) {
    t = nn::conv_output_length(t, conv_kernel, conv_stride, conv_pad());
  }
  return t;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ContractError("model: " + msg); };
  if (vocab_size < 4) fail("vocab_size must include 3 reserved + 1 content");
  if (feature_dim == 0 || conv_channels == 0 || encoder_hidden == 0 ||
      decoder_hidden == 0 || embedding_size == 0 || attention_size == 0) {
    fail("all sizes must be positive");
  }
  if (encoder_layers == 0) fail("encoder_layers must be >= 1");
  if (decoder_layers == 0) fail("decoder_layers must be >= 1");
  if (conv_kernel == 0 || conv_stride == 0) fail("conv kernel/stride must be >= 1");
  if (is_split(variant)) {
    if (text_split < 1 || text_split >= decoder_layers) {
      fail("text_split must satisfy 1 <= k < decoder_layers for " +
           std::string(variant_name(variant)));
    }
    if (embedding_size != decoder_hidden) {
      fail("split variants feed the embedding into layer k, so "
           "embedding_size must equal decoder_hidden");
    }
  }
}

ModelConfig ModelConfig::preset(const std::string& name) {
  ModelConfig c;
  if (name == "desk") return c;
  if (name == "paper-large") {
    c.vocab_size = 32;
    c.feature_dim = 80;
    c.conv_layers = 2;
    c.conv_channels = 32;
    c.encoder_layers = 4;
    c.encoder_hidden = 1024;
    c.decoder_layers = 4;
    c.decoder_hidden = 1024;
    c.embedding_size = 1024;
    c.attention_size = 1024;
    c.text_split = 2;
    return c;
  }
  throw ContractError("unknown model preset '" + name + "'");
}

ModelConfig ModelConfig::read(const ConfigSection* section) {
  SectionReader r(section, "model");
  ModelConfig c = preset(r.str("preset", "desk"));
  c.vocab_size = r.integer("vocab_size", c.vocab_size);
  c.feature_dim = r.integer("feature_dim", c.feature_dim);
  c.conv_layers = r.integer("conv_layers", c.conv_layers);
  c.conv_channels = r.integer("conv_channels", c.conv_channels);
  c.conv_kernel = r.integer("conv_kernel", c.conv_kernel);
  c.conv_stride = r.integer("conv_stride", c.conv_stride);
  c.encoder_layers = r.integer("encoder_layers", c.encoder_layers);
  c.encoder_hidden = r.integer("encoder_hidden", c.encoder_hidden);
  c.decoder_layers = r.integer("decoder_layers", c.decoder_layers);
  c.decoder_hidden = r.integer("decoder_hidden", c.decoder_hidden);
  c.embedding_size = r.integer("embedding_size", c.embedding_size);
  c.attention_size = r.integer("attention_size", c.attention_size);
  c.variant = parse_variant(r.str("variant", variant_name(c.variant)));
  c.text_split = r.integer("text_split", c.text_split);
  r.finish();
  c.validate();
  return c;
}

void ModelConfig::write(ConfigSection& s) const {
  s.set("vocab_size", vocab_size);
  s.set("feature_dim", feature_dim);
  s.set("conv_layers", conv_layers);
  s.set("conv_channels", conv_channels);
  s.set("conv_kernel", conv_kernel);
  s.set("conv_stride", conv_stride);
  s.set("encoder_layers", encoder_layers);
  s.set("encoder_hidden", encoder_hidden);
  s.set("decoder_layers", decoder_layers);
  s.set("decoder_hidden", decoder_hidden);
  s.set("embedding_size", embedding_size);
  s.set("attention_size", attention_size);
  s.set("variant", std::string(variant_name(variant)));
  s.set("text_split", text_split);
}

void LmConfig::validate() const {
  if (vocab_size < 4) throw ContractError("lm: vocab_size too small");
  if (embedding_size == 0 || hidden == 0 || layers == 0) {
    throw ContractError("lm: sizes must be positive");
  }
}

LmConfig LmConfig::preset(const std::string& name) {
  LmConfig c;
  if (name == "desk") return c;
  if (name == "paper-lm") {
    c.vocab_size = 32;
    c.embedding_size = 2048;
    c.hidden = 2048;
    c.layers = 2;
    return c;
  }
  throw ContractError("unknown lm preset '" + name + "'");
}

LmConfig LmConfig::read(const ConfigSection* section) {
  SectionReader r(section, "lm");
  LmConfig c = preset(r.str("preset", "desk"));
  c.vocab_size = r.integer("vocab_size", c.vocab_size);
  c.embedding_size = r.integer("embedding_size", c.embedding_size);
  c.hidden = r.integer("hidden", c.hidden);
  c.layers = r.integer("layers", c.layers);
  r.finish();
  c.validate();
  return c;
}

void LmConfig::write(ConfigSection& s) const {
  s.set("vocab_size", vocab_size);
  s.set("embedding_size", embedding_size);
  s.set("hidden", hidden);
  s.set("layers", layers);
}

}  // namespace mute

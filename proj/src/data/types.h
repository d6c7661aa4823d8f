// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_DATA_TYPES_H_
#define MUTE_DATA_TYPES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "autodiff/tensor.h"

namespace mute::data {

using Token = std::size_t;
using TokenSeq = std::vector<Token>;

inline constexpr Token kPad = 0;
inline constexpr Token kSos = 1;
inline constexpr Token kEos = 2;
inline constexpr Token kFirstContent = 3;

struct Utterance {
  std::string id;
  ad::Tensor features;  // [T x F]
  TokenSeq tokens;      // transcript body, no reserved tokens
};

struct TextSample {
  std::string id;
  TokenSeq tokens;
};

enum class BatchKind { kAudioText, kTextOnly };

const char* batch_kind_name(BatchKind kind);

// Right-padded homogeneous batch. tokens[b] has max_length entries with kPad
// after lengths[b]; mask[b][u] is 1 on real positions.
struct Batch {
  BatchKind kind = BatchKind::kAudioText;
  std::vector<std::string> ids;
  std::vector<TokenSeq> tokens;
  std::vector<std::vector<std::uint8_t>> mask;
  std::vector<std::size_t> lengths;
  // Audio-text only: features padded with zero frames to the longest input.
  std::vector<ad::Tensor> features;
  std::vector<std::size_t> frame_lengths;
  std::size_t max_length = 0;

  std::size_t size() const { return tokens.size(); }
};

}  // namespace mute::data

#endif  // MUTE_DATA_TYPES_H_

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_MODEL_LAS_MODEL_H_
#define MUTE_MODEL_LAS_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "autodiff/tape.h"
#include "common/rng.h"
#include "data/types.h"
#include "layers/attention.h"
#include "layers/conv_bn.h"
#include "layers/lstm.h"
#include "model/config.h"

namespace mute {

enum class Partition : std::uint8_t {
  kEncoder,
  kDecoderAudio,
  kDecoderText,
  kSharedDecoderIo,
  kAttention,
  kLearnableContext,
};
inline constexpr int kPartitionCount = 6;

const char* partition_name(Partition p);

struct ParamEntry {
  std::string path;
  ad::Tensor* tensor;
  Partition partition;
};

struct BufferEntry {
  std::string path;
  ad::Tensor* tensor;
};

struct DecoderState {
  std::vector<nn::LstmState> layers;
};

struct StepOutput {
  ad::Var logits;  // [V]
  DecoderState state;
  ad::Var weights;  // attention weights [T'], audio path only
};

struct LasModel {
  ModelConfig config;
  std::vector<nn::ConvParams> convs;
  std::vector<nn::BatchNormState> norms;
  std::vector<nn::BiLstmLayer> encoder;
  ad::Tensor embedding;   // [V x E]
  std::vector<nn::LstmCellParams> decoder;
  nn::AttentionParams attention;
  ad::Tensor proj_weight;  // [V x H_dec]
  ad::Tensor proj_bias;    // [V]
  ad::Tensor context;      // [H_enc], learnable-context variants only

  static LasModel create(const ModelConfig& config, std::uint64_t seed);
  void init_encoder(Rng& rng);
  void init_decoder(Rng& rng);

  // Trainable tensors with their registry paths and partitions. Pointers
  // refer into this object and are invalidated by copying or moving it.
  std::vector<ParamEntry> parameters();
  // Non-trainable state (batch-norm running statistics).
  std::vector<BufferEntry> buffers();

  void set_bn_mode(nn::BnMode mode);
  nn::BnMode bn_mode() const;
  // First decoder layer that belongs to the text-only loop (N_dec when the
  // variant has no split).
  std::size_t split_layer() const;
  // Input width of decoder layer j.
  std::size_t decoder_input_size(std::size_t j) const;
};

// FNV-1a over the encoder parameters and batch-norm statistics.
std::uint64_t encoder_hash(LasModel& model);
std::uint64_t partition_hash(LasModel& model, Partition p);

// conv+BN stack then BiLSTM stack. In kTrain mode the running statistics of
// the model are updated.
ad::Var encode(LasModel& model, ad::Tape& tape, const ad::Tensor& features,
               nn::BnMode mode);
// Batched form; batch-norm statistics pool the frames of all sequences.
std::vector<ad::Var> encode_batch(LasModel& model, ad::Tape& tape,
                                  std::span<const ad::Tensor* const> features,
                                  nn::BnMode mode);

// Read-only encode for decoding: running statistics normalize regardless of
// the stored mode.
ad::Var encode_inference(const LasModel& model, ad::Tape& tape,
                         const ad::Tensor& features);

DecoderState initial_audio_state(const LasModel& model, ad::Tape& tape);
DecoderState initial_text_state(const LasModel& model, ad::Tape& tape);

// One teacher-forced or free-running step on the audio-text path.
StepOutput decode_step_audio(const LasModel& model, data::Token prev,
                             const DecoderState& state,
                             const nn::AttentionKeys& keys);
// Same step with an explicit context vector in place of attention.
StepOutput decode_step_with_context(const LasModel& model, data::Token prev,
                                    const DecoderState& state,
                                    ad::Var context);
// Text-only path: zero or learnable context for mute-z/l; only the layers
// >= k for mute-zt/lt.
StepOutput decode_step_text(const LasModel& model, ad::Tape& tape,
                            data::Token prev, const DecoderState& state);

// Teacher-forced mean cross-entropy over every non-pad target position,
// targets being the transcript followed by end-of-sequence.
ad::Var loss_audio_text(LasModel& model, ad::Tape& tape,
                        const data::Batch& batch, nn::BnMode mode);
// Same loss from already-encoded inputs (one [T' x H_enc] per example).
ad::Var loss_from_encoded(const LasModel& model, ad::Tape& tape,
                          std::span<const ad::Var> encoded,
                          const data::Batch& batch);
ad::Var loss_text_only(const LasModel& model, ad::Tape& tape,
                       const data::Batch& batch);

// Assembles per-example step logits into one masked cross-entropy. rows[b]
// holds the logits of example b for positions 0..lengths[b].
ad::Var padded_cross_entropy(ad::Tape& tape,
                             const std::vector<std::vector<ad::Var>>& rows,
                             const data::Batch& batch, std::size_t vocab);

}  // namespace mute

#endif  // MUTE_MODEL_LAS_MODEL_H_

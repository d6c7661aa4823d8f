// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "model/las_model.h"

#include <cmath>
#include <cstring>

#include "common/errors.h"
#include "layers/embedding.h"

namespace mute {

const char* partition_name(Partition p) {
  switch (p) {
    case Partition::kEncoder: return "encoder";
    case Partition::kDecoderAudio: return "decoder-audio";
    case Partition::kDecoderText: return "decoder-text";
    case Partition::kSharedDecoderIo: return "shared-decoder-io";
    case Partition::kAttention: return "attention";
    case Partition::kLearnableContext: return "learnable-context";
  }
  return "?";
}

LasModel LasModel::create(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  LasModel m;
  m.config = config;
  Rng enc_rng(mix_seed(seed, 1));
  Rng dec_rng(mix_seed(seed, 2));
  m.init_encoder(enc_rng);
  m.init_decoder(dec_rng);
  return m;
}

void LasModel::init_encoder(Rng& rng) {
  const ModelConfig& c = config;
  convs.clear();
  norms.clear();
  encoder.clear();
  std::size_t in = c.feature_dim;
  for (std::size_t i = 0; i < c.conv_layers; ++i) {
    convs.push_back(nn::ConvParams::random(in, c.conv_channels, c.conv_kernel,
                                           c.conv_stride, c.conv_pad(), rng));
    norms.push_back(nn::BatchNormState::identity(c.conv_channels));
    in = c.conv_channels;
  }
  for (std::size_t i = 0; i < c.encoder_layers; ++i) {
    nn::BiLstmLayer layer;
    layer.forward = nn::LstmCellParams::random(in, c.encoder_hidden, rng);
    layer.backward = nn::LstmCellParams::random(in, c.encoder_hidden, rng);
    encoder.push_back(std::move(layer));
    in = c.encoder_size();
  }
}

void LasModel::init_decoder(Rng& rng) {
  const ModelConfig& c = config;
  embedding = ad::Tensor({c.vocab_size, c.embedding_size});
  const double ke = 1.0 / std::sqrt(static_cast<double>(c.embedding_size));
  for (auto& w : embedding.data()) w = rng.uniform(-ke, ke);
  decoder.clear();
  for (std::size_t j = 0; j < c.decoder_layers; ++j) {
    decoder.push_back(
        nn::LstmCellParams::random(decoder_input_size(j), c.decoder_hidden, rng));
  }
  attention = nn::AttentionParams::random(c.decoder_hidden, c.encoder_size(),
                                          c.attention_size, rng);
  proj_weight = ad::Tensor({c.vocab_size, c.decoder_hidden});
  proj_bias = ad::Tensor({c.vocab_size});
  const double kp = 1.0 / std::sqrt(static_cast<double>(c.decoder_hidden));
  for (auto& w : proj_weight.data()) w = rng.uniform(-kp, kp);
  context = has_learnable_context(c.variant) ? ad::Tensor({c.encoder_size()})
                                             : ad::Tensor();
}

std::size_t LasModel::split_layer() const {
  return is_split(config.variant) ? config.text_split : config.decoder_layers;
}

std::size_t LasModel::decoder_input_size(std::size_t j) const {
  if (j == 0) return config.embedding_size + config.encoder_size();
  if (is_split(config.variant) && j == config.text_split &&
      config.variant == Variant::kMuteLt) {
    return config.decoder_hidden + config.encoder_size();
  }
  return config.decoder_hidden;
}

namespace {

void add_cell(std::vector<ParamEntry>& out, const std::string& prefix,
              nn::LstmCellParams& cell, Partition p) {
  out.push_back({prefix + ".w_input", &cell.w_input, p});
  out.push_back({prefix + ".w_hidden", &cell.w_hidden, p});
  out.push_back({prefix + ".bias", &cell.bias, p});
}

}  // namespace

std::vector<ParamEntry> LasModel::parameters() {
  std::vector<ParamEntry> out;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const std::string p = "encoder.conv" + std::to_string(i);
    out.push_back({p + ".weight", &convs[i].weight, Partition::kEncoder});
    out.push_back({p + ".bias", &convs[i].bias, Partition::kEncoder});
    out.push_back({p + ".bn.scale", &norms[i].scale, Partition::kEncoder});
    out.push_back({p + ".bn.shift", &norms[i].shift, Partition::kEncoder});
  }
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    const std::string p = "encoder.lstm" + std::to_string(i);
    add_cell(out, p + ".fwd", encoder[i].forward, Partition::kEncoder);
    add_cell(out, p + ".bwd", encoder[i].backward, Partition::kEncoder);
  }
  out.push_back({"decoder.embedding", &embedding, Partition::kSharedDecoderIo});
  const std::size_t split = split_layer();
  for (std::size_t j = 0; j < decoder.size(); ++j) {
    add_cell(out, "decoder.lstm" + std::to_string(j), decoder[j],
             j < split ? Partition::kDecoderAudio : Partition::kDecoderText);
  }
  out.push_back({"decoder.attention.query_proj", &attention.query_proj,
                 Partition::kAttention});
  out.push_back({"decoder.attention.key_proj", &attention.key_proj,
                 Partition::kAttention});
  out.push_back({"decoder.attention.energy", &attention.energy,
                 Partition::kAttention});
  out.push_back({"decoder.proj.weight", &proj_weight,
                 Partition::kSharedDecoderIo});
  out.push_back({"decoder.proj.bias", &proj_bias, Partition::kSharedDecoderIo});
  if (has_learnable_context(config.variant)) {
    out.push_back({"decoder.context", &context, Partition::kLearnableContext});
  }
  return out;
}

std::vector<BufferEntry> LasModel::buffers() {
  std::vector<BufferEntry> out;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    const std::string p = "encoder.conv" + std::to_string(i) + ".bn";
    out.push_back({p + ".running_mean", &norms[i].running_mean});
    out.push_back({p + ".running_var", &norms[i].running_var});
  }
  return out;
}

void LasModel::set_bn_mode(nn::BnMode mode) {
  for (auto& n : norms) n.mode = mode;
}

nn::BnMode LasModel::bn_mode() const {
  return norms.empty() ? nn::BnMode::kTrain : norms[0].mode;
}

namespace {

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

void fnv_tensor(std::uint64_t& h, const std::string& path,
                const ad::Tensor& t) {
  fnv(h, path.data(), path.size());
  fnv(h, t.data().data(), t.size() * sizeof(double));
}

}  // namespace

std::uint64_t partition_hash(LasModel& model, Partition p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : model.parameters()) {
    if (e.partition == p) fnv_tensor(h, e.path, *e.tensor);
  }
  if (p == Partition::kEncoder) {
    for (const auto& e : model.buffers()) fnv_tensor(h, e.path, *e.tensor);
  }
  return h;
}

std::uint64_t encoder_hash(LasModel& model) {
  return partition_hash(model, Partition::kEncoder);
}

namespace {

std::vector<ad::Var> run_encoder(const LasModel& model, ad::Tape& tape,
                                 std::span<const ad::Tensor* const> features,
                                 nn::BnMode mode, LasModel* update) {
  if (features.empty()) throw ContractError("encode: empty batch");
  std::vector<ad::Var> xs;
  for (const ad::Tensor* f : features) {
    if (f->rank() != 2 || f->cols() != model.config.feature_dim) {
      throw DimensionError("encode: features " + ad::shape_str(f->shape()) +
                           " do not have F=" +
                           std::to_string(model.config.feature_dim));
    }
    if (f->rows() < model.config.min_frames()) {
      throw ContractError("encode: " + std::to_string(f->rows()) +
                          " frames is shorter than the minimum " +
                          std::to_string(model.config.min_frames()));
    }
    xs.push_back(tape.constant(*f));
  }
  for (std::size_t i = 0; i < model.convs.size(); ++i) {
    nn::BatchStats stats;
    xs = nn::conv_bn_forward(model.norms[i], mode, model.convs[i], xs,
                             update ? &stats : nullptr);
    if (update) nn::update_running_stats(update->norms[i], stats);
  }
  for (auto& x : xs) x = nn::run_bilstm(model.encoder, x);
  return xs;
}

}  // namespace

std::vector<ad::Var> encode_batch(LasModel& model, ad::Tape& tape,
                                  std::span<const ad::Tensor* const> features,
                                  nn::BnMode mode) {
  return run_encoder(model, tape, features, mode,
                     mode == nn::BnMode::kTrain ? &model : nullptr);
}

ad::Var encode_inference(const LasModel& model, ad::Tape& tape,
                         const ad::Tensor& features) {
  const ad::Tensor* f = &features;
  const nn::BnMode mode = model.bn_mode() == nn::BnMode::kTrain
                              ? nn::BnMode::kEval
                              : model.bn_mode();
  return run_encoder(model, tape, std::span<const ad::Tensor* const>(&f, 1),
                     mode, nullptr)[0];
}

ad::Var encode(LasModel& model, ad::Tape& tape, const ad::Tensor& features,
               nn::BnMode mode) {
  const ad::Tensor* f = &features;
  return encode_batch(model, tape, std::span<const ad::Tensor* const>(&f, 1),
                      mode)[0];
}

namespace {

DecoderState zero_state(const LasModel& model, ad::Tape& tape,
                        std::size_t layers) {
  DecoderState s;
  for (std::size_t j = 0; j < layers; ++j) {
    s.layers.push_back(nn::lstm_zero_state(tape, model.config.decoder_hidden));
  }
  return s;
}

void check_state(const DecoderState& state, std::size_t expected) {
  if (state.layers.size() != expected) {
    throw ContractError("decoder state has " +
                        std::to_string(state.layers.size()) +
                        " layers, expected " + std::to_string(expected));
  }
}

// Runs decoder layers [first, N) with x feeding layer first.
StepOutput run_layers(const LasModel& model, ad::Tape& tape, ad::Var x,
                      const DecoderState& state, std::size_t first) {
  const std::size_t n = model.config.decoder_layers;
  const std::size_t split = model.split_layer();
  const bool inject_zero_slot = model.config.variant == Variant::kMuteLt;
  StepOutput out;
  for (std::size_t j = first; j < n; ++j) {
    if (j > first) {
      x = out.state.layers.back().h;
      if (inject_zero_slot && j == split) {
        x = ad::concat(
            {x, tape.constant(ad::Tensor({model.config.encoder_size()}))});
      }
    }
    out.state.layers.push_back(
        nn::lstm_cell_step(model.decoder[j], x, state.layers[j - first]));
  }
  out.logits = nn::project(model.proj_weight, model.proj_bias,
                           out.state.layers.back().h);
  return out;
}

}  // namespace

DecoderState initial_audio_state(const LasModel& model, ad::Tape& tape) {
  return zero_state(model, tape, model.config.decoder_layers);
}

DecoderState initial_text_state(const LasModel& model, ad::Tape& tape) {
  return zero_state(model, tape,
                    model.config.decoder_layers - (is_split(model.config.variant)
                                                       ? model.split_layer()
                                                       : 0));
}

StepOutput decode_step_with_context(const LasModel& model, data::Token prev,
                                    const DecoderState& state,
                                    ad::Var context) {
  check_state(state, model.config.decoder_layers);
  ad::Tape& tape = *context.tape();
  ad::Var emb = nn::embed(tape, model.embedding, prev);
  return run_layers(model, tape, ad::concat({emb, context}), state, 0);
}

StepOutput decode_step_audio(const LasModel& model, data::Token prev,
                             const DecoderState& state,
                             const nn::AttentionKeys& keys) {
  check_state(state, model.config.decoder_layers);
  nn::AttentionResult att =
      nn::attention_step(model.attention, keys, state.layers[0].h);
  StepOutput out = decode_step_with_context(model, prev, state, att.context);
  out.weights = att.weights;
  return out;
}

StepOutput decode_step_text(const LasModel& model, ad::Tape& tape,
                            data::Token prev, const DecoderState& state) {
  const Variant v = model.config.variant;
  if (!has_text_path(v)) {
    throw ContractError("decode_step_text: the baseline variant has no "
                        "text-only path");
  }
  ad::Var ctx = has_learnable_context(v)
                    ? tape.param(model.context)
                    : tape.constant(ad::Tensor({model.config.encoder_size()}));
  if (!is_split(v)) return decode_step_with_context(model, prev, state, ctx);
  const std::size_t k = model.split_layer();
  check_state(state, model.config.decoder_layers - k);
  ad::Var x = nn::embed(tape, model.embedding, prev);
  if (v == Variant::kMuteLt) x = ad::concat({x, ctx});
  return run_layers(model, tape, x, state, k);
}

ad::Var padded_cross_entropy(ad::Tape& tape,
                             const std::vector<std::vector<ad::Var>>& rows,
                             const data::Batch& batch, std::size_t vocab) {
  const std::size_t positions = batch.max_length + 1;
  ad::Var pad_row;
  std::vector<ad::Var> all;
  std::vector<std::size_t> targets;
  std::vector<std::uint8_t> mask;
  all.reserve(rows.size() * positions);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const std::size_t len = batch.lengths[b];
    for (std::size_t u = 0; u < positions; ++u) {
      if (u <= len) {
        all.push_back(rows[b][u]);
        targets.push_back(u < len ? batch.tokens[b][u] : data::kEos);
        mask.push_back(1);
      } else {
        if (!pad_row.valid()) pad_row = tape.constant(ad::Tensor({vocab}));
        all.push_back(pad_row);
        targets.push_back(data::kPad);
        mask.push_back(0);
      }
    }
  }
  return ad::cross_entropy(ad::stack_rows(all), targets, mask);
}

namespace {

void check_batch(const data::Batch& batch, data::BatchKind kind,
                 const char* who) {
  if (batch.size() == 0) throw ContractError(std::string(who) + ": empty batch");
  if (batch.kind != kind) {
    throw ContractError(std::string(who) + ": expected a " +
                        data::batch_kind_name(kind) + " batch, got " +
                        data::batch_kind_name(batch.kind));
  }
  if (batch.lengths.size() != batch.size()) {
    throw ContractError(std::string(who) + ": batch lengths missing");
  }
}

}  // namespace

ad::Var loss_from_encoded(const LasModel& model, ad::Tape& tape,
                          std::span<const ad::Var> encoded,
                          const data::Batch& batch) {
  check_batch(batch, data::BatchKind::kAudioText, "loss_audio_text");
  if (encoded.size() != batch.size()) {
    throw ContractError("loss_audio_text: encoder outputs do not match batch");
  }
  std::vector<std::vector<ad::Var>> rows(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    nn::AttentionKeys keys = nn::prepare_attention(model.attention, encoded[b]);
    DecoderState state = initial_audio_state(model, tape);
    data::Token prev = data::kSos;
    for (std::size_t u = 0; u <= batch.lengths[b]; ++u) {
      StepOutput out = decode_step_audio(model, prev, state, keys);
      rows[b].push_back(out.logits);
      state = std::move(out.state);
      if (u < batch.lengths[b]) prev = batch.tokens[b][u];
    }
  }
  return padded_cross_entropy(tape, rows, batch, model.config.vocab_size);
}

ad::Var loss_audio_text(LasModel& model, ad::Tape& tape,
                        const data::Batch& batch, nn::BnMode mode) {
  check_batch(batch, data::BatchKind::kAudioText, "loss_audio_text");
  if (batch.features.size() != batch.size() ||
      batch.frame_lengths.size() != batch.size()) {
    throw ContractError("loss_audio_text: every example needs features");
  }
  std::vector<ad::Tensor> trimmed;
  trimmed.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const ad::Tensor& f = batch.features[b];
    const std::size_t frames = batch.frame_lengths[b];
    if (f.empty() || frames == 0 || frames > f.rows()) {
      throw ContractError("loss_audio_text: example " + batch.ids[b] +
                          " is missing features");
    }
    if (frames == f.rows()) {
      trimmed.push_back(f);
    } else {
      std::vector<double> data(f.data().begin(),
                               f.data().begin() + frames * f.cols());
      trimmed.emplace_back(ad::Shape{frames, f.cols()}, std::move(data));
    }
  }
  std::vector<const ad::Tensor*> ptrs;
  for (const auto& t : trimmed) ptrs.push_back(&t);
  std::vector<ad::Var> encoded = encode_batch(model, tape, ptrs, mode);
  return loss_from_encoded(model, tape, encoded, batch);
}

ad::Var loss_text_only(const LasModel& model, ad::Tape& tape,
                       const data::Batch& batch) {
  if (!has_text_path(model.config.variant)) {
    throw ContractError("loss_text_only: the baseline variant has no "
                        "text-only path");
  }
  check_batch(batch, data::BatchKind::kTextOnly, "loss_text_only");
  std::vector<std::vector<ad::Var>> rows(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    DecoderState state = initial_text_state(model, tape);
    data::Token prev = data::kSos;
    for (std::size_t u = 0; u <= batch.lengths[b]; ++u) {
      StepOutput out = decode_step_text(model, tape, prev, state);
      rows[b].push_back(out.logits);
      state = std::move(out.state);
      if (u < batch.lengths[b]) prev = batch.tokens[b][u];
    }
  }
  return padded_cross_entropy(tape, rows, batch, model.config.vocab_size);
}

}  // namespace mute

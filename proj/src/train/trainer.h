// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_TRAIN_TRAINER_H_
#define MUTE_TRAIN_TRAINER_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common/config_text.h"
#include "common/rng.h"
#include "data/types.h"
#include "model/checkpoint.h"
#include "model/las_model.h"
#include "train/optimizer.h"

namespace mute::train {

enum class Selection { kWer, kLoss };

struct TrainConfig {
  int stage = 1;
  double ratio = 0.0;  // probability of a text-only step, stage 2 only
  OptimizerConfig optimizer;
  double clip_norm = 5.0;
  double ema_decay = 0.999;
  bool ema_warmup = true;
  std::size_t audio_batch = 8;
  std::size_t text_batch = 8;
  std::size_t steps = 1000;
  std::uint64_t seed = 1;
  std::size_t eval_every = 100;
  std::size_t checkpoint_every = 0;  // 0: no intermediate trainer state
  bool reinit_decoder = true;
  std::size_t max_decode_length = 24;
  Selection selection = Selection::kWer;

  void validate() const;
  // stage is implied by the section and not read from it.
  static TrainConfig read(const ConfigSection* section, int stage);
  void write(ConfigSection& section) const;
};

data::BatchKind sample_batch_type(Rng& rng, double ratio);

// Encoder (parameters and batch-norm statistics) kept from stage 1, decoder
// side freshly initialized (or carried over when reinit is false), variant
// switched, batch norm frozen.
LasModel reinit_decoder_for_stage2(const LasModel& stage1, Variant variant,
                                   std::uint64_t seed, bool reinit = true);

struct TrainData {
  std::span<const data::Utterance> train;
  std::span<const data::Utterance> valid;
  std::span<const data::TextSample> text;
};

struct LogRow {
  std::size_t step = 0;
  int stage = 1;
  double ratio = 0.0;
  std::size_t audio_steps = 0;  // cumulative
  std::size_t text_steps = 0;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double audio_loss = std::numeric_limits<double>::quiet_NaN();
  double text_loss = std::numeric_limits<double>::quiet_NaN();
  double valid_loss = 0.0;
  double valid_wer = 0.0;
  bool best = false;
};

std::string log_header();
std::string render_log_row(const LogRow& row);
std::string render_log(const std::vector<LogRow>& rows);
std::vector<LogRow> parse_log(const std::string& text);

// Shuffled passes over [0, n); a batch never straddles two passes.
class EpochSampler {
 public:
  EpochSampler() = default;
  EpochSampler(std::size_t n, std::uint64_t seed);
  std::vector<std::size_t> next(std::size_t count);

  void save(Archive& archive, ConfigSection& progress,
            const std::string& name) const;
  void load(const Archive& archive, const ConfigSection* progress,
            const std::string& name);

 private:
  void reshuffle();
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

struct Evaluation {
  double loss = 0.0;
  double wer = 0.0;
};

// Teacher-forced loss and greedy WER of model on utterances.
Evaluation evaluate_model(const LasModel& model,
                          std::span<const data::Utterance> utts,
                          std::size_t max_length);

// Token-level corpus WER of greedy transcripts.
double greedy_wer(const LasModel& model, std::span<const data::Utterance> utts,
                  std::size_t max_length);

inline constexpr const char* kTrainerStateKind = "trainer-state";

class Trainer {
 public:
  Trainer(LasModel model, const TrainConfig& config, TrainData data);
  static Trainer resume(const Archive& state, TrainData data);

  // Runs until the configured step count or stop_at, evaluating on the
  // configured cadence (and before the first step).
  void run(std::size_t stop_at = std::numeric_limits<std::size_t>::max());
  void train_step();
  LogRow evaluate();

  Archive state_archive();
  // Trainer state is written here on the checkpoint cadence and whenever
  // run() stops early.
  void set_state_path(std::string path) { state_path_ = std::move(path); }

  std::size_t step() const { return step_; }
  bool done() const { return step_ >= config_.steps; }
  const TrainConfig& config() const { return config_; }
  LasModel& model() { return model_; }
  // EMA-shadow parameters at the best validation point.
  LasModel& best_model() { return best_; }
  LasModel shadow_model();
  const std::vector<LogRow>& log() const { return log_; }
  std::size_t best_step() const { return best_step_; }
  double last_loss() const { return last_loss_; }
  data::BatchKind last_kind() const { return last_kind_; }

 private:
  void prepare();
  PartitionSet allowed() const;

  LasModel model_;
  TrainConfig config_;
  TrainData data_;
  OptimizerState opt_;
  EmaState ema_;
  LasModel best_;
  Rng type_rng_;
  EpochSampler audio_sampler_;
  EpochSampler text_sampler_;
  std::vector<ad::Tensor> train_cache_;  // stage 2 encoder outputs
  std::size_t step_ = 0;
  std::size_t audio_steps_ = 0;
  std::size_t text_steps_ = 0;
  double sum_audio_ = 0.0;
  double sum_text_ = 0.0;
  std::size_t n_audio_ = 0;
  std::size_t n_text_ = 0;
  double best_wer_ = std::numeric_limits<double>::infinity();
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t best_step_ = 0;
  double last_loss_ = 0.0;
  data::BatchKind last_kind_ = data::BatchKind::kAudioText;
  std::vector<LogRow> log_;
  std::string state_path_;
};

}  // namespace mute::train

#endif  // MUTE_TRAIN_TRAINER_H_

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_EXPERIMENT_COMMANDS_H_
#define MUTE_EXPERIMENT_COMMANDS_H_

#include <cstddef>
#include <limits>
#include <string>

#include "data/corpus.h"
#include "experiment/config.h"

namespace mute::experiment {

inline constexpr const char* kBestCheckpoint = "best.ckpt";
inline constexpr const char* kStateCheckpoint = "state.ckpt";
inline constexpr const char* kTrainLog = "train.log";
inline constexpr const char* kLmCheckpoint = "lm.ckpt";
inline constexpr const char* kLmLog = "lm.log";
inline constexpr const char* kNbestFile = "nbest.tsv";
inline constexpr const char* kReportFile = "report.txt";

// Every command writes its resolved config (with [run] filled in) to
// out_dir/config.ini and all outputs under out_dir.

// Corpus directory per the data file formats.
void cmd_generate(ExperimentConfig config, const std::string& out_dir);

struct TrainOptions {
  bool resume = false;
  // Stop after this many total steps, leaving a resumable state file.
  std::size_t stop_at = std::numeric_limits<std::size_t>::max();
};

// Stage from [run] stage; stage 2 starts from [run] init_checkpoint and
// trains [model] variant at [stage2] ratio.
void cmd_train(ExperimentConfig config, const std::string& out_dir,
               const TrainOptions& options = {});

// Fusion LM on the text corpus, selected by validation-transcript loss.
void cmd_train_lm(ExperimentConfig config, const std::string& out_dir);

// N-best lists of [run] checkpoint over [run] manifest with [decode]
// settings, fused with [run] lm_checkpoint when given.
void cmd_decode(ExperimentConfig config, const std::string& out_dir);

// WER report of [run] nbest against [run] manifest.
void cmd_score(ExperimentConfig config, const std::string& out_dir);

// Corpus of [run] corpus_dir, or generated in memory from spec.
data::Corpora obtain_corpus(const ExperimentConfig& config,
                            const data::CorpusSpec& spec);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace mute::experiment

#endif  // MUTE_EXPERIMENT_COMMANDS_H_

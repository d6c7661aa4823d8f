// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_EXPERIMENT_CONFIG_H_
#define MUTE_EXPERIMENT_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "common/config_text.h"
#include "data/corpus.h"
#include "model/config.h"
#include "search/search.h"
#include "train/lm_trainer.h"
#include "train/trainer.h"

namespace mute::experiment {

struct DecodeConfig {
  std::size_t beam = search::kDefaultBeam;
  search::FusionConfig fusion;
  std::size_t max_length = search::kDefaultMaxLength;

  void validate() const;
  static DecodeConfig read(const ConfigSection* section);
  void write(ConfigSection& section) const;
};

struct SweepConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> ratios{0.0, 0.2, 0.4, 0.6, 0.8};
  std::vector<Variant> variants{Variant::kMuteL};
  std::size_t jobs = 0;  // 0: one per hardware thread
  // Each seed draws its own corpus (corpus seed = sweep seed); otherwise the
  // [corpus] seed is shared by every cell.
  bool corpus_per_seed = true;
};

// Inputs of one command invocation. Recorded in the resolved config so a
// rerun from that file needs no further flags.
struct RunSpec {
  std::string command;
  int stage = 1;
  std::string corpus_dir;       // empty: generate in memory from [corpus]
  std::string init_checkpoint;  // stage-1 model for stage 2
  std::string checkpoint;       // model to decode
  std::string manifest;
  std::string lm_checkpoint;
  std::string vocab;  // empty: vocab.txt beside the manifest, else synthetic
  std::string nbest;
  bool per_utterance = true;

  static RunSpec read(const ConfigSection* section);
  void write(ConfigSection& section) const;
};

struct ExperimentConfig {
  std::string output_dir;
  data::CorpusSpec corpus;
  ModelConfig model;
  LmConfig lm;
  train::LmTrainConfig lm_train;
  train::TrainConfig stage1;
  train::TrainConfig stage2;
  DecodeConfig decode;
  SweepConfig sweep;
  RunSpec run;

  ExperimentConfig();

  // Vocabulary and feature sizes of the model and lm follow the corpus;
  // explicit values that disagree are a ContractError.
  static ExperimentConfig from_file(const ConfigFile& file);
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  ConfigFile to_file() const;
  std::string render() const;
  void validate() const;

  data::CorpusSpec corpus_for_seed(std::uint64_t seed) const;
};

inline constexpr const char* kResolvedConfigName = "config.ini";
inline constexpr const char* kOutputRootEnv = "MUTE_OUTPUT_ROOT";

// Explicit directory, else [experiment] output_dir, else
// $MUTE_OUTPUT_ROOT/<command>, else runs/<command>.
std::string resolve_output_dir(const std::string& explicit_dir,
                               const ExperimentConfig& config,
                               const std::string& command);

std::vector<double> parse_ratio_list(const std::string& text);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<Variant> parse_variant_list(const std::string& text);
std::string render_ratio_list(const std::vector<double>& ratios);
std::string render_seed_list(const std::vector<std::uint64_t>& seeds);
std::string render_variant_list(const std::vector<Variant>& variants);

}  // namespace mute::experiment

#endif  // MUTE_EXPERIMENT_CONFIG_H_

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "experiment/commands.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "common/errors.h"
#include "data/io.h"
#include "model/checkpoint.h"
#include "scoring/scoring.h"
#include "search/nbest.h"
#include "search/search.h"
#include "train/lm_trainer.h"
#include "train/trainer.h"

namespace mute::experiment {

namespace fs = std::filesystem;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

namespace {

std::string join(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

void prepare_output(const std::string& out_dir, ExperimentConfig& config,
                    const char* command) {
  if (out_dir.empty()) throw ContractError("no output directory given");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir);
  }
  config.run.command = command;
  write_file(join(out_dir, kResolvedConfigName), config.render());
}

data::Vocabulary resolve_vocab(const ExperimentConfig& config,
                               std::size_t fallback_size) {
  if (!config.run.vocab.empty()) return data::Vocabulary::load(config.run.vocab);
  if (!config.run.manifest.empty()) {
    const fs::path beside = fs::path(config.run.manifest).parent_path() / "vocab.txt";
    if (fs::exists(beside)) return data::Vocabulary::load(beside.string());
  }
  if (fallback_size > data::kFirstContent) {
    return data::Vocabulary::synthetic(fallback_size - data::kFirstContent);
  }
  throw ContractError("no vocabulary: pass one or keep vocab.txt beside the "
                      "manifest");
}

std::vector<data::TextSample> transcripts_of(
    const std::vector<data::Utterance>& utts) {
  std::vector<data::TextSample> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back({u.id, u.tokens});
  return out;
}

void check_model_matches(const ModelConfig& got, const ModelConfig& want) {
  ConfigSection a, b;
  ModelConfig g = got, w = want;
  g.variant = w.variant;
  g.write(a);
  w.write(b);
  if (a.entries != b.entries) {
    throw ContractError("the stage-1 checkpoint's model architecture differs "
                        "from the [model] section");
  }
}

}  // namespace

data::Corpora obtain_corpus(const ExperimentConfig& config,
                            const data::CorpusSpec& spec) {
  if (config.run.corpus_dir.empty()) return data::generate_corpora(spec);
  data::Corpora c = data::load_corpus(config.run.corpus_dir);
  if (c.vocab.size() != spec.vocab_size()) {
    throw ContractError("corpus in " + config.run.corpus_dir + " has " +
                        std::to_string(c.vocab.size()) +
                        " vocabulary entries, config expects " +
                        std::to_string(spec.vocab_size()));
  }
  return c;
}

void cmd_generate(ExperimentConfig config, const std::string& out_dir) {
  prepare_output(out_dir, config, "generate");
  data::write_corpus(out_dir, data::generate_corpora(config.corpus));
}

void cmd_train(ExperimentConfig config, const std::string& out_dir,
               const TrainOptions& options) {
  const int stage = config.run.stage;
  if (stage == 2 && config.run.init_checkpoint.empty()) {
    throw ContractError("stage 2 requires a stage-1 checkpoint");
  }
  if (stage == 1) config.stage1.ratio = 0.0;
  prepare_output(out_dir, config, "train");
  const train::TrainConfig& tc = stage == 1 ? config.stage1 : config.stage2;
  data::Corpora corpus = obtain_corpus(config, config.corpus);
  train::TrainData td{corpus.train, corpus.valid, corpus.text};
  const std::string state_path = join(out_dir, kStateCheckpoint);

  std::optional<train::Trainer> trainer;
  if (options.resume && fs::exists(state_path)) {
    trainer.emplace(train::Trainer::resume(Archive::load(state_path), td));
    std::ostringstream want, got;
    ConfigSection a, b;
    tc.write(a);
    trainer->config().write(b);
    if (a.entries != b.entries) {
      throw ContractError("state file " + state_path +
                          " was written with a different training config");
    }
  } else if (stage == 1) {
    trainer.emplace(LasModel::create(config.model, tc.seed), tc, td);
  } else {
    LasModel init = load_model(config.run.init_checkpoint);
    check_model_matches(init.config, config.model);
    trainer.emplace(train::reinit_decoder_for_stage2(
                        init, config.model.variant, tc.seed, tc.reinit_decoder),
                    tc, td);
  }
  trainer->set_state_path(state_path);
  trainer->run(options.stop_at);
  write_file(join(out_dir, kTrainLog), train::render_log(trainer->log()));
  if (!trainer->done()) return;
  trainer->state_archive().save(state_path);
  save_model(trainer->best_model(), join(out_dir, kBestCheckpoint));
}

void cmd_train_lm(ExperimentConfig config, const std::string& out_dir) {
  prepare_output(out_dir, config, "train-lm");
  data::Corpora corpus = obtain_corpus(config, config.corpus);
  FusionLm lm = FusionLm::create(config.lm, config.lm_train.seed);
  const std::vector<data::TextSample> valid = transcripts_of(corpus.valid);
  const auto log = train::train_lm(lm, config.lm_train, corpus.text, valid);
  write_file(join(out_dir, kLmLog), train::render_lm_log(log));
  save_lm(lm, join(out_dir, kLmCheckpoint));
}

void cmd_decode(ExperimentConfig config, const std::string& out_dir) {
  if (config.run.checkpoint.empty()) {
    throw ContractError("decode needs a model checkpoint");
  }
  if (config.run.manifest.empty()) throw ContractError("decode needs a manifest");
  prepare_output(out_dir, config, "decode");
  LasModel model = load_model(config.run.checkpoint);
  const data::Vocabulary vocab = resolve_vocab(config, model.config.vocab_size);
  if (vocab.size() != model.config.vocab_size) {
    throw ContractError("vocabulary has " + std::to_string(vocab.size()) +
                        " entries, the model " +
                        std::to_string(model.config.vocab_size));
  }
  const std::vector<data::Utterance> utts =
      data::load_manifest(config.run.manifest, vocab, model.config.feature_dim);
  std::optional<FusionLm> lm;
  if (!config.run.lm_checkpoint.empty()) {
    lm = load_lm(config.run.lm_checkpoint);
    if (config.decode.fusion.lambda != 0.0 &&
        lm->config.vocab_size != model.config.vocab_size) {
      throw ContractError("language model vocabulary " +
                          std::to_string(lm->config.vocab_size) +
                          " does not match the model's " +
                          std::to_string(model.config.vocab_size));
    }
  }
  std::vector<search::UtteranceNBest> records;
  records.reserve(utts.size());
  for (const data::Utterance& u : utts) {
    records.push_back({u.id, search::beam_search(
                                 model, u.features, config.decode.beam,
                                 config.decode.max_length,
                                 lm ? &*lm : nullptr, config.decode.fusion)});
  }
  search::write_nbest(join(out_dir, kNbestFile), records, vocab);
}

void cmd_score(ExperimentConfig config, const std::string& out_dir) {
  if (config.run.nbest.empty()) throw ContractError("score needs an n-best file");
  if (config.run.manifest.empty()) throw ContractError("score needs a manifest");
  prepare_output(out_dir, config, "score");
  const data::Vocabulary vocab = resolve_vocab(config, 0);
  const auto refs = data::load_manifest_transcripts(config.run.manifest, vocab);
  const auto nbest = search::read_nbest(config.run.nbest, vocab);
  std::map<std::string, const search::UtteranceNBest*> by_id;
  for (const auto& r : nbest) {
    if (!by_id.emplace(r.id, &r).second) {
      throw ContractError("utterance '" + r.id +
                          "' appears twice in the n-best file");
    }
  }
  std::map<std::string, bool> in_manifest;
  std::vector<scoring::ScoredUtterance> scored;
  auto words = [&](const data::TokenSeq& seq) {
    return scoring::split_words(vocab.render(seq));
  };
  for (const auto& ref : refs) {
    in_manifest[ref.id] = true;
    auto it = by_id.find(ref.id);
    if (it == by_id.end()) {
      throw ContractError("utterance '" + ref.id +
                          "' has no entry in the n-best file");
    }
    scoring::ScoredUtterance s;
    s.id = ref.id;
    s.ref = words(ref.tokens);
    for (const auto& h : it->second->hypotheses) s.nbest.push_back(words(h.transcript()));
    scored.push_back(std::move(s));
  }
  for (const auto& r : nbest) {
    if (!in_manifest.count(r.id)) {
      throw ContractError("n-best utterance '" + r.id +
                          "' is not in the manifest");
    }
  }
  const scoring::WerReport report = scoring::wer(scored, true);
  write_file(join(out_dir, kReportFile),
             scoring::render_report(report, config.run.per_utterance));
}

}  // namespace mute::experiment

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "experiment/config.h"

#include <cstdlib>
#include <filesystem>

#include "common/errors.h"

namespace mute::experiment {

void DecodeConfig::validate() const {
  if (beam == 0) throw ContractError("decode: beam must be >= 1");
  if (max_length == 0) throw ContractError("decode: max_length must be >= 1");
  fusion.validate();
}

DecodeConfig DecodeConfig::read(const ConfigSection* section) {
  SectionReader r(section, "decode");
  DecodeConfig c;
  c.beam = r.integer("beam", c.beam);
  c.fusion.lambda = r.real("lambda", c.fusion.lambda);
  c.fusion.alpha = r.real("alpha", c.fusion.alpha);
  c.max_length = r.integer("max_length", c.max_length);
  r.finish();
  c.validate();
  return c;
}

void DecodeConfig::write(ConfigSection& s) const {
  s.set("beam", beam);
  s.set("lambda", fusion.lambda);
  s.set("alpha", fusion.alpha);
  s.set("max_length", max_length);
}

RunSpec RunSpec::read(const ConfigSection* section) {
  SectionReader r(section, "run");
  RunSpec s;
  s.command = r.str("command", s.command);
  s.stage = static_cast<int>(r.integer("stage", s.stage));
  s.corpus_dir = r.str("corpus_dir", s.corpus_dir);
  s.init_checkpoint = r.str("init_checkpoint", s.init_checkpoint);
  s.checkpoint = r.str("checkpoint", s.checkpoint);
  s.manifest = r.str("manifest", s.manifest);
  s.lm_checkpoint = r.str("lm_checkpoint", s.lm_checkpoint);
  s.vocab = r.str("vocab", s.vocab);
  s.nbest = r.str("nbest", s.nbest);
  s.per_utterance = r.flag("per_utterance", s.per_utterance);
  r.finish();
  if (s.stage != 1 && s.stage != 2) throw ContractError("run: stage must be 1 or 2");
  return s;
}

void RunSpec::write(ConfigSection& s) const {
  s.set("command", command);
  s.set("stage", stage);
  s.set("corpus_dir", corpus_dir);
  s.set("init_checkpoint", init_checkpoint);
  s.set("checkpoint", checkpoint);
  s.set("manifest", manifest);
  s.set("lm_checkpoint", lm_checkpoint);
  s.set("vocab", vocab);
  s.set("nbest", nbest);
  s.set_bool("per_utterance", per_utterance);
}

namespace {

// Desk defaults for the two training stages.
train::TrainConfig stage_defaults(int stage) {
  train::TrainConfig c;
  c.stage = stage;
  c.optimizer.learning_rate = 3e-3;
  c.eval_every = 250;
  if (stage == 1) {
    c.steps = 3000;
  } else {
    c.steps = 8000;
    c.text_batch = 32;
  }
  return c;
}

void write_stage(ConfigSection& s, const train::TrainConfig& c) { c.write(s); }

train::TrainConfig read_stage(const ConfigSection* section, int stage) {
  ConfigSection merged;
  merged.name = "stage" + std::to_string(stage);
  stage_defaults(stage).write(merged);
  if (section) {
    for (const auto& [k, v] : section->entries) {
      if (!merged.find(k)) {
        throw ContractError("unknown key '" + k + "' in section [" +
                            merged.name + "]");
      }
      merged.set(k, v);
    }
  }
  return train::TrainConfig::read(&merged, stage);
}

void check_size(const ConfigSection* section, const char* key,
                const char* name, std::size_t got, std::size_t want) {
  if (section && section->find(key) && got != want) {
    throw ContractError(std::string(name) + " " + key + " " +
                        std::to_string(got) + " disagrees with the corpus (" +
                        std::to_string(want) + ")");
  }
}

}  // namespace

ExperimentConfig::ExperimentConfig()
    : stage1(stage_defaults(1)), stage2(stage_defaults(2)) {
  model.vocab_size = corpus.vocab_size();
  model.feature_dim = corpus.feature_dim;
  model.variant = Variant::kMuteL;
  lm.vocab_size = corpus.vocab_size();
}

ExperimentConfig ExperimentConfig::from_file(const ConfigFile& file) {
  file.check_sections({"experiment", "corpus", "model", "lm", "lm_train",
                       "stage1", "stage2", "decode", "run"});
  ExperimentConfig c;
  {
    SectionReader r(file.find("experiment"), "experiment");
    c.output_dir = r.str("output_dir", c.output_dir);
    c.sweep.seeds = parse_seed_list(
        r.str("seeds", render_seed_list(c.sweep.seeds)));
    c.sweep.ratios = parse_ratio_list(
        r.str("ratios", render_ratio_list(c.sweep.ratios)));
    c.sweep.variants = parse_variant_list(
        r.str("variants", render_variant_list(c.sweep.variants)));
    c.sweep.jobs = r.integer("jobs", c.sweep.jobs);
    c.sweep.corpus_per_seed = r.flag("corpus_per_seed", c.sweep.corpus_per_seed);
    r.finish();
  }
  c.corpus = data::CorpusSpec::read(file.find("corpus"));

  // Model and lm sizes default from the corpus.
  const ConfigSection* ms = file.find("model");
  ConfigSection model_section;
  model_section.name = "model";
  if (ms) model_section = *ms;
  if (!model_section.find("vocab_size")) {
    model_section.set("vocab_size", c.corpus.vocab_size());
  }
  if (!model_section.find("feature_dim")) {
    model_section.set("feature_dim", c.corpus.feature_dim);
  }
  if (!model_section.find("variant")) {
    model_section.set("variant", std::string(variant_name(c.model.variant)));
  }
  c.model = ModelConfig::read(&model_section);
  check_size(ms, "vocab_size", "model", c.model.vocab_size, c.corpus.vocab_size());
  check_size(ms, "feature_dim", "model", c.model.feature_dim, c.corpus.feature_dim);

  const ConfigSection* ls = file.find("lm");
  ConfigSection lm_section;
  lm_section.name = "lm";
  if (ls) lm_section = *ls;
  if (!lm_section.find("vocab_size")) {
    lm_section.set("vocab_size", c.corpus.vocab_size());
  }
  c.lm = LmConfig::read(&lm_section);
  check_size(ls, "vocab_size", "lm", c.lm.vocab_size, c.corpus.vocab_size());

  c.lm_train = train::LmTrainConfig::read(file.find("lm_train"));
  c.stage1 = read_stage(file.find("stage1"), 1);
  c.stage2 = read_stage(file.find("stage2"), 2);
  c.decode = DecodeConfig::read(file.find("decode"));
  c.run = RunSpec::read(file.find("run"));
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  return from_file(ConfigFile::parse(text));
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_file(ConfigFile::load(path));
}

ConfigFile ExperimentConfig::to_file() const {
  ConfigFile f;
  {
    ConfigSection& s = f.section("experiment");
    s.set("output_dir", output_dir);
    s.set("seeds", render_seed_list(sweep.seeds));
    s.set("ratios", render_ratio_list(sweep.ratios));
    s.set("variants", render_variant_list(sweep.variants));
    s.set("jobs", sweep.jobs);
    s.set_bool("corpus_per_seed", sweep.corpus_per_seed);
  }
  corpus.write(f.section("corpus"));
  model.write(f.section("model"));
  lm.write(f.section("lm"));
  lm_train.write(f.section("lm_train"));
  write_stage(f.section("stage1"), stage1);
  write_stage(f.section("stage2"), stage2);
  decode.write(f.section("decode"));
  run.write(f.section("run"));
  return f;
}

std::string ExperimentConfig::render() const { return to_file().render(); }

void ExperimentConfig::validate() const {
  corpus.validate();
  model.validate();
  lm.validate();
  lm_train.validate();
  stage1.validate();
  stage2.validate();
  decode.validate();
  if (model.vocab_size != corpus.vocab_size()) {
    throw ContractError("model vocab_size does not match the corpus");
  }
  if (lm.vocab_size != corpus.vocab_size()) {
    throw ContractError("lm vocab_size does not match the corpus");
  }
  if (sweep.seeds.empty() || sweep.ratios.empty() || sweep.variants.empty()) {
    throw ContractError("sweep needs at least one seed, ratio and variant");
  }
}

data::CorpusSpec ExperimentConfig::corpus_for_seed(std::uint64_t seed) const {
  data::CorpusSpec s = corpus;
  if (sweep.corpus_per_seed) s.seed = seed;
  return s;
}

std::string resolve_output_dir(const std::string& explicit_dir,
                               const ExperimentConfig& config,
                               const std::string& command) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (!config.output_dir.empty()) return config.output_dir;
  const char* root = std::getenv(kOutputRootEnv);
  const std::filesystem::path base = root && *root ? root : "runs";
  return (base / command).string();
}

std::vector<double> parse_ratio_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split(text, ',')) {
    const std::string t = trim(item);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || *end != '\0' || !(v >= 0.0 && v <= 1.0)) {
      throw ContractError("bad mixing ratio '" + t + "' (expected 0..1)");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ContractError("empty ratio list");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  const std::vector<std::string> items = split(text, ',');
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string t = trim(items[i]);
    if (t.empty() && i + 1 == items.size() && i > 0) break;  // "7," form
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || *end != '\0' || t[0] == '-') {
      throw ContractError("bad seed '" + t + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ContractError("empty seed list");
  // A bare count k stands for seeds 1..k.
  if (text.find(',') == std::string::npos) {
    const std::uint64_t k = out[0];
    if (k == 0) throw ContractError("seed count must be >= 1");
    out.clear();
    for (std::uint64_t s = 1; s <= k; ++s) out.push_back(s);
  }
  return out;
}

std::vector<Variant> parse_variant_list(const std::string& text) {
  std::vector<Variant> out;
  for (const std::string& item : split(text, ',')) {
    out.push_back(parse_variant(trim(item)));
  }
  if (out.empty()) throw ContractError("empty variant list");
  return out;
}

std::string render_ratio_list(const std::vector<double>& ratios) {
  std::string out;
  for (double r : ratios) out += (out.empty() ? "" : ",") + short_double(r);
  return out;
}

std::string render_seed_list(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::uint64_t s : seeds) {
    out += (out.empty() ? "" : ",") + std::to_string(s);
  }
  // Keep a single seed a list rather than a count.
  if (seeds.size() == 1) out += ",";
  return out;
}

std::string render_variant_list(const std::vector<Variant>& variants) {
  std::string out;
  for (Variant v : variants) out += (out.empty() ? "" : ",") + std::string(variant_name(v));
  return out;
}

}  // namespace mute::experiment

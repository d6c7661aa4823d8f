// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "train/trainer.h"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "common/errors.h"
#include "data/batch.h"
#include "scoring/scoring.h"
#include "search/search.h"

namespace mute::train {

using data::BatchKind;

void TrainConfig::validate() const {
  if (stage != 1 && stage != 2) throw ContractError("stage must be 1 or 2");
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ContractError("mixing ratio must lie in [0, 1]");
  }
  if (stage == 1 && ratio != 0.0) {
    throw ContractError("the mixing ratio applies to stage 2 only");
  }
  optimizer.validate();
  validate_ema_decay(ema_decay);
  if (!(clip_norm >= 0.0)) throw ContractError("clip_norm must be >= 0");
  if (audio_batch == 0 || text_batch == 0) {
    throw ContractError("batch sizes must be >= 1");
  }
  if (max_decode_length == 0) {
    throw ContractError("max_decode_length must be >= 1");
  }
}

TrainConfig TrainConfig::read(const ConfigSection* section, int stage) {
  TrainConfig c;
  c.stage = stage;
  const std::string name = section ? section->name : "stage" + std::to_string(stage);
  SectionReader r(section, name);
  c.ratio = r.real("ratio", c.ratio);
  c.optimizer.kind =
      parse_optimizer(r.str("optimizer", optimizer_name(c.optimizer.kind)));
  c.optimizer.learning_rate = r.real("learning_rate", c.optimizer.learning_rate);
  c.optimizer.beta1 = r.real("beta1", c.optimizer.beta1);
  c.optimizer.beta2 = r.real("beta2", c.optimizer.beta2);
  c.optimizer.epsilon = r.real("epsilon", c.optimizer.epsilon);
  c.clip_norm = r.real("clip_norm", c.clip_norm);
  c.ema_decay = r.real("ema_decay", c.ema_decay);
  c.ema_warmup = r.flag("ema_warmup", c.ema_warmup);
  c.audio_batch = r.integer("audio_batch", c.audio_batch);
  c.text_batch = r.integer("text_batch", c.text_batch);
  c.steps = r.integer("steps", c.steps);
  c.seed = r.integer("seed", c.seed);
  c.eval_every = r.integer("eval_every", c.eval_every);
  c.checkpoint_every = r.integer("checkpoint_every", c.checkpoint_every);
  c.reinit_decoder = r.flag("reinit_decoder", c.reinit_decoder);
  c.max_decode_length = r.integer("max_decode_length", c.max_decode_length);
  const std::string sel = r.str("selection", "wer");
  if (sel == "wer") {
    c.selection = Selection::kWer;
  } else if (sel == "loss") {
    c.selection = Selection::kLoss;
  } else {
    throw ContractError("selection must be wer or loss, got '" + sel + "'");
  }
  r.finish();
  c.validate();
  return c;
}

void TrainConfig::write(ConfigSection& s) const {
  s.set("ratio", ratio);
  s.set("optimizer", std::string(optimizer_name(optimizer.kind)));
  s.set("learning_rate", optimizer.learning_rate);
  s.set("beta1", optimizer.beta1);
  s.set("beta2", optimizer.beta2);
  s.set("epsilon", optimizer.epsilon);
  s.set("clip_norm", clip_norm);
  s.set("ema_decay", ema_decay);
  s.set_bool("ema_warmup", ema_warmup);
  s.set("audio_batch", audio_batch);
  s.set("text_batch", text_batch);
  s.set("steps", steps);
  s.set("seed", seed);
  s.set("eval_every", eval_every);
  s.set("checkpoint_every", checkpoint_every);
  s.set_bool("reinit_decoder", reinit_decoder);
  s.set("max_decode_length", max_decode_length);
  s.set("selection", std::string(selection == Selection::kWer ? "wer" : "loss"));
}

BatchKind sample_batch_type(Rng& rng, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ContractError("mixing ratio must lie in [0, 1]");
  }
  return rng.uniform() < ratio ? BatchKind::kTextOnly : BatchKind::kAudioText;
}

LasModel reinit_decoder_for_stage2(const LasModel& stage1, Variant variant,
                                   std::uint64_t seed, bool reinit) {
  LasModel m = stage1;
  m.config.variant = variant;
  m.config.validate();
  Rng rng(mix_seed(seed, 2));
  m.init_decoder(rng);
  if (!reinit) {
    LasModel src = stage1;
    std::vector<ParamEntry> from = src.parameters();
    for (const ParamEntry& e : m.parameters()) {
      if (e.partition == Partition::kEncoder) continue;
      const ParamEntry* match = nullptr;
      for (const ParamEntry& f : from) {
        if (f.path == e.path) match = &f;
      }
      if (match == nullptr) continue;  // learnable context starts at zero
      if (match->tensor->shape() != e.tensor->shape()) {
        throw ContractError("cannot carry " + e.path +
                            " into the stage-2 variant: shape " +
                            ad::shape_str(match->tensor->shape()) + " vs " +
                            ad::shape_str(e.tensor->shape()));
      }
      std::copy(match->tensor->data().begin(), match->tensor->data().end(),
                e.tensor->data().begin());
    }
  }
  m.set_bn_mode(nn::BnMode::kFrozen);
  for (const ParamEntry& e : m.parameters()) e.tensor->set_requires_grad(false);
  return m;
}

namespace {

std::string field(double v) { return format_double(v); }

double parse_real(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ParseError("bad number '" + s + "' in log");
  return v;
}

scoring::Words to_words(const data::TokenSeq& seq) {
  scoring::Words w;
  for (data::Token t : seq) w.push_back(std::to_string(t));
  return w;
}

}  // namespace

std::string log_header() {
  return "step\tstage\tratio\taudio_steps\ttext_steps\ttrain_loss\taudio_loss"
         "\ttext_loss\tvalid_loss\tvalid_wer\tbest";
}

std::string render_log_row(const LogRow& r) {
  std::ostringstream out;
  out << r.step << '\t' << r.stage << '\t' << field(r.ratio) << '\t'
      << r.audio_steps << '\t' << r.text_steps << '\t' << field(r.train_loss)
      << '\t' << field(r.audio_loss) << '\t' << field(r.text_loss) << '\t'
      << field(r.valid_loss) << '\t' << field(r.valid_wer) << '\t'
      << (r.best ? 1 : 0);
  return out.str();
}

std::string render_log(const std::vector<LogRow>& rows) {
  std::string out = log_header() + "\n";
  for (const LogRow& r : rows) out += render_log_row(r) + "\n";
  return out;
}

std::vector<LogRow> parse_log(const std::string& text) {
  std::vector<LogRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line.rfind("step\t", 0) == 0) continue;
    std::vector<std::string> f = split(line, '\t');
    if (f.size() != 11) {
      throw ParseError("training log row needs 11 fields", n);
    }
    try {
      LogRow r;
      r.step = std::stoul(f[0]);
      r.stage = std::stoi(f[1]);
      r.ratio = parse_real(f[2]);
      r.audio_steps = std::stoul(f[3]);
      r.text_steps = std::stoul(f[4]);
      r.train_loss = parse_real(f[5]);
      r.audio_loss = parse_real(f[6]);
      r.text_loss = parse_real(f[7]);
      r.valid_loss = parse_real(f[8]);
      r.valid_wer = parse_real(f[9]);
      r.best = f[10] == "1";
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ParseError("malformed training log row", n);
    }
  }
  return rows;
}

EpochSampler::EpochSampler(std::size_t n, std::uint64_t seed)
    : rng_(seed), order_(n), pos_(n) {
  for (std::size_t i = 0; i < n; ++i) order_[i] = i;
}

void EpochSampler::reshuffle() {
  for (std::size_t i = order_.size(); i > 1; --i) {
    std::swap(order_[i - 1], order_[rng_.below(i)]);
  }
  pos_ = 0;
}

std::vector<std::size_t> EpochSampler::next(std::size_t count) {
  if (order_.empty()) throw ContractError("sampler over an empty corpus");
  count = std::min(count, order_.size());
  if (pos_ + count > order_.size()) reshuffle();
  std::vector<std::size_t> out(order_.begin() + pos_,
                               order_.begin() + pos_ + count);
  pos_ += count;
  return out;
}

void EpochSampler::save(Archive& archive, ConfigSection& progress,
                        const std::string& name) const {
  progress.set(name + "_rng", rng_.serialize());
  progress.set(name + "_pos", static_cast<std::uint64_t>(pos_));
  ad::Tensor order({order_.size()});
  for (std::size_t i = 0; i < order_.size(); ++i) {
    order[i] = static_cast<double>(order_[i]);
  }
  archive.add("sampler/" + name, order);
}

void EpochSampler::load(const Archive& archive, const ConfigSection* progress,
                        const std::string& name) {
  const std::string* rng = progress ? progress->find(name + "_rng") : nullptr;
  const std::string* pos = progress ? progress->find(name + "_pos") : nullptr;
  if (!rng || !pos) throw ParseError("trainer state lacks sampler " + name);
  rng_.deserialize(*rng);
  pos_ = std::stoul(*pos);
  const ad::Tensor& order = archive.get("sampler/" + name);
  if (order.size() != order_.size()) {
    throw ParseError("sampler " + name + " does not match the corpus size");
  }
  for (std::size_t i = 0; i < order_.size(); ++i) {
    order_[i] = static_cast<std::size_t>(order[i]);
  }
}

Evaluation evaluate_model(const LasModel& model,
                          std::span<const data::Utterance> utts,
                          std::size_t max_length) {
  if (utts.empty()) throw ContractError("evaluation on an empty split");
  double loss_sum = 0.0;
  std::size_t positions = 0;
  std::size_t errors = 0;
  std::size_t words = 0;
  for (const data::Utterance& u : utts) {
    ad::Tape tape(false);
    ad::Var enc = encode_inference(model, tape, u.features);
    const data::Utterance* p = &u;
    data::Batch batch = data::batch_utterances(std::span(&p, 1));
    const double l = loss_from_encoded(model, tape, std::span(&enc, 1), batch)
                         .value()
                         .item();
    loss_sum += l * static_cast<double>(u.tokens.size() + 1);
    positions += u.tokens.size() + 1;
    search::Hypothesis h =
        search::greedy_decode_encoded(model, tape, enc, max_length);
    errors += scoring::align(to_words(u.tokens), to_words(h.transcript()))
                  .errors();
    words += u.tokens.size();
  }
  if (words == 0) throw UndefinedRateError("validation split has no words");
  return {loss_sum / static_cast<double>(positions),
          static_cast<double>(errors) / static_cast<double>(words)};
}

double greedy_wer(const LasModel& model, std::span<const data::Utterance> utts,
                  std::size_t max_length) {
  std::size_t errors = 0;
  std::size_t words = 0;
  for (const data::Utterance& u : utts) {
    search::Hypothesis h = search::greedy_decode(model, u.features, max_length);
    errors += scoring::align(to_words(u.tokens), to_words(h.transcript()))
                  .errors();
    words += u.tokens.size();
  }
  if (words == 0) throw UndefinedRateError("WER of a split without words");
  return static_cast<double>(errors) / static_cast<double>(words);
}

Trainer::Trainer(LasModel model, const TrainConfig& config, TrainData data)
    : model_(std::move(model)), config_(config), data_(data) {
  config_.validate();
  if (data_.train.empty()) throw ContractError("training on an empty corpus");
  if (data_.valid.empty()) throw ContractError("empty validation split");
  const Variant v = model_.config.variant;
  if (config_.stage == 2) {
    if (config_.ratio > 0.0 && !has_text_path(v)) {
      throw ContractError("mixing ratio > 0 needs a variant with a text-only "
                          "path; " + std::string(variant_name(v)) + " has none");
    }
    if (config_.ratio > 0.0 && data_.text.empty()) {
      throw ContractError("mixing ratio > 0 with an empty text corpus");
    }
    if (model_.bn_mode() != nn::BnMode::kFrozen) {
      throw ContractError("stage 2 expects a model prepared by "
                          "reinit_decoder_for_stage2 (frozen batch norm)");
    }
  } else {
    model_.set_bn_mode(nn::BnMode::kTrain);
  }
  type_rng_ = Rng(mix_seed(config_.seed, 41));
  audio_sampler_ = EpochSampler(data_.train.size(), mix_seed(config_.seed, 42));
  text_sampler_ = EpochSampler(data_.text.size(), mix_seed(config_.seed, 43));
  prepare();
  std::vector<ParamEntry> params = model_.parameters();
  opt_ = OptimizerState::create(params);
  ema_ = EmaState::create(params, config_.ema_decay, config_.ema_warmup);
  best_ = shadow_model();
}

PartitionSet Trainer::allowed() const {
  return config_.stage == 1 ? all_partitions() : decoder_partitions();
}

void Trainer::prepare() {
  mask_gradients(model_.parameters(), allowed());
  train_cache_.clear();
  if (config_.stage == 2) {
    for (const data::Utterance& u : data_.train) {
      ad::Tape tape(false);
      train_cache_.push_back(encode_inference(model_, tape, u.features).value());
    }
  }
}

LasModel Trainer::shadow_model() {
  LasModel m = model_;
  ema_.copy_to(m.parameters());
  if (m.bn_mode() == nn::BnMode::kTrain) m.set_bn_mode(nn::BnMode::kEval);
  return m;
}

void Trainer::train_step() {
  std::vector<ParamEntry> params = model_.parameters();
  zero_gradients(params);
  const BatchKind kind = config_.stage == 2
                             ? sample_batch_type(type_rng_, config_.ratio)
                             : BatchKind::kAudioText;
  ad::Tape tape;
  ad::Var loss;
  if (kind == BatchKind::kAudioText) {
    std::vector<const data::Utterance*> ptrs;
    const std::vector<std::size_t> idx = audio_sampler_.next(config_.audio_batch);
    for (std::size_t i : idx) ptrs.push_back(&data_.train[i]);
    data::Batch batch = data::batch_utterances(ptrs);
    if (config_.stage == 1) {
      loss = loss_audio_text(model_, tape, batch, nn::BnMode::kTrain);
    } else {
      std::vector<ad::Var> enc;
      for (std::size_t i : idx) enc.push_back(tape.constant(train_cache_[i]));
      loss = loss_from_encoded(model_, tape, enc, batch);
    }
  } else {
    std::vector<const data::TextSample*> ptrs;
    for (std::size_t i : text_sampler_.next(config_.text_batch)) {
      ptrs.push_back(&data_.text[i]);
    }
    loss = loss_text_only(model_, tape, data::batch_texts(ptrs));
  }
  const double value = loss.value().item();
  if (!std::isfinite(value)) {
    throw NumericError("training loss became non-finite at step " +
                       std::to_string(step_ + 1));
  }
  tape.backward(loss);
  clip_gradients(params, config_.clip_norm);
  apply_update(params, opt_, config_.optimizer, allowed());
  ema_.update(params);
  ++step_;
  last_loss_ = value;
  last_kind_ = kind;
  if (kind == BatchKind::kAudioText) {
    ++audio_steps_;
    ++n_audio_;
    sum_audio_ += value;
  } else {
    ++text_steps_;
    ++n_text_;
    sum_text_ += value;
  }
}

LogRow Trainer::evaluate() {
  LasModel shadow = shadow_model();
  const Evaluation ev =
      evaluate_model(shadow, data_.valid, config_.max_decode_length);
  LogRow r;
  r.step = step_;
  r.stage = config_.stage;
  r.ratio = config_.ratio;
  r.audio_steps = audio_steps_;
  r.text_steps = text_steps_;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = n_audio_ + n_text_;
  r.train_loss = n ? (sum_audio_ + sum_text_) / static_cast<double>(n) : nan;
  r.audio_loss = n_audio_ ? sum_audio_ / static_cast<double>(n_audio_) : nan;
  r.text_loss = n_text_ ? sum_text_ / static_cast<double>(n_text_) : nan;
  sum_audio_ = sum_text_ = 0.0;
  n_audio_ = n_text_ = 0;
  r.valid_loss = ev.loss;
  r.valid_wer = ev.wer;
  const bool better =
      config_.selection == Selection::kWer
          ? (ev.wer < best_wer_ || (ev.wer == best_wer_ && ev.loss < best_loss_))
          : ev.loss < best_loss_;
  if (better) {
    best_wer_ = ev.wer;
    best_loss_ = ev.loss;
    best_step_ = step_;
    best_ = std::move(shadow);
    r.best = true;
  }
  log_.push_back(r);
  return r;
}

void Trainer::run(std::size_t stop_at) {
  if (log_.empty()) evaluate();
  while (!done() && step_ < stop_at) {
    train_step();
    if ((config_.eval_every && step_ % config_.eval_every == 0) || done()) {
      evaluate();
    }
    if (!state_path_.empty() && config_.checkpoint_every && !done() &&
        step_ % config_.checkpoint_every == 0) {
      state_archive().save(state_path_);
    }
  }
  if (!done() && !state_path_.empty()) state_archive().save(state_path_);
}

namespace {

void append_model(Archive& out, ConfigFile& cfg, LasModel& model,
                  const std::string& prefix, const std::string& state_section) {
  Archive a = model_to_archive(model);
  ConfigFile mc = ConfigFile::parse(a.config);
  if (cfg.find("model") == nullptr) cfg.section("model") = *mc.find("model");
  ConfigSection& state = cfg.section(state_section);
  state = *mc.find("state");
  state.name = state_section;
  for (auto& [name, t] : a.tensors) out.add(prefix + name, t);
}

LasModel extract_model(const Archive& in, const ConfigFile& cfg,
                       const std::string& prefix,
                       const std::string& state_section) {
  Archive a;
  a.kind = kModelKind;
  ConfigFile mc;
  const ConfigSection* model = cfg.find("model");
  const ConfigSection* state = cfg.find(state_section);
  if (!model || !state) throw ParseError("trainer state lacks model sections");
  mc.section("model") = *model;
  ConfigSection& copy = mc.section("state");
  copy = *state;
  copy.name = "state";
  a.config = mc.render();
  for (const auto& [name, t] : in.tensors) {
    if (name.rfind(prefix, 0) == 0) a.add(name.substr(prefix.size()), t);
  }
  return model_from_archive(a);
}

}  // namespace

Archive Trainer::state_archive() {
  Archive a;
  a.kind = kTrainerStateKind;
  ConfigFile cfg;
  append_model(a, cfg, model_, "model/", "model_state");
  append_model(a, cfg, best_, "best/", "best_state");
  config_.write(cfg.section("train"));
  ConfigSection& p = cfg.section("progress");
  p.set("stage", config_.stage);
  p.set("step", static_cast<std::uint64_t>(step_));
  p.set("audio_steps", static_cast<std::uint64_t>(audio_steps_));
  p.set("text_steps", static_cast<std::uint64_t>(text_steps_));
  p.set("sum_audio", sum_audio_);
  p.set("sum_text", sum_text_);
  p.set("n_audio", static_cast<std::uint64_t>(n_audio_));
  p.set("n_text", static_cast<std::uint64_t>(n_text_));
  p.set("best_wer", best_wer_);
  p.set("best_loss", best_loss_);
  p.set("best_step", static_cast<std::uint64_t>(best_step_));
  p.set("last_loss", last_loss_);
  p.set("type_rng", type_rng_.serialize());
  audio_sampler_.save(a, p, "audio");
  text_sampler_.save(a, p, "text");
  ConfigSection& log = cfg.section("log");
  for (std::size_t i = 0; i < log_.size(); ++i) {
    log.set("row" + std::to_string(i), render_log_row(log_[i]));
  }
  opt_.save(a, "opt/");
  ema_.save(a, "ema/");
  a.config = cfg.render();
  return a;
}

Trainer Trainer::resume(const Archive& state, TrainData data) {
  if (state.kind != kTrainerStateKind) {
    throw ParseError("archive holds a '" + state.kind +
                     "', not a trainer state");
  }
  const ConfigFile cfg = ConfigFile::parse(state.config);
  const ConfigSection* progress = cfg.find("progress");
  if (!progress) throw ParseError("trainer state lacks [progress]");
  auto get = [&](const std::string& key) -> const std::string& {
    const std::string* v = progress->find(key);
    if (!v) throw ParseError("trainer state lacks progress key " + key);
    return *v;
  };
  const int stage = std::stoi(get("stage"));
  TrainConfig tc = TrainConfig::read(cfg.find("train"), stage);
  Trainer t(extract_model(state, cfg, "model/", "model_state"), tc, data);
  t.best_ = extract_model(state, cfg, "best/", "best_state");
  std::vector<ParamEntry> params = t.model_.parameters();
  t.opt_ = OptimizerState::load(state, "opt/", params);
  t.ema_ = EmaState::load(state, "ema/", params, tc.ema_decay, tc.ema_warmup);
  t.step_ = std::stoul(get("step"));
  t.audio_steps_ = std::stoul(get("audio_steps"));
  t.text_steps_ = std::stoul(get("text_steps"));
  t.sum_audio_ = parse_real(get("sum_audio"));
  t.sum_text_ = parse_real(get("sum_text"));
  t.n_audio_ = std::stoul(get("n_audio"));
  t.n_text_ = std::stoul(get("n_text"));
  t.best_wer_ = parse_real(get("best_wer"));
  t.best_loss_ = parse_real(get("best_loss"));
  t.best_step_ = std::stoul(get("best_step"));
  t.last_loss_ = parse_real(get("last_loss"));
  t.type_rng_.deserialize(get("type_rng"));
  t.audio_sampler_.load(state, progress, "audio");
  t.text_sampler_.load(state, progress, "text");
  if (const ConfigSection* log = cfg.find("log")) {
    std::string text;
    for (const auto& [key, row] : log->entries) text += row + "\n";
    t.log_ = parse_log(text);
  }
  return t;
}

}  // namespace mute::train

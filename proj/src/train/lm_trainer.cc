// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "train/lm_trainer.h"

#include <cmath>
#include <sstream>

#include "common/errors.h"
#include "common/rng.h"
#include "data/batch.h"
#include "train/trainer.h"

namespace mute::train {

void LmTrainConfig::validate() const {
  optimizer.validate();
  if (!(clip_norm >= 0.0)) throw ContractError("lm clip_norm must be >= 0");
  if (batch == 0) throw ContractError("lm batch must be >= 1");
}

LmTrainConfig LmTrainConfig::read(const ConfigSection* section) {
  SectionReader r(section, "lm_train");
  LmTrainConfig c;
  c.optimizer.kind =
      parse_optimizer(r.str("optimizer", optimizer_name(c.optimizer.kind)));
  c.optimizer.learning_rate = r.real("learning_rate", c.optimizer.learning_rate);
  c.optimizer.beta1 = r.real("beta1", c.optimizer.beta1);
  c.optimizer.beta2 = r.real("beta2", c.optimizer.beta2);
  c.optimizer.epsilon = r.real("epsilon", c.optimizer.epsilon);
  c.clip_norm = r.real("clip_norm", c.clip_norm);
  c.batch = r.integer("batch", c.batch);
  c.steps = r.integer("steps", c.steps);
  c.seed = r.integer("seed", c.seed);
  c.eval_every = r.integer("eval_every", c.eval_every);
  r.finish();
  c.validate();
  return c;
}

void LmTrainConfig::write(ConfigSection& s) const {
  s.set("optimizer", std::string(optimizer_name(optimizer.kind)));
  s.set("learning_rate", optimizer.learning_rate);
  s.set("beta1", optimizer.beta1);
  s.set("beta2", optimizer.beta2);
  s.set("epsilon", optimizer.epsilon);
  s.set("clip_norm", clip_norm);
  s.set("batch", batch);
  s.set("steps", steps);
  s.set("seed", seed);
  s.set("eval_every", eval_every);
}

std::string render_lm_log(const std::vector<LmLogRow>& rows) {
  std::ostringstream out;
  out << "#step\ttrain_loss\tvalid_loss\tvalid_perplexity\tbest\n";
  for (const LmLogRow& r : rows) {
    out << r.step << '\t' << format_double(r.train_loss) << '\t'
        << format_double(r.valid_loss) << '\t'
        << format_double(r.valid_perplexity) << '\t' << (r.best ? 1 : 0)
        << '\n';
  }
  return out.str();
}

double lm_cross_entropy(const FusionLm& lm,
                        std::span<const data::TextSample> texts) {
  if (texts.empty()) throw ContractError("lm_cross_entropy: no sentences");
  constexpr std::size_t kChunk = 64;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < texts.size(); start += kChunk) {
    std::vector<const data::TextSample*> ptrs;
    for (std::size_t i = start; i < std::min(texts.size(), start + kChunk); ++i) {
      ptrs.push_back(&texts[i]);
    }
    data::Batch batch = data::batch_texts(ptrs);
    std::size_t positions = 0;
    for (std::size_t len : batch.lengths) positions += len + 1;
    ad::Tape tape(false);
    total += lm_loss(lm, tape, batch).value().item() *
             static_cast<double>(positions);
    count += positions;
  }
  return total / static_cast<double>(count);
}

std::vector<LmLogRow> train_lm(FusionLm& lm, const LmTrainConfig& config,
                               std::span<const data::TextSample> text,
                               std::span<const data::TextSample> valid) {
  config.validate();
  if (text.empty() || valid.empty()) {
    throw ContractError("train_lm: needs training and validation sentences");
  }
  std::vector<ParamEntry> params = lm.parameters();
  const PartitionSet allowed = all_partitions();
  mask_gradients(params, allowed);
  OptimizerState opt = OptimizerState::create(params);
  EpochSampler sampler(text.size(), mix_seed(config.seed, 44));

  std::vector<LmLogRow> log;
  FusionLm best = lm;
  double best_loss = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t n = 0;
  auto evaluate = [&](std::size_t step) {
    LmLogRow row;
    row.step = step;
    row.train_loss =
        n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    row.valid_loss = lm_cross_entropy(lm, valid);
    row.valid_perplexity = std::exp(row.valid_loss);
    if (row.valid_loss < best_loss) {
      best_loss = row.valid_loss;
      best = lm;
      row.best = true;
    }
    log.push_back(row);
    sum = 0.0;
    n = 0;
  };

  evaluate(0);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    zero_gradients(params);
    std::vector<const data::TextSample*> ptrs;
    for (std::size_t i : sampler.next(config.batch)) ptrs.push_back(&text[i]);
    ad::Tape tape;
    ad::Var loss = lm_loss(lm, tape, data::batch_texts(ptrs));
    const double value = loss.value().item();
    if (!std::isfinite(value)) {
      throw NumericError("lm training loss became non-finite at step " +
                         std::to_string(step));
    }
    tape.backward(loss);
    clip_gradients(params, config.clip_norm);
    apply_update(params, opt, config.optimizer, allowed);
    sum += value;
    ++n;
    const bool last = step == config.steps;
    if (last || (config.eval_every && step % config.eval_every == 0)) {
      evaluate(step);
    }
  }
  lm = std::move(best);
  return log;
}

}  // namespace mute::train

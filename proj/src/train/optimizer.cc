// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "train/optimizer.h"

#include <cmath>

#include "common/errors.h"

namespace mute::train {

const char* optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kEmaSgd: return "ema-sgd";
  }
  return "?";
}

OptimizerKind parse_optimizer(const std::string& name) {
  for (OptimizerKind k :
       {OptimizerKind::kAdam, OptimizerKind::kSgd, OptimizerKind::kEmaSgd}) {
    if (name == optimizer_name(k)) return k;
  }
  throw ContractError("unknown optimizer '" + name +
                      "' (expected adam, sgd or ema-sgd)");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ContractError("learning rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ContractError("optimizer betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ContractError("optimizer epsilon must be > 0");
}

PartitionSet all_partitions() {
  PartitionSet s;
  s.fill(true);
  return s;
}

PartitionSet decoder_partitions() {
  PartitionSet s = all_partitions();
  s[static_cast<int>(Partition::kEncoder)] = false;
  return s;
}

std::string partition_list(const PartitionSet& set) {
  std::string out;
  for (int i = 0; i < kPartitionCount; ++i) {
    if (!set[i]) continue;
    if (!out.empty()) out += ',';
    out += partition_name(static_cast<Partition>(i));
  }
  return out;
}

OptimizerState OptimizerState::create(std::span<const ParamEntry> params) {
  OptimizerState s;
  for (const ParamEntry& p : params) {
    s.slots.push_back({p.path, ad::Tensor(p.tensor->shape()),
                       ad::Tensor(p.tensor->shape()), 0});
  }
  return s;
}

void OptimizerState::save(Archive& archive, const std::string& prefix) const {
  for (const ParamSlot& s : slots) {
    archive.add(prefix + s.path + ".first", s.first);
    archive.add(prefix + s.path + ".second", s.second);
    archive.add(prefix + s.path + ".steps",
                ad::Tensor::scalar(static_cast<double>(s.steps)));
  }
}

OptimizerState OptimizerState::load(const Archive& archive,
                                    const std::string& prefix,
                                    std::span<const ParamEntry> params) {
  OptimizerState s = create(params);
  for (ParamSlot& slot : s.slots) {
    const ad::Tensor& first = archive.get(prefix + slot.path + ".first");
    const ad::Tensor& second = archive.get(prefix + slot.path + ".second");
    if (first.shape() != slot.first.shape() ||
        second.shape() != slot.second.shape()) {
      throw ParseError("optimizer state for " + slot.path +
                       " does not match the parameter shape");
    }
    slot.first = first;
    slot.second = second;
    slot.steps = static_cast<std::uint64_t>(
        archive.get(prefix + slot.path + ".steps").item());
  }
  return s;
}

void mask_gradients(std::span<const ParamEntry> params,
                    const PartitionSet& allowed) {
  for (const ParamEntry& p : params) {
    p.tensor->set_requires_grad(allowed[static_cast<int>(p.partition)]);
  }
}

void zero_gradients(std::span<const ParamEntry> params) {
  for (const ParamEntry& p : params) p.tensor->zero_grad();
}

double clip_gradients(std::span<const ParamEntry> params, double max_norm) {
  double sq = 0.0;
  for (const ParamEntry& p : params) {
    for (double g : p.tensor->grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) {
    throw NumericError("gradient norm is not finite");
  }
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (const ParamEntry& p : params) {
      for (double& g : p.tensor->grad()) g *= f;
    }
  }
  return norm;
}

namespace {

bool any_nonzero(std::span<const double> g) {
  for (double x : g) {
    if (x != 0.0) return true;
  }
  return false;
}

}  // namespace

void apply_update(std::span<const ParamEntry> params, OptimizerState& state,
                  const OptimizerConfig& config, const PartitionSet& allowed) {
  if (state.slots.size() != params.size()) {
    throw ContractError("optimizer state does not match the parameter registry");
  }
  PartitionSet touched{};
  for (const ParamEntry& p : params) {
    if (any_nonzero(p.tensor->grad())) {
      touched[static_cast<int>(p.partition)] = true;
    }
  }
  for (int i = 0; i < kPartitionCount; ++i) {
    if (touched[i] && !allowed[i]) {
      throw ContractError(std::string("update attempted on frozen partition ") +
                          partition_name(static_cast<Partition>(i)));
    }
  }
  const double lr = config.learning_rate;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ParamEntry& p = params[k];
    ParamSlot& slot = state.slots[k];
    if (slot.path != p.path) {
      throw ContractError("optimizer slot " + slot.path + " does not match " +
                          p.path);
    }
    if (!touched[static_cast<int>(p.partition)] || p.tensor->grad().empty()) {
      continue;
    }
    ++slot.steps;
    auto w = p.tensor->data();
    auto g = p.tensor->grad();
    auto m = slot.first.data();
    auto v = slot.second.data();
    switch (config.kind) {
      case OptimizerKind::kAdam: {
        const double t = static_cast<double>(slot.steps);
        const double c1 = 1.0 - std::pow(config.beta1, t);
        const double c2 = 1.0 - std::pow(config.beta2, t);
        for (std::size_t i = 0; i < w.size(); ++i) {
          m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
          v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
          const double mh = m[i] / c1;
          const double vh = v[i] / c2;
          w[i] -= lr * mh / (std::sqrt(vh) + config.epsilon);
        }
        break;
      }
      case OptimizerKind::kSgd:
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
        break;
      case OptimizerKind::kEmaSgd:
        for (std::size_t i = 0; i < w.size(); ++i) {
          m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
          w[i] -= lr * m[i];
        }
        break;
    }
  }
}

void validate_ema_decay(double decay) {
  if (!(decay >= 0.0 && decay < 1.0)) {
    throw ContractError("EMA decay must lie in [0, 1); got " +
                        std::to_string(decay));
  }
}

EmaState EmaState::create(std::span<const ParamEntry> params, double decay,
                          bool warmup) {
  validate_ema_decay(decay);
  EmaState e;
  e.decay = decay;
  e.warmup = warmup;
  for (const ParamEntry& p : params) {
    e.paths.push_back(p.path);
    ad::Tensor copy(p.tensor->shape());
    std::copy(p.tensor->data().begin(), p.tensor->data().end(),
              copy.data().begin());
    e.shadow.push_back(std::move(copy));
  }
  return e;
}

namespace {

void check_registry(const std::vector<std::string>& paths,
                    std::span<const ParamEntry> params) {
  if (paths.size() != params.size()) {
    throw ContractError("EMA shadow does not match the parameter registry");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (paths[k] != params[k].path) {
      throw ContractError("EMA shadow entry " + paths[k] + " does not match " +
                          params[k].path);
    }
  }
}

}  // namespace

void EmaState::update(std::span<const ParamEntry> params) {
  check_registry(paths, params);
  double d = decay;
  if (warmup) {
    const double n = static_cast<double>(updates);
    d = std::min(d, (1.0 + n) / (10.0 + n));
  }
  ++updates;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto s = shadow[k].data();
    auto w = params[k].tensor->data();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += (1.0 - d) * (w[i] - s[i]);
  }
}

void EmaState::copy_to(std::span<const ParamEntry> params) const {
  check_registry(paths, params);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto w = params[k].tensor->data();
    std::copy(shadow[k].data().begin(), shadow[k].data().end(), w.begin());
  }
}

void EmaState::save(Archive& archive, const std::string& prefix) const {
  archive.add(prefix + "updates",
              ad::Tensor::scalar(static_cast<double>(updates)));
  for (std::size_t k = 0; k < paths.size(); ++k) {
    archive.add(prefix + paths[k], shadow[k]);
  }
}

EmaState EmaState::load(const Archive& archive, const std::string& prefix,
                        std::span<const ParamEntry> params, double decay,
                        bool warmup) {
  EmaState e = create(params, decay, warmup);
  e.updates = static_cast<std::uint64_t>(archive.get(prefix + "updates").item());
  for (std::size_t k = 0; k < e.paths.size(); ++k) {
    const ad::Tensor& t = archive.get(prefix + e.paths[k]);
    if (t.shape() != e.shadow[k].shape()) {
      throw ParseError("EMA shadow for " + e.paths[k] + " has the wrong shape");
    }
    e.shadow[k] = t;
  }
  return e;
}

}  // namespace mute::train

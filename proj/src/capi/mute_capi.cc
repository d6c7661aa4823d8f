// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mute/mute.h"

#include <exception>
#include <iostream>
#include <limits>
#include <new>
#include <string>

#include "common/errors.h"
#include "experiment/commands.h"
#include "experiment/config.h"
#include "experiment/sweep.h"
#include "model/checkpoint.h"
#include "scoring/scoring.h"
#include "search/search.h"

struct mute_config {
  mute::ConfigFile file;
  mute::experiment::ExperimentConfig resolved;
};

struct mute_model {
  mute::LasModel model;
};

struct mute_lm {
  mute::FusionLm lm;
};

struct mute_nbest {
  mute::search::NBestList list;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
mute_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return MUTE_OK;
  } catch (const mute::DimensionError& e) {
    g_last_error = e.what();
    return MUTE_ERR_DIMENSION;
  } catch (const mute::IndexError& e) {
    g_last_error = e.what();
    return MUTE_ERR_INDEX;
  } catch (const mute::ContractError& e) {
    g_last_error = e.what();
    return MUTE_ERR_CONTRACT;
  } catch (const mute::NumericError& e) {
    g_last_error = e.what();
    return MUTE_ERR_NUMERIC;
  } catch (const mute::ParseError& e) {
    g_last_error = e.what();
    return MUTE_ERR_PARSE;
  } catch (const mute::UndefinedRateError& e) {
    g_last_error = e.what();
    return MUTE_ERR_UNDEFINED_RATE;
  } catch (const mute::IoError& e) {
    g_last_error = e.what();
    return MUTE_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MUTE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MUTE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MUTE_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw mute::ContractError(std::string(what) + " must not be NULL");
}

std::string text_or_empty(const char* s) { return s ? s : ""; }

std::string output_dir(const mute_config* config, const char* out_dir,
                       const char* command) {
  return mute::experiment::resolve_output_dir(text_or_empty(out_dir),
                                              config->resolved, command);
}

const mute::search::Hypothesis& entry(const mute_nbest* nbest, size_t rank) {
  require(nbest, "nbest");
  if (rank >= nbest->list.size()) {
    throw mute::IndexError("n-best rank " + std::to_string(rank) +
                           " out of range (size " +
                           std::to_string(nbest->list.size()) + ")");
  }
  return nbest->list[rank];
}

}  // namespace

extern "C" {

const char* mute_version(void) { return "0.1.0"; }

const char* mute_status_name(mute_status status) {
  switch (status) {
    case MUTE_OK: return "ok";
    case MUTE_ERR_DIMENSION: return "dimension error";
    case MUTE_ERR_INDEX: return "index error";
    case MUTE_ERR_CONTRACT: return "contract error";
    case MUTE_ERR_NUMERIC: return "numeric error";
    case MUTE_ERR_PARSE: return "parse error";
    case MUTE_ERR_UNDEFINED_RATE: return "undefined rate";
    case MUTE_ERR_IO: return "i/o error";
    case MUTE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mute_last_error(void) { return g_last_error.c_str(); }

mute_status mute_config_new(mute_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto* c = new mute_config;
    c->resolved = mute::experiment::ExperimentConfig::from_file(c->file);
    *out = c;
  });
}

mute_status mute_config_load(const char* path, mute_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    mute::ConfigFile file = mute::ConfigFile::load(path);
    auto resolved = mute::experiment::ExperimentConfig::from_file(file);
    *out = new mute_config{std::move(file), std::move(resolved)};
  });
}

mute_status mute_config_parse(const char* text, mute_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = nullptr;
    mute::ConfigFile file = mute::ConfigFile::parse(text);
    auto resolved = mute::experiment::ExperimentConfig::from_file(file);
    *out = new mute_config{std::move(file), std::move(resolved)};
  });
}

void mute_config_free(mute_config* config) { delete config; }

mute_status mute_config_set(mute_config* config, const char* section,
                            const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(section, "section");
    require(key, "key");
    require(value, "value");
    mute::ConfigFile file = config->file;
    file.section(section).set(key, std::string(value));
    auto resolved = mute::experiment::ExperimentConfig::from_file(file);
    config->file = std::move(file);
    config->resolved = std::move(resolved);
  });
}

mute_status mute_config_render(const mute_config* config, char* buf,
                               size_t cap, size_t* needed) {
  return guarded([&] {
    require(config, "config");
    const std::string text = config->resolved.render();
    if (needed) *needed = text.size() + 1;
    if (buf && cap > 0) {
      const size_t n = std::min(cap - 1, text.size());
      text.copy(buf, n);
      buf[n] = '\0';
    }
  });
}

mute_status mute_generate(const mute_config* config, const char* out_dir) {
  return guarded([&] {
    require(config, "config");
    mute::experiment::cmd_generate(config->resolved,
                                   output_dir(config, out_dir, "generate"));
  });
}

mute_status mute_train(const mute_config* config, const char* out_dir,
                       int resume, uint64_t stop_at) {
  return guarded([&] {
    require(config, "config");
    mute::experiment::TrainOptions opts;
    opts.resume = resume != 0;
    if (stop_at) opts.stop_at = stop_at;
    mute::experiment::cmd_train(config->resolved,
                                output_dir(config, out_dir, "train"), opts);
  });
}

mute_status mute_train_lm(const mute_config* config, const char* out_dir) {
  return guarded([&] {
    require(config, "config");
    mute::experiment::cmd_train_lm(config->resolved,
                                   output_dir(config, out_dir, "train-lm"));
  });
}

mute_status mute_decode(const mute_config* config, const char* out_dir) {
  return guarded([&] {
    require(config, "config");
    mute::experiment::cmd_decode(config->resolved,
                                 output_dir(config, out_dir, "decode"));
  });
}

mute_status mute_score(const mute_config* config, const char* out_dir) {
  return guarded([&] {
    require(config, "config");
    mute::experiment::cmd_score(config->resolved,
                                output_dir(config, out_dir, "score"));
  });
}

mute_status mute_sweep(const mute_config* config, const char* out_dir,
                       int verbose) {
  return guarded([&] {
    require(config, "config");
    mute::experiment::cmd_sweep(config->resolved,
                                output_dir(config, out_dir, "sweep"),
                                verbose ? &std::cerr : nullptr);
  });
}

mute_status mute_model_load(const char* path, mute_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new mute_model{mute::load_model(path)};
  });
}

void mute_model_free(mute_model* model) { delete model; }

size_t mute_model_vocab_size(const mute_model* model) {
  return model ? model->model.config.vocab_size : 0;
}

size_t mute_model_feature_dim(const mute_model* model) {
  return model ? model->model.config.feature_dim : 0;
}

mute_status mute_lm_load(const char* path, mute_lm** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new mute_lm{mute::load_lm(path)};
  });
}

void mute_lm_free(mute_lm* lm) { delete lm; }

mute_status mute_decode_features(const mute_model* model, const mute_lm* lm,
                                 const double* features, size_t frames,
                                 size_t dim, size_t beam, double lambda,
                                 double alpha, size_t max_length,
                                 mute_nbest** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = nullptr;
    if (frames > 0) require(features, "features");
    if (dim != model->model.config.feature_dim) {
      throw mute::DimensionError(
          "feature dimension " + std::to_string(dim) + " does not match the "
          "model's " + std::to_string(model->model.config.feature_dim));
    }
    mute::ad::Tensor x({frames, dim});
    for (size_t i = 0; i < frames * dim; ++i) x.data()[i] = features[i];
    mute::search::FusionConfig fusion;
    fusion.lambda = lambda;
    fusion.alpha = alpha;
    auto list = mute::search::beam_search(model->model, x, beam, max_length,
                                          lm ? &lm->lm : nullptr, fusion);
    *out = new mute_nbest{std::move(list)};
  });
}

size_t mute_nbest_size(const mute_nbest* nbest) {
  return nbest ? nbest->list.size() : 0;
}

mute_status mute_nbest_scores(const mute_nbest* nbest, size_t rank,
                              double* score, double* asr_score,
                              double* lm_score) {
  return guarded([&] {
    const auto& h = entry(nbest, rank);
    if (score) *score = h.score;
    if (asr_score) *asr_score = h.asr_score;
    if (lm_score) *lm_score = h.lm_score;
  });
}

mute_status mute_nbest_tokens(const mute_nbest* nbest, size_t rank,
                              int32_t* tokens, size_t cap, size_t* length) {
  return guarded([&] {
    const auto seq = entry(nbest, rank).transcript();
    if (length) *length = seq.size();
    if (cap > 0) require(tokens, "tokens");
    for (size_t i = 0; i < seq.size() && i < cap; ++i) {
      tokens[i] = static_cast<int32_t>(seq[i]);
    }
  });
}

void mute_nbest_free(mute_nbest* nbest) { delete nbest; }

mute_status mute_align(const char* ref, const char* hyp, size_t* deletions,
                       size_t* insertions, size_t* substitutions) {
  return guarded([&] {
    require(ref, "ref");
    require(hyp, "hyp");
    const auto a = mute::scoring::align(mute::scoring::split_words(ref),
                                        mute::scoring::split_words(hyp));
    if (deletions) *deletions = a.deletions;
    if (insertions) *insertions = a.insertions;
    if (substitutions) *substitutions = a.substitutions;
  });
}

mute_status mute_relative_improvement(double baseline, double system,
                                      double* out) {
  return guarded([&] {
    require(out, "out");
    *out = mute::scoring::relative_improvement(baseline, system);
  });
}

}  // extern "C"

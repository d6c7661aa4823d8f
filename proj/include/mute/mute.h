/* Copyright 2026 The mute Authors.
 * SPDX-License-Identifier: Apache-2.0 */

/* C interface to the mute library: experiment commands, model loading,
 * beam-search decoding and WER alignment. Every fallible call returns a
 * mute_status; on failure mute_last_error() describes the problem. Handles
 * are opaque and owned by the caller, who releases them with the matching
 * _free function (NULL is accepted). */

#ifndef MUTE_MUTE_H_
#define MUTE_MUTE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MUTE_API __declspec(dllexport)
#else
#define MUTE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mute_status {
  MUTE_OK = 0,
  MUTE_ERR_DIMENSION = 1,
  MUTE_ERR_INDEX = 2,
  MUTE_ERR_CONTRACT = 3,
  MUTE_ERR_NUMERIC = 4,
  MUTE_ERR_PARSE = 5,
  MUTE_ERR_UNDEFINED_RATE = 6,
  MUTE_ERR_IO = 7,
  MUTE_ERR_INTERNAL = 8
} mute_status;

MUTE_API const char* mute_version(void);
MUTE_API const char* mute_status_name(mute_status status);
/* Message of the most recent failure on the calling thread. */
MUTE_API const char* mute_last_error(void);

/* ---- experiment configuration ---- */

typedef struct mute_config mute_config;

MUTE_API mute_status mute_config_new(mute_config** out);
MUTE_API mute_status mute_config_load(const char* path, mute_config** out);
MUTE_API mute_status mute_config_parse(const char* text, mute_config** out);
MUTE_API void mute_config_free(mute_config* config);
/* Sets one key and re-validates; on error the config is left unchanged. */
MUTE_API mute_status mute_config_set(mute_config* config, const char* section,
                                     const char* key, const char* value);
/* Copies the resolved config text into buf (NUL-terminated, truncated to
 * cap). *needed receives the full size including the terminator. */
MUTE_API mute_status mute_config_render(const mute_config* config, char* buf,
                                        size_t cap, size_t* needed);

/* ---- commands ----
 * out_dir may be NULL or empty: the [experiment] output_dir is used, then
 * $MUTE_OUTPUT_ROOT/<command>, then runs/<command>. Each command writes the
 * resolved config to <out>/config.ini. */

MUTE_API mute_status mute_generate(const mute_config* config,
                                   const char* out_dir);
/* stop_at 0 runs to completion; otherwise training halts after that many
 * steps and leaves a state file that resume continues from. */
MUTE_API mute_status mute_train(const mute_config* config, const char* out_dir,
                                int resume, uint64_t stop_at);
MUTE_API mute_status mute_train_lm(const mute_config* config,
                                   const char* out_dir);
MUTE_API mute_status mute_decode(const mute_config* config,
                                 const char* out_dir);
MUTE_API mute_status mute_score(const mute_config* config,
                                const char* out_dir);
/* verbose nonzero prints per-cell progress to stderr. */
MUTE_API mute_status mute_sweep(const mute_config* config, const char* out_dir,
                                int verbose);

/* ---- models ---- */

typedef struct mute_model mute_model;
typedef struct mute_lm mute_lm;
typedef struct mute_nbest mute_nbest;

MUTE_API mute_status mute_model_load(const char* path, mute_model** out);
MUTE_API void mute_model_free(mute_model* model);
MUTE_API size_t mute_model_vocab_size(const mute_model* model);
MUTE_API size_t mute_model_feature_dim(const mute_model* model);

MUTE_API mute_status mute_lm_load(const char* path, mute_lm** out);
MUTE_API void mute_lm_free(mute_lm* lm);

/* Beam search over a row-major [frames x dim] feature matrix. lm may be
 * NULL; with lambda 0 it is never consulted. */
MUTE_API mute_status mute_decode_features(const mute_model* model,
                                          const mute_lm* lm,
                                          const double* features,
                                          size_t frames, size_t dim,
                                          size_t beam, double lambda,
                                          double alpha, size_t max_length,
                                          mute_nbest** out);
MUTE_API size_t mute_nbest_size(const mute_nbest* nbest);
/* Scores of the hypothesis at rank (0-based). Any output may be NULL. */
MUTE_API mute_status mute_nbest_scores(const mute_nbest* nbest, size_t rank,
                                       double* score, double* asr_score,
                                       double* lm_score);
/* Token indices without the end marker. *length receives the full count;
 * at most cap tokens are copied. */
MUTE_API mute_status mute_nbest_tokens(const mute_nbest* nbest, size_t rank,
                                       int32_t* tokens, size_t cap,
                                       size_t* length);
MUTE_API void mute_nbest_free(mute_nbest* nbest);

/* ---- scoring ---- */

/* Minimal edit alignment of two whitespace-separated word strings. */
MUTE_API mute_status mute_align(const char* ref, const char* hyp,
                                size_t* deletions, size_t* insertions,
                                size_t* substitutions);
/* 100 * (baseline - system) / baseline. */
MUTE_API mute_status mute_relative_improvement(double baseline, double system,
                                               double* out);

#ifdef __cplusplus
}
#endif

#endif /* MUTE_MUTE_H_ */

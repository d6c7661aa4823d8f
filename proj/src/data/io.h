// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_DATA_IO_H_
#define MUTE_DATA_IO_H_

#include <string>
#include <vector>

#include "data/corpus.h"
#include "data/types.h"
#include "data/vocabulary.h"

namespace mute::data {

// Feature file: a "T F" header line, then T lines of F whitespace-separated
// decimals. Values are written with 17 significant digits so they read back
// bit-exactly.
void write_features(const std::string& path, const ad::Tensor& features);
ad::Tensor read_features(const std::string& path);

// Manifest: one "id<TAB>feature-path<TAB>transcript" line per utterance.
// Relative feature paths resolve against the manifest's directory.
void write_manifest(const std::string& path,
                    const std::vector<Utterance>& utterances,
                    const Vocabulary& vocab,
                    const std::string& feature_dir = "feats");
// Parse errors carry the offending file and line; a feature dimension other
// than expected_dim (when nonzero) is an error.
std::vector<Utterance> load_manifest(const std::string& path,
                                     const Vocabulary& vocab,
                                     std::size_t expected_dim = 0);

// Reads only ids and transcripts of a manifest, skipping feature files.
std::vector<TextSample> load_manifest_transcripts(const std::string& path,
                                                  const Vocabulary& vocab);

// Text corpus: one space-separated sentence per line.
void write_text(const std::string& path, const std::vector<TextSample>& texts,
                const Vocabulary& vocab);
std::vector<TextSample> load_text(const std::string& path,
                                  const Vocabulary& vocab);

// Directory layout: vocab.txt, text.txt, {train,valid,test_clean,
// test_noisy}.tsv and feats/<id>.txt.
void write_corpus(const std::string& dir, const Corpora& corpora);
Corpora load_corpus(const std::string& dir);

inline constexpr const char* kSplitNames[] = {"train", "valid", "test_clean",
                                              "test_noisy"};

}  // namespace mute::data

#endif  // MUTE_DATA_IO_H_

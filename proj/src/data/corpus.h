// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_DATA_CORPUS_H_
#define MUTE_DATA_CORPUS_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "common/config_text.h"
#include "common/rng.h"
#include "data/types.h"
#include "data/vocabulary.h"

namespace mute::data {

struct CorpusSpec {
  std::uint64_t seed = 1;
  std::size_t content_tokens = 16;
  // Markov order of the sentence grammar.
  std::size_t order = 2;
  // Successor tokens per grammar context.
  std::size_t branching = 3;
  // Successor sets hold at most one token of each confusion group and
  // none of the previous token's group.
  bool group_exclusive = false;
  std::size_t min_length = 3;
  std::size_t max_length = 10;
  double eos_prob = 0.2;
  std::size_t train_size = 200;
  std::size_t valid_size = 40;
  std::size_t test_size = 100;
  // Text-only corpus size as a multiple of train_size when text_size is 0.
  std::size_t text_factor = 50;
  std::size_t text_size = 0;
  std::size_t min_duration = 2;
  std::size_t max_duration = 4;
  std::size_t feature_dim = 8;
  double noise = 0.6;
  double noisy_noise = 0.9;
  // Consecutive runs of group_size tokens (content order) share a base
  // prototype; members differ by offsets of norm confusion / 2.
  std::size_t group_size = 2;
  double confusion = 0.8;
  // [V x F]; generated from the seed when empty.
  ad::Tensor prototypes;

  std::size_t vocab_size() const { return content_tokens + kFirstContent; }
  std::size_t text_count() const {
    return text_size ? text_size : text_factor * train_size;
  }
  void validate() const;

  static CorpusSpec read(const ConfigSection* section);
  void write(ConfigSection& section) const;
};

// Order-k Markov sentence source. Successor sets and weights of a context
// are a pure function of (seed, context), independent of visiting order.
class Grammar {
 public:
  explicit Grammar(const CorpusSpec& spec);

  // Distribution over the next token (content tokens and kEos) after the
  // given sentence prefix.
  std::vector<std::pair<Token, double>> successors(
      std::span<const Token> prefix) const;
  TokenSeq sample(Rng& rng) const;
  // Exact expected share of each vocabulary index among emitted content
  // tokens, by forward propagation over (context, length) states.
  std::vector<double> unigram_distribution() const;
  // Exact probability of a complete sentence.
  double sentence_probability(const TokenSeq& seq) const;

 private:
  std::uint64_t seed_;
  std::size_t content_;
  std::size_t order_;
  std::size_t branching_;
  std::size_t group_size_;
  bool group_exclusive_;
  std::size_t min_length_;
  std::size_t max_length_;
  double eos_prob_;
};

ad::Tensor make_prototypes(const CorpusSpec& spec);

struct Corpora {
  Vocabulary vocab;
  ad::Tensor prototypes;
  std::vector<Utterance> train;
  std::vector<Utterance> valid;
  std::vector<Utterance> test_clean;
  std::vector<Utterance> test_noisy;
  std::vector<TextSample> text;
};

// Paired splits are disjoint by transcript; the text corpus comes from the
// same grammar and excludes validation and test transcripts.
Corpora generate_corpora(const CorpusSpec& spec);

// Prototype rows repeated for a random duration each, plus N(0, sigma^2)
// noise.
ad::Tensor synthesize_features(const TokenSeq& tokens,
                               const ad::Tensor& prototypes,
                               std::size_t min_duration,
                               std::size_t max_duration, double sigma,
                               Rng& rng);

}  // namespace mute::data

#endif  // MUTE_DATA_CORPUS_H_

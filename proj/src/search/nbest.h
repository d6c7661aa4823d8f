// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_SEARCH_NBEST_H_
#define MUTE_SEARCH_NBEST_H_

#include <string>
#include <vector>

#include "data/vocabulary.h"
#include "search/search.h"

namespace mute::search {

struct UtteranceNBest {
  std::string id;
  NBestList hypotheses;
};

// Tab-separated: id, rank (from 1), score, asr score, lm score, tokens. The
// token field omits the end-of-sequence marker; a '#' line heads the file.
void write_nbest(const std::string& path,
                 const std::vector<UtteranceNBest>& records,
                 const data::Vocabulary& vocab);
std::string render_nbest(const std::vector<UtteranceNBest>& records,
                         const data::Vocabulary& vocab);
std::vector<UtteranceNBest> read_nbest(const std::string& path,
                                       const data::Vocabulary& vocab);
std::vector<UtteranceNBest> parse_nbest(const std::string& text,
                                        const data::Vocabulary& vocab);

}  // namespace mute::search

#endif  // MUTE_SEARCH_NBEST_H_

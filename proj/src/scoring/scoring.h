// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_SCORING_SCORING_H_
#define MUTE_SCORING_SCORING_H_

#include <optional>
#include <string>
#include <vector>

namespace mute::scoring {

using Words = std::vector<std::string>;

// Whitespace-separated words of a detokenized transcript.
Words split_words(const std::string& text);

enum class EditKind { kMatch, kSubstitution, kDeletion, kInsertion };

struct AlignedPair {
  EditKind kind;
  std::string ref;  // empty for insertions
  std::string hyp;  // empty for deletions
};

struct AlignmentResult {
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t substitutions = 0;
  std::size_t ref_length = 0;
  std::vector<AlignedPair> pairs;

  std::size_t errors() const { return deletions + insertions + substitutions; }
  // Throws UndefinedRateError when the reference is empty.
  double wer() const;
};

// Unit-cost minimal edit alignment. Among equal-cost backtraces the diagonal
// (match or substitution) is preferred, then deletion, then insertion.
AlignmentResult align(const Words& ref, const Words& hyp);

struct UtteranceScore {
  std::string id;
  AlignmentResult alignment;
  // Index of the n-best entry with the fewest errors (first on ties).
  std::size_t oracle_index = 0;
  std::size_t oracle_errors = 0;
};

struct WerReport {
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t substitutions = 0;
  std::size_t ref_length = 0;
  std::size_t errors = 0;
  double wer = 0.0;
  std::optional<double> oracle_wer;
  std::size_t oracle_errors = 0;
  std::vector<UtteranceScore> utterances;
};

struct ScoredUtterance {
  std::string id;
  Words ref;
  // Ranked hypotheses; the first is the 1-best.
  std::vector<Words> nbest;
};

// Corpus WER from summed counts of each 1-best; oracle WER from the
// minimum-error hypothesis of every list (when any list has more than one
// entry or oracle is requested).
WerReport wer(const std::vector<ScoredUtterance>& utterances,
              bool with_oracle = true);

// Oracle WER of one utterance: min over hypotheses of per-hypothesis WER.
double oracle_wer(const Words& ref, const std::vector<Words>& nbest);

// 100 * (baseline - system) / baseline.
double relative_improvement(double baseline, double system);

struct DiffPair {
  std::string ref;
  std::string hyp;
};

// Plain-text markup: substitutions as {w} on both lines, deletions as [-w-]
// on the reference line, insertions as [+w+] on the hypothesis line.
DiffPair diff_render(const AlignmentResult& alignment);
// Inverse of diff_render.
Words strip_marks(const std::string& marked);

// "D/I/S" in that order.
std::string dis_string(std::size_t d, std::size_t i, std::size_t s);

// Machine-parsable "key value" lines; with per_utterance, one block per
// utterance with its diff follows.
std::string render_report(const WerReport& report, bool per_utterance);

}  // namespace mute::scoring

#endif  // MUTE_SCORING_SCORING_H_

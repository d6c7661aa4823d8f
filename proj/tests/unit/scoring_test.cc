// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

#include "common/errors.h"
#include "common/rng.h"
#include "scoring/scoring.h"

namespace mute::scoring {
namespace {

// Plain recursion over (i, j) without memoization; inputs stay tiny.
std::size_t brute_distance(const Words& a, std::size_t i, const Words& b,
                           std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t sub = brute_distance(a, i + 1, b, j + 1) + (a[i] != b[j]);
  const std::size_t del = brute_distance(a, i + 1, b, j) + 1;
  const std::size_t ins = brute_distance(a, i, b, j + 1) + 1;
  return std::min({sub, del, ins});
}

Words random_words(Rng& rng, std::size_t max_len, std::size_t vocab) {
  Words w(rng.below(max_len + 1));
  for (auto& x : w) x = std::string(1, static_cast<char>('a' + rng.below(vocab)));
  return w;
}

TEST(Align, IdentityHasNoErrors) {
  Words r = split_words("a b c d");
  AlignmentResult a = align(r, r);
  EXPECT_EQ(a.errors(), 0u);
  EXPECT_EQ(a.wer(), 0.0);
}

TEST(Align, EmptyHypothesisIsAllDeletions) {
  AlignmentResult a = align(split_words("a b c"), {});
  EXPECT_EQ(a.deletions, 3u);
  EXPECT_EQ(a.errors(), 3u);
  EXPECT_EQ(a.wer(), 1.0);
}

TEST(Align, EmptyReferenceRateUndefined) {
  AlignmentResult a = align({}, split_words("x y"));
  EXPECT_EQ(a.insertions, 2u);
  EXPECT_THROW(a.wer(), UndefinedRateError);
  std::vector<ScoredUtterance> utts{{"u", {}, {split_words("x")}}};
  EXPECT_THROW(wer(utts), UndefinedRateError);
}

TEST(Align, MatchesBruteForceOnRandomPairs) {
  Rng rng(17);
  for (int trial = 0; trial < 1500; ++trial) {
    Words r = random_words(rng, 8, 3);
    Words h = random_words(rng, 8, 3);
    AlignmentResult a = align(r, h);
    ASSERT_EQ(a.errors(), brute_distance(r, 0, h, 0));
    // The backtrace is a consistent alignment.
    std::size_t refs = 0, hyps = 0;
    for (const auto& p : a.pairs) {
      refs += p.kind != EditKind::kInsertion;
      hyps += p.kind != EditKind::kDeletion;
    }
    ASSERT_EQ(refs, r.size());
    ASSERT_EQ(hyps, h.size());
  }
}

TEST(Align, SwappingSidesSwapsDeletionsAndInsertions) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    Words r = random_words(rng, 7, 3);
    Words h = random_words(rng, 7, 3);
    AlignmentResult ab = align(r, h);
    AlignmentResult ba = align(h, r);
    ASSERT_EQ(ab.errors(), ba.errors());
    if (ab.substitutions == ba.substitutions) {
      EXPECT_EQ(ab.deletions, ba.insertions);
      EXPECT_EQ(ab.insertions, ba.deletions);
    }
    EXPECT_EQ(static_cast<long>(ab.deletions) - static_cast<long>(ab.insertions),
              static_cast<long>(r.size()) - static_cast<long>(h.size()));
  }
}

TEST(Align, TriangleInequality) {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    Words a = random_words(rng, 6, 3);
    Words b = random_words(rng, 6, 3);
    Words c = random_words(rng, 6, 3);
    EXPECT_LE(align(a, c).errors(), align(a, b).errors() + align(b, c).errors());
  }
}

TEST(Align, BacktracePrefersSubstitution) {
  AlignmentResult a = align(split_words("a b"), split_words("a c"));
  EXPECT_EQ(a.substitutions, 1u);
  EXPECT_EQ(a.deletions + a.insertions, 0u);
}

TEST(Oracle, Properties) {
  Words ref = split_words("a b c");
  EXPECT_EQ(oracle_wer(ref, {split_words("a x c")}),
            align(ref, split_words("a x c")).wer());
  EXPECT_EQ(oracle_wer(ref, {split_words("x"), ref}), 0.0);
  EXPECT_THROW(oracle_wer(ref, {}), ContractError);
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    Words r = random_words(rng, 6, 3);
    if (r.empty()) r.push_back("a");
    std::vector<Words> nbest;
    double previous = 2e9;
    for (int k = 0; k < 5; ++k) {
      nbest.push_back(random_words(rng, 6, 3));
      const double o = oracle_wer(r, nbest);
      EXPECT_LE(o, align(r, nbest[0]).wer());
      EXPECT_LE(o, previous);
      previous = o;
    }
  }
}

TEST(Report, CountsSumAndOracle) {
  std::vector<ScoredUtterance> utts{
      {"u1", split_words("a b c d"), {split_words("a c d e"), split_words("a b c d")}},
      {"u2", split_words("x y"), {split_words("x z z")}},
  };
  WerReport r = wer(utts);
  EXPECT_EQ(r.ref_length, 6u);
  EXPECT_EQ(r.errors, r.deletions + r.insertions + r.substitutions);
  EXPECT_EQ(r.errors, 4u);
  EXPECT_DOUBLE_EQ(r.wer, 4.0 / 6.0);
  ASSERT_TRUE(r.oracle_wer.has_value());
  EXPECT_DOUBLE_EQ(*r.oracle_wer, 2.0 / 6.0);
  EXPECT_EQ(r.utterances[0].oracle_index, 1u);
  const std::string text = render_report(r, true);
  EXPECT_NE(text.find("wer 66.6667"), std::string::npos);
  EXPECT_NE(text.find("oracle_wer 33.3333"), std::string::npos);
  EXPECT_NE(text.find("utt u2"), std::string::npos);
  std::vector<ScoredUtterance> none{{"u", split_words("a"), {}}};
  EXPECT_THROW(wer(none), ContractError);
}

TEST(RelativeImprovement, KnownValues) {
  EXPECT_NEAR(relative_improvement(11.4, 10.1), 11.4, 0.05);
  EXPECT_NEAR(relative_improvement(4.7, 4.2), 10.6, 0.05);
  EXPECT_THROW(relative_improvement(0.0, 1.0), ContractError);
}

TEST(Diff, SingleSubstitutionMarkup) {
  DiffPair d = diff_render(align(split_words("a b c"), split_words("a x c")));
  EXPECT_EQ(d.ref, "a {b} c");
  EXPECT_EQ(d.hyp, "a {x} c");
  DiffPair e = diff_render(align(split_words("a b c"), split_words("b c d")));
  EXPECT_EQ(e.ref, "[-a-] b c");
  EXPECT_EQ(e.hyp, "b c [+d+]");
}

TEST(Diff, StripMarksRecoversInputs) {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    Words r = random_words(rng, 7, 3);
    Words h = random_words(rng, 7, 3);
    DiffPair d = diff_render(align(r, h));
    EXPECT_EQ(strip_marks(d.ref), r);
    EXPECT_EQ(strip_marks(d.hyp), h);
  }
}

}  // namespace
}  // namespace mute::scoring

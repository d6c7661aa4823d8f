// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "common/errors.h"
#include "data/batch.h"
#include "data/corpus.h"
#include "data/io.h"
#include "data/vocabulary.h"

namespace mute::data {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mute_data_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

CorpusSpec small_spec() {
  CorpusSpec s;
  s.train_size = 20;
  s.valid_size = 5;
  s.test_size = 6;
  s.text_factor = 3;
  return s;
}

TEST(Vocabulary, ReservedEntriesAndRoundTrip) {
  Vocabulary v = Vocabulary::synthetic(16);
  EXPECT_EQ(v.size(), 19u);
  EXPECT_EQ(v.index("<pad>"), kPad);
  EXPECT_EQ(v.index("<s>"), kSos);
  EXPECT_EQ(v.index("</s>"), kEos);
  std::set<std::string> unique(v.tokens().begin(), v.tokens().end());
  EXPECT_EQ(unique.size(), v.size());
  for (Token i = 0; i < v.size(); ++i) EXPECT_EQ(v.index(v.token(i)), i);
  const auto path = scratch_dir("vocab") / "vocab.txt";
  v.save(path.string());
  EXPECT_EQ(Vocabulary::load(path.string()), v);
}

TEST(Vocabulary, UnknownAndReservedTokensRejected) {
  Vocabulary v = Vocabulary::synthetic(4);
  try {
    v.parse("ba zzz", 7);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("zzz"), std::string::npos);
    EXPECT_EQ(e.line(), 7u);
  }
  EXPECT_THROW(v.parse("ba </s>"), ParseError);
  EXPECT_THROW(Vocabulary({"a", "a"}), ParseError);
}

TEST(Corpus, NoiselessUnitDurationFeaturesArePrototypeRows) {
  CorpusSpec s = small_spec();
  s.noise = 0.0;
  s.min_duration = s.max_duration = 1;
  Corpora c = generate_corpora(s);
  for (const Utterance& u : c.train) {
    ASSERT_EQ(u.features.rows(), u.tokens.size());
    for (std::size_t r = 0; r < u.tokens.size(); ++r) {
      for (std::size_t d = 0; d < s.feature_dim; ++d) {
        EXPECT_EQ(u.features.at(r, d), c.prototypes.at(u.tokens[r], d));
      }
    }
  }
}

bool same_utterances(const std::vector<Utterance>& a,
                     const std::vector<Utterance>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id || a[i].tokens != b[i].tokens ||
        !a[i].features.same_values(b[i].features)) {
      return false;
    }
  }
  return true;
}

TEST(Corpus, SameSeedIsBitIdentical) {
  Corpora a = generate_corpora(small_spec());
  Corpora b = generate_corpora(small_spec());
  EXPECT_TRUE(same_utterances(a.train, b.train));
  EXPECT_TRUE(same_utterances(a.valid, b.valid));
  EXPECT_TRUE(same_utterances(a.test_clean, b.test_clean));
  EXPECT_TRUE(same_utterances(a.test_noisy, b.test_noisy));
  ASSERT_EQ(a.text.size(), b.text.size());
  for (std::size_t i = 0; i < a.text.size(); ++i) {
    EXPECT_EQ(a.text[i].tokens, b.text[i].tokens);
  }
  CorpusSpec other = small_spec();
  other.seed = 2;
  EXPECT_FALSE(same_utterances(a.train, generate_corpora(other).train));
}

TEST(Corpus, SplitsDisjointAndTextExcludesHeldOut) {
  CorpusSpec s;
  Corpora c = generate_corpora(s);
  EXPECT_EQ(c.train.size(), 200u);
  EXPECT_EQ(c.text.size(), 50u * c.train.size());
  std::set<TokenSeq> seen;
  std::set<TokenSeq> held_out;
  for (const auto* split : {&c.train, &c.valid, &c.test_clean, &c.test_noisy}) {
    for (const Utterance& u : *split) {
      EXPECT_TRUE(seen.insert(u.tokens).second);
      if (split != &c.train) held_out.insert(u.tokens);
      EXPECT_GE(u.tokens.size(), s.min_length);
      EXPECT_LE(u.tokens.size(), s.max_length);
      for (Token t : u.tokens) EXPECT_GE(t, kFirstContent);
    }
  }
  for (const TextSample& t : c.text) EXPECT_EQ(held_out.count(t.tokens), 0u);
}

TEST(Corpus, PrototypeShapeMismatchIsContractError) {
  CorpusSpec s = small_spec();
  s.prototypes = ad::Tensor({s.vocab_size(), s.feature_dim + 1});
  EXPECT_THROW(generate_corpora(s), ContractError);
}

TEST(Grammar, SentenceProbabilitiesSumToOneByEnumeration) {
  CorpusSpec s;
  s.content_tokens = 4;
  s.branching = 2;
  s.min_length = 1;
  s.max_length = 5;
  Grammar g(s);
  double total = 0.0;
  std::function<void(TokenSeq&)> walk = [&](TokenSeq& prefix) {
    for (const auto& [t, p] : g.successors(prefix)) {
      if (t == kEos) {
        total += g.sentence_probability(prefix);
      } else {
        prefix.push_back(t);
        walk(prefix);
        prefix.pop_back();
      }
    }
  };
  TokenSeq prefix;
  walk(prefix);
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Grammar, TextUnigramsMatchExactDistribution) {
  CorpusSpec s;
  s.text_size = 10000;
  Corpora c = generate_corpora(s);
  Grammar g(s);
  const std::vector<double> expected = g.unigram_distribution();
  std::vector<double> counts(s.vocab_size(), 0.0);
  double total = 0.0;
  for (const TextSample& t : c.text) {
    for (Token tok : t.tokens) {
      counts[tok] += 1.0;
      total += 1.0;
    }
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    tv += std::abs(counts[i] / total - expected[i]);
  }
  EXPECT_LT(0.5 * tv, 0.02);
}

TEST(Grammar, GroupExclusiveSuccessorsAvoidHomophones) {
  CorpusSpec s;
  s.content_tokens = 12;
  s.group_size = 3;
  s.branching = 3;
  s.group_exclusive = true;
  s.min_length = 1;
  s.max_length = 4;
  Grammar g(s);
  auto group = [](Token t) { return (t - kFirstContent) / 3; };
  double total = 0.0;
  std::function<void(TokenSeq&)> walk = [&](TokenSeq& prefix) {
    std::set<std::size_t> groups;
    std::size_t content = 0;
    for (const auto& [t, p] : g.successors(prefix)) {
      if (t == kEos) {
        total += g.sentence_probability(prefix);
        continue;
      }
      ++content;
      groups.insert(group(t));
      if (!prefix.empty()) EXPECT_NE(group(t), group(prefix.back()));
      prefix.push_back(t);
      walk(prefix);
      prefix.pop_back();
    }
    EXPECT_EQ(groups.size(), content);
  };
  TokenSeq prefix;
  walk(prefix);
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Grammar, GroupExclusiveNeedsSpareGroups) {
  CorpusSpec s;
  s.content_tokens = 8;
  s.group_size = 4;
  s.branching = 2;
  s.group_exclusive = true;
  EXPECT_THROW(s.validate(), ContractError);
  s.branching = 1;
  EXPECT_NO_THROW(s.validate());
}

TEST(Corpus, ZeroConfusionMakesGroupMembersIdentical) {
  CorpusSpec s;
  s.content_tokens = 8;
  s.group_size = 4;
  s.confusion = 0.0;
  const ad::Tensor p = make_prototypes(s);
  for (std::size_t d = 0; d < s.feature_dim; ++d) {
    for (Token t = 1; t < 4; ++t) {
      EXPECT_EQ(p.at(kFirstContent + t, d), p.at(kFirstContent, d));
      EXPECT_EQ(p.at(kFirstContent + 4 + t, d), p.at(kFirstContent + 4, d));
    }
  }
  s.confusion = 1.0;
  const ad::Tensor q = make_prototypes(s);
  double dist = 0.0;
  for (std::size_t d = 0; d < s.feature_dim; ++d) {
    const double diff = q.at(kFirstContent, d) - q.at(kFirstContent + 1, d);
    dist += diff * diff;
  }
  EXPECT_GT(dist, 0.0);
}

TEST(Batch, SingleExampleMaskAllReal) {
  TextSample t{"x", {3, 4, 5}};
  const TextSample* p = &t;
  Batch b = batch_texts(std::span(&p, 1));
  EXPECT_EQ(b.kind, BatchKind::kTextOnly);
  EXPECT_EQ(b.mask[0], (std::vector<std::uint8_t>{1, 1, 1}));
}

TEST(Batch, ShorterExampleIsRightPadded) {
  TextSample a{"a", {3, 4, 5}};
  TextSample b{"b", {6, 7, 8, 9, 10}};
  std::vector<const TextSample*> ptrs{&a, &b};
  Batch batch = batch_texts(ptrs);
  EXPECT_EQ(batch.max_length, 5u);
  EXPECT_EQ(batch.mask[0], (std::vector<std::uint8_t>{1, 1, 1, 0, 0}));
  EXPECT_EQ(batch.tokens[0], (TokenSeq{3, 4, 5, kPad, kPad}));
}

TEST(Batch, FeaturesPaddedWithZeroFrames) {
  Utterance a{"a", ad::Tensor::filled({2, 3}, 1.5), {3}};
  Utterance b{"b", ad::Tensor::filled({4, 3}, 2.0), {4, 5}};
  std::vector<const Utterance*> ptrs{&a, &b};
  Batch batch = batch_utterances(ptrs);
  EXPECT_EQ(batch.frame_lengths, (std::vector<std::size_t>{2, 4}));
  EXPECT_EQ(batch.features[0].shape(), (ad::Shape{4, 3}));
  EXPECT_EQ(batch.features[0].at(1, 2), 1.5);
  EXPECT_EQ(batch.features[0].at(2, 0), 0.0);
  EXPECT_EQ(batch.features[0].at(3, 2), 0.0);
}

TEST(Batch, MixedKindsAndOversizeRejected) {
  Utterance u{"u", ad::Tensor::filled({2, 3}, 1.0), {3}};
  TextSample t{"t", {3}};
  std::vector<Example> mixed{{&u, nullptr}, {nullptr, &t}};
  EXPECT_THROW(make_batch(mixed, 8), ContractError);
  std::vector<Example> two{{nullptr, &t}, {nullptr, &t}};
  EXPECT_THROW(make_batch(two, 1), ContractError);
  EXPECT_THROW(make_batch(std::vector<Example>{}, 4), ContractError);
}

TEST(CorpusIo, WriteThenReadIsIdentity) {
  Corpora c = generate_corpora(small_spec());
  const fs::path dir = scratch_dir("roundtrip");
  write_corpus(dir.string(), c);
  Corpora back = load_corpus(dir.string());
  EXPECT_EQ(back.vocab, c.vocab);
  EXPECT_TRUE(same_utterances(back.train, c.train));
  EXPECT_TRUE(same_utterances(back.valid, c.valid));
  EXPECT_TRUE(same_utterances(back.test_clean, c.test_clean));
  EXPECT_TRUE(same_utterances(back.test_noisy, c.test_noisy));
  ASSERT_EQ(back.text.size(), c.text.size());
  for (std::size_t i = 0; i < c.text.size(); ++i) {
    EXPECT_EQ(back.text[i].tokens, c.text[i].tokens);
  }
}

TEST(CorpusIo, UnknownTranscriptTokenNamed) {
  const fs::path dir = scratch_dir("unknown");
  Vocabulary v = Vocabulary::synthetic(4);
  write_features((dir / "a.txt").string(), ad::Tensor::filled({2, 2}, 0.5));
  {
    std::ofstream m(dir / "m.tsv");
    m << "u1\ta.txt\tba da\n";
    m << "u2\ta.txt\tba qux\n";
  }
  try {
    load_manifest((dir / "m.tsv").string(), v);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("qux"), std::string::npos);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(CorpusIo, TruncatedFeatureRowNamesLine) {
  const fs::path dir = scratch_dir("truncated");
  {
    std::ofstream f(dir / "f.txt");
    f << "3 2\n0.1 0.2\n0.3\n0.5 0.6\n";
  }
  try {
    read_features((dir / "f.txt").string());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  {
    std::ofstream f(dir / "g.txt");
    f << "3 2\n0.1 0.2\n";
  }
  EXPECT_THROW(read_features((dir / "g.txt").string()), ParseError);
  {
    std::ofstream f(dir / "h.txt");
    f << "x 2\n";
  }
  EXPECT_THROW(read_features((dir / "h.txt").string()), ParseError);
}

TEST(CorpusSpec, ConfigRoundTripAndUnknownKey) {
  CorpusSpec s;
  s.noise = 0.125;
  s.train_size = 77;
  ConfigFile f;
  s.write(f.section("corpus"));
  CorpusSpec back = CorpusSpec::read(f.find("corpus"));
  EXPECT_EQ(back.noise, 0.125);
  EXPECT_EQ(back.train_size, 77u);
  f.section("corpus").set("noize", 0.5);
  EXPECT_THROW(CorpusSpec::read(f.find("corpus")), ContractError);
}

}  // namespace
}  // namespace mute::data

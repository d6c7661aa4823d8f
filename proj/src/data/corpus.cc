// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "data/corpus.h"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>

#include "common/errors.h"

namespace mute::data {

void CorpusSpec::validate() const {
  auto fail = [](const std::string& m) { throw ContractError("corpus: " + m); };
  if (content_tokens == 0) fail("content_tokens must be >= 1");
  if (order == 0) fail("order must be >= 1");
  if (branching == 0 || branching > content_tokens) {
    fail("branching must be in [1, content_tokens]");
  }
  if (group_size == 0) fail("group_size must be >= 1");
  if (group_exclusive &&
      branching + 1 > (content_tokens + group_size - 1) / group_size) {
    fail("group_exclusive needs branching < number of confusion groups");
  }
  if (min_length == 0 || min_length > max_length) {
    fail("need 1 <= min_length <= max_length");
  }
  if (!(eos_prob >= 0.0 && eos_prob <= 1.0)) fail("eos_prob must be in [0,1]");
  if (train_size == 0 || valid_size == 0 || test_size == 0 ||
      text_count() == 0) {
    fail("split sizes must be >= 1");
  }
  if (min_duration == 0 || min_duration > max_duration) {
    fail("need 1 <= min_duration <= max_duration");
  }
  if (feature_dim == 0) fail("feature_dim must be >= 1");
  if (!(noise >= 0.0) || !(noisy_noise >= 0.0)) fail("noise must be >= 0");
  if (!(confusion >= 0.0)) fail("confusion must be >= 0");
}

CorpusSpec CorpusSpec::read(const ConfigSection* section) {
  SectionReader r(section, "corpus");
  CorpusSpec s;
  s.seed = r.integer("seed", s.seed);
  s.content_tokens = r.integer("content_tokens", s.content_tokens);
  s.order = r.integer("order", s.order);
  s.branching = r.integer("branching", s.branching);
  s.group_exclusive = r.flag("group_exclusive", s.group_exclusive);
  s.min_length = r.integer("min_length", s.min_length);
  s.max_length = r.integer("max_length", s.max_length);
  s.eos_prob = r.real("eos_prob", s.eos_prob);
  s.train_size = r.integer("train_size", s.train_size);
  s.valid_size = r.integer("valid_size", s.valid_size);
  s.test_size = r.integer("test_size", s.test_size);
  s.text_factor = r.integer("text_factor", s.text_factor);
  s.text_size = r.integer("text_size", s.text_size);
  s.min_duration = r.integer("min_duration", s.min_duration);
  s.max_duration = r.integer("max_duration", s.max_duration);
  s.feature_dim = r.integer("feature_dim", s.feature_dim);
  s.noise = r.real("noise", s.noise);
  s.noisy_noise = r.real("noisy_noise", s.noisy_noise);
  s.group_size = r.integer("group_size", s.group_size);
  s.confusion = r.real("confusion", s.confusion);
  r.finish();
  s.validate();
  return s;
}

void CorpusSpec::write(ConfigSection& c) const {
  c.set("seed", seed);
  c.set("content_tokens", content_tokens);
  c.set("order", order);
  c.set("branching", branching);
  c.set_bool("group_exclusive", group_exclusive);
  c.set("min_length", min_length);
  c.set("max_length", max_length);
  c.set("eos_prob", eos_prob);
  c.set("train_size", train_size);
  c.set("valid_size", valid_size);
  c.set("test_size", test_size);
  c.set("text_factor", text_factor);
  c.set("text_size", text_size);
  c.set("min_duration", min_duration);
  c.set("max_duration", max_duration);
  c.set("feature_dim", feature_dim);
  c.set("noise", noise);
  c.set("noisy_noise", noisy_noise);
  c.set("group_size", group_size);
  c.set("confusion", confusion);
}

namespace {

using Context = std::vector<Token>;

Context initial_context(std::size_t order) { return Context(order, kSos); }

Context shift_context(const Context& ctx, Token t) {
  Context next(ctx.begin() + 1, ctx.end());
  next.push_back(t);
  return next;
}

}  // namespace

Grammar::Grammar(const CorpusSpec& spec)
    : seed_(mix_seed(spec.seed, 7)),
      content_(spec.content_tokens),
      order_(spec.order),
      branching_(spec.branching),
      group_size_(spec.group_size),
      group_exclusive_(spec.group_exclusive),
      min_length_(spec.min_length),
      max_length_(spec.max_length),
      eos_prob_(spec.eos_prob) {}

namespace {

std::vector<std::pair<Token, double>> context_successors(
    std::uint64_t seed, std::size_t content, std::size_t branching,
    std::size_t group_size, bool group_exclusive, std::size_t min_length, std::size_t max_length,
    double eos_prob,
    const Context& ctx, std::size_t length) {
  if (length >= max_length) return {{kEos, 1.0}};
  std::uint64_t h = seed;
  for (Token t : ctx) h = mix_seed(h, t + 1);
  Rng rng(h);
  const std::size_t g = group_exclusive ? group_size : 1;
  std::vector<Token> pool;
  const Token prev = ctx.back();
  for (std::size_t i = 0; i * g < content; ++i) {
    const bool prev_group =
        group_exclusive && prev >= kFirstContent && (prev - kFirstContent) / g == i;
    if (!prev_group) pool.push_back(i);
  }
  std::vector<std::pair<Token, double>> out;
  double total = 0.0;
  for (std::size_t i = 0; i < branching; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    Token pick = pool[i];
    if (group_exclusive) {
      pick *= g;
      pick += rng.below(std::min(g, content - pick));
    }
    const double w = 0.1 + rng.uniform();
    out.emplace_back(kFirstContent + pick, w * w);
    total += w * w;
  }
  const double p_end = length >= min_length ? eos_prob : 0.0;
  for (auto& [t, w] : out) w = w / total * (1.0 - p_end);
  if (p_end > 0.0) out.emplace_back(kEos, p_end);
  return out;
}

}  // namespace

std::vector<std::pair<Token, double>> Grammar::successors(
    std::span<const Token> prefix) const {
  Context ctx = initial_context(order_);
  for (Token t : prefix) ctx = shift_context(ctx, t);
  return context_successors(seed_, content_, branching_, group_size_, group_exclusive_,
                            min_length_, max_length_, eos_prob_, ctx,
                            prefix.size());
}

TokenSeq Grammar::sample(Rng& rng) const {
  TokenSeq seq;
  Context ctx = initial_context(order_);
  while (true) {
    auto succ = context_successors(seed_, content_, branching_,
                                   group_size_, group_exclusive_, min_length_, max_length_,
                                   eos_prob_, ctx, seq.size());
    const double u = rng.uniform();
    double acc = 0.0;
    Token pick = succ.back().first;
    for (const auto& [t, p] : succ) {
      acc += p;
      if (u < acc) {
        pick = t;
        break;
      }
    }
    if (pick == kEos) return seq;
    seq.push_back(pick);
    ctx = shift_context(ctx, pick);
  }
}

std::vector<double> Grammar::unigram_distribution() const {
  std::vector<double> counts(content_ + kFirstContent, 0.0);
  std::map<Context, double> frontier{{initial_context(order_), 1.0}};
  for (std::size_t length = 0; length <= max_length_ && !frontier.empty();
       ++length) {
    std::map<Context, double> next;
    for (const auto& [ctx, p] : frontier) {
      for (const auto& [t, q] :
           context_successors(seed_, content_, branching_, group_size_, group_exclusive_,
                              min_length_, max_length_, eos_prob_, ctx,
                              length)) {
        if (t == kEos) continue;
        counts[t] += p * q;
        next[shift_context(ctx, t)] += p * q;
      }
    }
    frontier = std::move(next);
  }
  double total = 0.0;
  for (double c : counts) total += c;
  for (double& c : counts) c /= total;
  return counts;
}

double Grammar::sentence_probability(const TokenSeq& seq) const {
  double p = 1.0;
  TokenSeq prefix;
  for (std::size_t i = 0; i <= seq.size(); ++i) {
    const Token want = i < seq.size() ? seq[i] : kEos;
    double q = 0.0;
    for (const auto& [t, w] : successors(prefix)) {
      if (t == want) q = w;
    }
    p *= q;
    if (p == 0.0) return 0.0;
    if (i < seq.size()) prefix.push_back(want);
  }
  return p;
}

ad::Tensor make_prototypes(const CorpusSpec& spec) {
  const std::size_t f = spec.feature_dim;
  ad::Tensor table({spec.vocab_size(), f});
  Rng rng(mix_seed(spec.seed, 101));
  const std::size_t g = spec.group_size;
  auto direction = [&] {
    std::vector<double> dir(f);
    double norm = 0.0;
    for (auto& x : dir) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    const double scale = 0.5 * spec.confusion / (norm > 0.0 ? norm : 1.0);
    for (auto& x : dir) x *= scale;
    return dir;
  };
  for (std::size_t i = 0; i < spec.content_tokens; i += g) {
    std::vector<double> base(f);
    for (auto& x : base) x = rng.normal();
    // Pairs sit symmetrically about their base.
    std::vector<double> dir = direction();
    for (std::size_t k = 0; k < g && i + k < spec.content_tokens; ++k) {
      if (k > 0) {
        if (g == 2) {
          for (auto& x : dir) x = -x;
        } else {
          dir = direction();
        }
      }
      for (std::size_t d = 0; d < f; ++d) {
        table.at(kFirstContent + i + k, d) = base[d] + dir[d];
      }
    }
  }
  return table;
}

ad::Tensor synthesize_features(const TokenSeq& tokens,
                               const ad::Tensor& prototypes,
                               std::size_t min_duration,
                               std::size_t max_duration, double sigma,
                               Rng& rng) {
  const std::size_t f = prototypes.cols();
  std::vector<double> data;
  std::size_t frames = 0;
  for (Token t : tokens) {
    if (t >= prototypes.rows()) {
      throw IndexError("synthesize_features: token " + std::to_string(t) +
                       " has no prototype");
    }
    const std::size_t dur =
        min_duration + rng.below(max_duration - min_duration + 1);
    for (std::size_t r = 0; r < dur; ++r) {
      for (std::size_t d = 0; d < f; ++d) {
        double v = prototypes.at(t, d);
        if (sigma > 0.0) v += sigma * rng.normal();
        data.push_back(v);
      }
      ++frames;
    }
  }
  return ad::Tensor({frames, f}, std::move(data));
}

Corpora generate_corpora(const CorpusSpec& spec) {
  spec.validate();
  Corpora c;
  c.vocab = Vocabulary::synthetic(spec.content_tokens);
  c.prototypes = spec.prototypes.empty() ? make_prototypes(spec)
                                         : spec.prototypes;
  if (c.prototypes.rank() != 2 || c.prototypes.cols() != spec.feature_dim ||
      c.prototypes.rows() != spec.vocab_size()) {
    throw ContractError("corpus: prototype table " +
                        ad::shape_str(c.prototypes.shape()) +
                        " does not match V=" +
                        std::to_string(spec.vocab_size()) +
                        " F=" + std::to_string(spec.feature_dim));
  }
  Grammar grammar(spec);
  Rng sentence_rng(mix_seed(spec.seed, 11));
  std::set<TokenSeq> used;
  std::set<TokenSeq> held_out;

  auto unique_sentences = [&](std::size_t n, const char* split) {
    std::vector<TokenSeq> out;
    std::size_t attempts = 0;
    while (out.size() < n) {
      if (++attempts > 1000 * n + 1000) {
        throw ContractError(std::string("corpus: grammar cannot supply ") +
                            std::to_string(n) + " distinct sentences for " +
                            split);
      }
      TokenSeq s = grammar.sample(sentence_rng);
      if (used.insert(s).second) out.push_back(std::move(s));
    }
    return out;
  };

  struct SplitPlan {
    const char* name;
    std::vector<Utterance>* dst;
    std::size_t count;
    double sigma;
    bool held_out;
  };
  const SplitPlan plans[] = {
      {"train", &c.train, spec.train_size, spec.noise, false},
      {"valid", &c.valid, spec.valid_size, spec.noise, true},
      {"clean", &c.test_clean, spec.test_size, spec.noise, true},
      {"noisy", &c.test_noisy, spec.test_size, spec.noisy_noise, true},
  };
  std::uint64_t salt = 20;
  for (const SplitPlan& plan : plans) {
    std::vector<TokenSeq> sentences = unique_sentences(plan.count, plan.name);
    Rng feature_rng(mix_seed(spec.seed, salt++));
    char id[64];
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      std::snprintf(id, sizeof(id), "%s-%04zu", plan.name, i);
      if (plan.held_out) held_out.insert(sentences[i]);
      plan.dst->push_back(
          {id,
           synthesize_features(sentences[i], c.prototypes, spec.min_duration,
                               spec.max_duration, plan.sigma, feature_rng),
           sentences[i]});
    }
  }

  Rng text_rng(mix_seed(spec.seed, 30));
  const std::size_t n_text = spec.text_count();
  std::size_t attempts = 0;
  char id[64];
  while (c.text.size() < n_text) {
    if (++attempts > 100 * n_text + 1000) {
      throw ContractError("corpus: grammar cannot supply the text corpus "
                          "without held-out sentences");
    }
    TokenSeq s = grammar.sample(text_rng);
    if (held_out.count(s)) continue;
    std::snprintf(id, sizeof(id), "text-%06zu", c.text.size());
    c.text.push_back({id, std::move(s)});
  }
  return c;
}

}  // namespace mute::data

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "search/search.h"

#include <algorithm>
#include <cmath>

#include "common/errors.h"

namespace mute::search {

using data::Token;
using data::TokenSeq;

double Hypothesis::normalized(double alpha) const {
  if (alpha == 0.0) return score;
  return score / std::pow(static_cast<double>(tokens.size()), alpha);
}

TokenSeq Hypothesis::transcript() const {
  TokenSeq out = tokens;
  if (!out.empty() && out.back() == data::kEos) out.pop_back();
  return out;
}

void FusionConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ContractError("fusion lambda must be finite and >= 0");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ContractError("length-normalization alpha must be finite and >= 0");
  }
}

std::vector<double> fuse_step(std::span<const double> asr,
                              std::span<const double> lm, double lambda) {
  if (asr.size() != lm.size()) {
    throw DimensionError("fuse_step: asr scores have " +
                         std::to_string(asr.size()) + " entries, lm scores " +
                         std::to_string(lm.size()));
  }
  std::vector<double> out(asr.size());
  for (std::size_t i = 0; i < asr.size(); ++i) out[i] = asr[i] + lambda * lm[i];
  return out;
}

namespace {

std::vector<double> log_softmax_values(const ad::Tensor& logits) {
  const auto& z = logits.data();
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

void check_request(const ad::Tensor& features, std::size_t max_length) {
  if (features.empty() || features.rank() == 0 || features.rows() == 0) {
    throw ContractError("decode: empty feature input");
  }
  if (max_length == 0) throw ContractError("decode: max length must be >= 1");
}

struct Beam {
  Hypothesis hyp;
  DecoderState state;
  DecoderState lm_state;
};

struct Candidate {
  std::size_t parent;
  Token token;
  double score;
  double asr;
  double lm;
};

bool lex_less(const TokenSeq& a, Token ta, const TokenSeq& b, Token tb) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  if (a.size() != b.size()) return a.size() < b.size();
  return ta < tb;
}

bool ranks_before(const Hypothesis& a, const Hypothesis& b, double alpha) {
  const double sa = a.normalized(alpha);
  const double sb = b.normalized(alpha);
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

}  // namespace

Hypothesis greedy_decode_encoded(const LasModel& model, ad::Tape& tape,
                                 ad::Var encoded, std::size_t max_length) {
  if (max_length == 0) throw ContractError("decode: max length must be >= 1");
  const std::size_t vocab = model.config.vocab_size;
  nn::AttentionKeys keys = nn::prepare_attention(model.attention, encoded);
  DecoderState state = initial_audio_state(model, tape);
  Hypothesis hyp;
  Token prev = data::kSos;
  for (std::size_t t = 0; t < max_length; ++t) {
    StepOutput out = decode_step_audio(model, prev, state, keys);
    const std::vector<double> lp = log_softmax_values(out.logits.value());
    Token best = data::kEos;
    if (t + 1 < max_length) {
      for (Token k = data::kFirstContent; k < vocab; ++k) {
        if (lp[k] > lp[best]) best = k;
      }
    }
    hyp.tokens.push_back(best);
    hyp.score += lp[best];
    hyp.asr_score += lp[best];
    if (best == data::kEos) break;
    state = std::move(out.state);
    prev = best;
  }
  hyp.finished = true;
  return hyp;
}

Hypothesis greedy_decode(const LasModel& model, const ad::Tensor& features,
                         std::size_t max_length) {
  check_request(features, max_length);
  ad::Tape tape(false);
  ad::Var enc = encode_inference(model, tape, features);
  return greedy_decode_encoded(model, tape, enc, max_length);
}

NBestList beam_search_encoded(const LasModel& model, ad::Tape& tape,
                              ad::Var encoded, std::size_t beam,
                              std::size_t max_length, const FusionLm* lm,
                              const FusionConfig& fusion) {
  if (beam == 0) throw ContractError("beam_search: beam width must be >= 1");
  if (max_length == 0) throw ContractError("decode: max length must be >= 1");
  fusion.validate();
  const std::size_t vocab = model.config.vocab_size;
  const bool fused = lm != nullptr && fusion.lambda != 0.0;
  if (fused && lm->config.vocab_size != vocab) {
    throw ContractError("beam_search: language model vocabulary " +
                        std::to_string(lm->config.vocab_size) +
                        " does not match the model's " + std::to_string(vocab));
  }
  nn::AttentionKeys keys = nn::prepare_attention(model.attention, encoded);

  std::vector<Beam> active(1);
  active[0].state = initial_audio_state(model, tape);
  if (fused) active[0].lm_state = lm_initial_state(*lm, tape);
  std::vector<Hypothesis> finished;

  for (std::size_t t = 0; t < max_length && !active.empty(); ++t) {
    const bool last = t + 1 == max_length;
    std::vector<Candidate> cands;
    std::vector<DecoderState> next_state(active.size());
    std::vector<DecoderState> next_lm(active.size());
    for (std::size_t a = 0; a < active.size(); ++a) {
      const Beam& b = active[a];
      const Token prev = b.hyp.tokens.empty() ? data::kSos : b.hyp.tokens.back();
      StepOutput out = decode_step_audio(model, prev, b.state, keys);
      const std::vector<double> asr = log_softmax_values(out.logits.value());
      next_state[a] = std::move(out.state);
      std::vector<double> lmp;
      if (fused) {
        LmStep ls = lm_step(*lm, prev, b.lm_state, tape);
        const auto lv = ls.log_probs.value().data();
        lmp.assign(lv.begin(), lv.end());
        next_lm[a] = std::move(ls.state);
      }
      auto push = [&](Token k) {
        Candidate c{a, k, 0.0, asr[k], fused ? lmp[k] : 0.0};
        c.score = fused ? b.hyp.score + (asr[k] + fusion.lambda * lmp[k])
                        : b.hyp.score + asr[k];
        cands.push_back(c);
      };
      push(data::kEos);
      if (!last) {
        for (Token k = data::kFirstContent; k < vocab; ++k) push(k);
      }
    }
    std::sort(cands.begin(), cands.end(),
              [&](const Candidate& x, const Candidate& y) {
                if (x.score != y.score) return x.score > y.score;
                return lex_less(active[x.parent].hyp.tokens, x.token,
                                active[y.parent].hyp.tokens, y.token);
              });
    std::vector<Beam> next;
    for (const Candidate& c : cands) {
      if (next.size() == beam) break;
      const Beam& parent = active[c.parent];
      Hypothesis h = parent.hyp;
      h.tokens.push_back(c.token);
      h.score = c.score;
      h.asr_score += c.asr;
      h.lm_score += c.lm;
      if (c.token == data::kEos) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next.push_back({std::move(h), next_state[c.parent], next_lm[c.parent]});
      }
    }
    active = std::move(next);
    // Scores only decrease along a path, so without length normalization
    // no active prefix can overtake the current B-th finished hypothesis.
    if (fusion.alpha == 0.0 && finished.size() >= beam && !active.empty()) {
      std::vector<double> fs;
      for (const auto& h : finished) fs.push_back(h.score);
      std::nth_element(fs.begin(), fs.begin() + (beam - 1), fs.end(),
                       std::greater<>());
      if (fs[beam - 1] >= active.front().hyp.score) break;
    }
  }
  std::sort(finished.begin(), finished.end(),
            [&](const Hypothesis& a, const Hypothesis& b) {
              return ranks_before(a, b, fusion.alpha);
            });
  if (finished.size() > beam) finished.resize(beam);
  return finished;
}

NBestList beam_search(const LasModel& model, const ad::Tensor& features,
                      std::size_t beam, std::size_t max_length,
                      const FusionLm* lm, const FusionConfig& fusion) {
  check_request(features, max_length);
  ad::Tape tape(false);
  ad::Var enc = encode_inference(model, tape, features);
  return beam_search_encoded(model, tape, enc, beam, max_length, lm, fusion);
}

double sequence_log_prob(const LasModel& model, const ad::Tensor& features,
                         const TokenSeq& tokens) {
  if (tokens.empty() || tokens.back() != data::kEos) {
    throw ContractError("sequence_log_prob: tokens must end with </s>");
  }
  check_request(features, tokens.size());
  ad::Tape tape(false);
  ad::Var enc = encode_inference(model, tape, features);
  nn::AttentionKeys keys = nn::prepare_attention(model.attention, enc);
  DecoderState state = initial_audio_state(model, tape);
  Token prev = data::kSos;
  double total = 0.0;
  for (Token tok : tokens) {
    StepOutput out = decode_step_audio(model, prev, state, keys);
    total += log_softmax_values(out.logits.value())[tok];
    state = std::move(out.state);
    prev = tok;
  }
  return total;
}

}  // namespace mute::search

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "scoring/scoring.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "common/errors.h"

namespace mute::scoring {

Words split_words(const std::string& text) {
  Words out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

double AlignmentResult::wer() const {
  if (ref_length == 0) {
    throw UndefinedRateError("WER is undefined for an empty reference");
  }
  return static_cast<double>(errors()) / static_cast<double>(ref_length);
}

AlignmentResult align(const Words& ref, const Words& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& {
    return d[i * (m + 1) + j];
  };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  AlignmentResult r;
  r.ref_length = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      const bool match = ref[i - 1] == hyp[j - 1];
      r.pairs.push_back({match ? EditKind::kMatch : EditKind::kSubstitution,
                         ref[i - 1], hyp[j - 1]});
      if (!match) ++r.substitutions;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      r.pairs.push_back({EditKind::kDeletion, ref[i - 1], ""});
      ++r.deletions;
      --i;
    } else {
      r.pairs.push_back({EditKind::kInsertion, "", hyp[j - 1]});
      ++r.insertions;
      --j;
    }
  }
  std::reverse(r.pairs.begin(), r.pairs.end());
  return r;
}

double oracle_wer(const Words& ref, const std::vector<Words>& nbest) {
  if (nbest.empty()) throw ContractError("oracle_wer: empty n-best list");
  if (ref.empty()) throw UndefinedRateError("oracle WER of an empty reference");
  std::size_t best = SIZE_MAX;
  for (const Words& h : nbest) best = std::min(best, align(ref, h).errors());
  return static_cast<double>(best) / static_cast<double>(ref.size());
}

WerReport wer(const std::vector<ScoredUtterance>& utterances,
              bool with_oracle) {
  WerReport rep;
  for (const ScoredUtterance& u : utterances) {
    if (u.nbest.empty()) {
      throw ContractError("wer: utterance " + u.id + " has no hypothesis");
    }
    UtteranceScore s;
    s.id = u.id;
    s.alignment = align(u.ref, u.nbest[0]);
    s.oracle_errors = s.alignment.errors();
    for (std::size_t k = 1; k < u.nbest.size(); ++k) {
      const std::size_t e = align(u.ref, u.nbest[k]).errors();
      if (e < s.oracle_errors) {
        s.oracle_errors = e;
        s.oracle_index = k;
      }
    }
    rep.deletions += s.alignment.deletions;
    rep.insertions += s.alignment.insertions;
    rep.substitutions += s.alignment.substitutions;
    rep.ref_length += s.alignment.ref_length;
    rep.oracle_errors += s.oracle_errors;
    rep.utterances.push_back(std::move(s));
  }
  if (rep.ref_length == 0) {
    throw UndefinedRateError("corpus WER is undefined: no reference words");
  }
  rep.errors = rep.deletions + rep.insertions + rep.substitutions;
  const double n = static_cast<double>(rep.ref_length);
  rep.wer = static_cast<double>(rep.errors) / n;
  if (with_oracle) rep.oracle_wer = static_cast<double>(rep.oracle_errors) / n;
  return rep;
}

double relative_improvement(double baseline, double system) {
  if (!(baseline > 0.0)) {
    throw ContractError("relative_improvement: baseline must be positive");
  }
  return 100.0 * (baseline - system) / baseline;
}

DiffPair diff_render(const AlignmentResult& a) {
  DiffPair out;
  auto append = [](std::string& line, const std::string& w) {
    if (!line.empty()) line += ' ';
    line += w;
  };
  for (const AlignedPair& p : a.pairs) {
    switch (p.kind) {
      case EditKind::kMatch:
        append(out.ref, p.ref);
        append(out.hyp, p.hyp);
        break;
      case EditKind::kSubstitution:
        append(out.ref, "{" + p.ref + "}");
        append(out.hyp, "{" + p.hyp + "}");
        break;
      case EditKind::kDeletion:
        append(out.ref, "[-" + p.ref + "-]");
        break;
      case EditKind::kInsertion:
        append(out.hyp, "[+" + p.hyp + "+]");
        break;
    }
  }
  return out;
}

Words strip_marks(const std::string& marked) {
  Words out;
  for (std::string w : split_words(marked)) {
    if (w.size() >= 2 && w.front() == '{' && w.back() == '}') {
      w = w.substr(1, w.size() - 2);
    } else if (w.size() >= 4 && (w.rfind("[-", 0) == 0 || w.rfind("[+", 0) == 0) &&
               w.compare(w.size() - 2, 2, w[1] == '-' ? "-]" : "+]") == 0) {
      w = w.substr(2, w.size() - 4);
    }
    out.push_back(w);
  }
  return out;
}

std::string dis_string(std::size_t d, std::size_t i, std::size_t s) {
  return std::to_string(d) + "/" + std::to_string(i) + "/" + std::to_string(s);
}

namespace {

std::string percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", 100.0 * rate);
  return buf;
}

}  // namespace

std::string render_report(const WerReport& r, bool per_utterance) {
  std::ostringstream out;
  const double n = static_cast<double>(r.ref_length);
  out << "utterances " << r.utterances.size() << '\n';
  out << "ref_words " << r.ref_length << '\n';
  out << "errors " << r.errors << '\n';
  out << "deletions " << r.deletions << '\n';
  out << "insertions " << r.insertions << '\n';
  out << "substitutions " << r.substitutions << '\n';
  out << "dis_counts " << dis_string(r.deletions, r.insertions, r.substitutions)
      << '\n';
  out << "dis_rates " << percent(r.deletions / n) << '/'
      << percent(r.insertions / n) << '/' << percent(r.substitutions / n)
      << '\n';
  out << "wer " << percent(r.wer) << '\n';
  if (r.oracle_wer) {
    out << "oracle_errors " << r.oracle_errors << '\n';
    out << "oracle_wer " << percent(*r.oracle_wer) << '\n';
  }
  if (per_utterance) {
    for (const UtteranceScore& u : r.utterances) {
      const AlignmentResult& a = u.alignment;
      DiffPair d = diff_render(a);
      out << "\nutt " << u.id << " errors " << a.errors() << " ref_words "
          << a.ref_length << " dis "
          << dis_string(a.deletions, a.insertions, a.substitutions)
          << " oracle_rank " << u.oracle_index + 1 << " oracle_errors "
          << u.oracle_errors << '\n';
      out << "ref " << d.ref << '\n';
      out << "hyp " << d.hyp << '\n';
    }
  }
  return out.str();
}

}  // namespace mute::scoring

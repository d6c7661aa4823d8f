// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "search/nbest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "common/config_text.h"
#include "common/errors.h"

namespace mute::search {

namespace {

constexpr const char* kHeader = "#id\trank\tscore\tasr_score\tlm_score\ttokens";

double parse_score(const std::string& field, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != field.size() || !std::isfinite(v)) {
    throw ParseError("bad score '" + field + "'", line);
  }
  return v;
}

}  // namespace

std::string render_nbest(const std::vector<UtteranceNBest>& records,
                         const data::Vocabulary& vocab) {
  std::string out = std::string(kHeader) + "\n";
  for (const UtteranceNBest& r : records) {
    for (std::size_t k = 0; k < r.hypotheses.size(); ++k) {
      const Hypothesis& h = r.hypotheses[k];
      out += r.id + '\t' + std::to_string(k + 1) + '\t' +
             format_double(h.score) + '\t' + format_double(h.asr_score) +
             '\t' + format_double(h.lm_score) + '\t' +
             vocab.render(h.transcript()) + '\n';
    }
  }
  return out;
}

void write_nbest(const std::string& path,
                 const std::vector<UtteranceNBest>& records,
                 const data::Vocabulary& vocab) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << render_nbest(records, vocab);
  if (!f) throw IoError("write failed: " + path);
}

std::vector<UtteranceNBest> parse_nbest(const std::string& text,
                                        const data::Vocabulary& vocab) {
  std::vector<UtteranceNBest> out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.empty() || raw[0] == '#') continue;
    std::vector<std::string> f = split(raw, '\t');
    if (f.size() != 6) {
      throw ParseError("expected 6 tab-separated fields, got " +
                       std::to_string(f.size()), line);
    }
    std::size_t rank = 0;
    try {
      std::size_t used = 0;
      rank = std::stoul(f[1], &used);
      if (used != f[1].size()) rank = 0;
    } catch (const std::exception&) {
      rank = 0;
    }
    if (rank == 0) throw ParseError("bad rank '" + f[1] + "'", line);
    if (rank == 1) {
      out.push_back({f[0], {}});
    } else if (out.empty() || out.back().id != f[0] ||
               out.back().hypotheses.size() + 1 != rank) {
      throw ParseError("rank " + f[1] + " of '" + f[0] +
                       "' does not follow the previous record", line);
    }
    Hypothesis h;
    h.score = parse_score(f[2], line);
    h.asr_score = parse_score(f[3], line);
    h.lm_score = parse_score(f[4], line);
    h.tokens = vocab.parse(f[5], line);
    h.tokens.push_back(data::kEos);
    h.finished = true;
    out.back().hypotheses.push_back(std::move(h));
  }
  return out;
}

std::vector<UtteranceNBest> read_nbest(const std::string& path,
                                       const data::Vocabulary& vocab) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return parse_nbest(s.str(), vocab);
}

}  // namespace mute::search

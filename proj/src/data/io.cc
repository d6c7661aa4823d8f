// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "data/io.h"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/config_text.h"
#include "common/errors.h"

namespace mute::data {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return in;
}

bool parse_size(const std::string& s, std::size_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool parse_double(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return !s.empty() && end == s.c_str() + s.size();
}

}  // namespace

void write_features(const std::string& path, const ad::Tensor& features) {
  std::ofstream out = open_out(path);
  out << features.rows() << ' ' << features.cols() << '\n';
  char buf[40];
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", features.at(r, c));
      if (c) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

ad::Tensor read_features(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty feature file", 1);
  std::istringstream header(line);
  std::string ts, fs_, extra;
  std::size_t t = 0, f = 0;
  if (!(header >> ts >> fs_) || (header >> extra) || !parse_size(ts, t) ||
      !parse_size(fs_, f) || t == 0 || f == 0) {
    throw ParseError(path + ": header must be two positive integers 'T F'", 1);
  }
  std::vector<double> data;
  data.reserve(t * f);
  std::size_t line_no = 1;
  for (std::size_t r = 0; r < t; ++r) {
    ++line_no;
    if (!std::getline(in, line)) {
      throw ParseError(path + ": expected " + std::to_string(t) +
                           " frames, file ends after " + std::to_string(r),
                       line_no);
    }
    std::istringstream row(line);
    std::string word;
    std::size_t n = 0;
    while (row >> word) {
      double v;
      if (!parse_double(word, v)) {
        throw ParseError(path + ": bad number '" + word + "'", line_no);
      }
      if (++n > f) break;
      data.push_back(v);
    }
    if (n != f) {
      throw ParseError(path + ": frame has " + std::to_string(n) +
                           " values, header says F=" + std::to_string(f),
                       line_no);
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      throw ParseError(path + ": more frames than the header's T=" +
                           std::to_string(t),
                       line_no);
    }
  }
  return ad::Tensor({t, f}, std::move(data));
}

void write_manifest(const std::string& path,
                    const std::vector<Utterance>& utterances,
                    const Vocabulary& vocab, const std::string& feature_dir) {
  const fs::path base = fs::path(path).parent_path();
  fs::create_directories(base / feature_dir);
  std::ofstream out = open_out(path);
  for (const Utterance& u : utterances) {
    const std::string rel = feature_dir + "/" + u.id + ".txt";
    write_features((base / rel).string(), u.features);
    out << u.id << '\t' << rel << '\t' << vocab.render(u.tokens) << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

namespace {

struct ManifestRow {
  std::string id;
  std::string feature_path;
  TokenSeq tokens;
};

std::vector<ManifestRow> read_manifest_rows(const std::string& path,
                                            const Vocabulary& vocab) {
  std::ifstream in = open_in(path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(path + ": expected 3 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    ManifestRow row;
    row.id = trim(fields[0]);
    if (row.id.empty()) throw ParseError(path + ": empty utterance id", line_no);
    fs::path feat = trim(fields[1]);
    row.feature_path = (feat.is_absolute() ? feat : base / feat).string();
    try {
      row.tokens = vocab.parse(fields[2]);
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what(), line_no);
    }
    if (row.tokens.empty()) {
      throw ParseError(path + ": empty transcript for " + row.id, line_no);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<Utterance> load_manifest(const std::string& path,
                                     const Vocabulary& vocab,
                                     std::size_t expected_dim) {
  std::vector<Utterance> out;
  for (ManifestRow& row : read_manifest_rows(path, vocab)) {
    ad::Tensor f = read_features(row.feature_path);
    if (expected_dim && f.cols() != expected_dim) {
      throw ParseError(row.feature_path + ": feature dimension " +
                       std::to_string(f.cols()) + " does not match F=" +
                       std::to_string(expected_dim));
    }
    out.push_back({row.id, std::move(f), std::move(row.tokens)});
  }
  return out;
}

std::vector<TextSample> load_manifest_transcripts(const std::string& path,
                                                  const Vocabulary& vocab) {
  std::vector<TextSample> out;
  for (ManifestRow& row : read_manifest_rows(path, vocab)) {
    out.push_back({row.id, std::move(row.tokens)});
  }
  return out;
}

void write_text(const std::string& path, const std::vector<TextSample>& texts,
                const Vocabulary& vocab) {
  std::ofstream out = open_out(path);
  for (const TextSample& t : texts) out << vocab.render(t.tokens) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

std::vector<TextSample> load_text(const std::string& path,
                                  const Vocabulary& vocab) {
  std::ifstream in = open_in(path);
  std::vector<TextSample> out;
  std::string line;
  std::size_t line_no = 0;
  char id[32];
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      throw ParseError(path + ": empty sentence", line_no);
    }
    TokenSeq tokens;
    try {
      tokens = vocab.parse(line);
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what(), line_no);
    }
    std::snprintf(id, sizeof(id), "text-%06zu", out.size());
    out.push_back({id, std::move(tokens)});
  }
  return out;
}

void write_corpus(const std::string& dir, const Corpora& c) {
  fs::create_directories(dir);
  const fs::path base(dir);
  c.vocab.save((base / "vocab.txt").string());
  write_text((base / "text.txt").string(), c.text, c.vocab);
  const std::vector<Utterance>* splits[] = {&c.train, &c.valid, &c.test_clean,
                                            &c.test_noisy};
  for (int i = 0; i < 4; ++i) {
    write_manifest((base / (std::string(kSplitNames[i]) + ".tsv")).string(),
                   *splits[i], c.vocab);
  }
}

Corpora load_corpus(const std::string& dir) {
  const fs::path base(dir);
  Corpora c;
  c.vocab = Vocabulary::load((base / "vocab.txt").string());
  c.text = load_text((base / "text.txt").string(), c.vocab);
  std::vector<Utterance>* splits[] = {&c.train, &c.valid, &c.test_clean,
                                      &c.test_noisy};
  for (int i = 0; i < 4; ++i) {
    *splits[i] = load_manifest(
        (base / (std::string(kSplitNames[i]) + ".tsv")).string(), c.vocab);
  }
  return c;
}

}  // namespace mute::data

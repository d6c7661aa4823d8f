// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "data/vocabulary.h"

#include <fstream>
#include <sstream>

#include "common/config_text.h"
#include "common/errors.h"

namespace mute::data {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& content) {
  tokens_ = {"<pad>", "<s>", "</s>"};
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = i;
  for (const auto& t : content) {
    if (t.empty() || t.find_first_of(" \t\r\n") != std::string::npos) {
      throw ParseError("vocabulary token '" + t + "' is empty or has spaces");
    }
    if (!index_.emplace(t, tokens_.size()).second) {
      throw ParseError("duplicate vocabulary token '" + t + "'");
    }
    tokens_.push_back(t);
  }
}

Vocabulary Vocabulary::synthetic(std::size_t content_tokens) {
  static const char* kOnsets[] = {"b", "d", "g", "k", "m", "n",
                                  "p", "r", "s", "t", "v", "z"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < content_tokens; ++i) {
    std::string name = std::string(kOnsets[i % 12]) + kVowels[(i / 12) % 5];
    if (i >= 60) name += std::to_string(i / 60);
    names.push_back(name);
  }
  return Vocabulary(names);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocabulary " + path);
  std::vector<std::string> content;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) {
      throw ParseError(path + ": empty vocabulary entry", line_no);
    }
    content.push_back(t);
  }
  try {
    return Vocabulary(content);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path);
  for (std::size_t i = kFirstContent; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

const std::string& Vocabulary::token(Token index) const {
  if (index >= tokens_.size()) {
    throw IndexError("token index " + std::to_string(index) +
                     " outside vocabulary of " + std::to_string(size()));
  }
  return tokens_[index];
}

Token Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw ParseError("unknown token '" + token + "'");
  return it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) > 0;
}

std::string Vocabulary::render(const TokenSeq& seq) const {
  std::string out;
  for (Token t : seq) {
    if (!out.empty()) out += ' ';
    out += token(t);
  }
  return out;
}

TokenSeq Vocabulary::parse(const std::string& text, std::size_t line) const {
  TokenSeq out;
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    auto it = index_.find(word);
    if (it == index_.end()) {
      throw ParseError("unknown token '" + word + "'", line);
    }
    if (it->second < kFirstContent) {
      throw ParseError("reserved token '" + word + "' inside a transcript",
                       line);
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace mute::data

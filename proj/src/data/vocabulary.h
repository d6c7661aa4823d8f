// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_DATA_VOCABULARY_H_
#define MUTE_DATA_VOCABULARY_H_

#include <string>
#include <unordered_map>
#include <vector>

#include "data/types.h"

namespace mute::data {

// Reserved entries occupy indices 0..2 (pad, sos, eos); content tokens
// follow in file order.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& content);

  // Syllable-like names "ba", "be", ... for n content tokens.
  static Vocabulary synthetic(std::size_t content_tokens);
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return tokens_.size(); }
  std::size_t content_size() const { return tokens_.size() - kFirstContent; }
  const std::string& token(Token index) const;
  // Throws ParseError naming the token when it is unknown.
  Token index(const std::string& token) const;
  bool contains(const std::string& token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Space-separated rendering of a transcript body.
  std::string render(const TokenSeq& seq) const;
  // Parses a space-separated transcript; reserved tokens are rejected.
  TokenSeq parse(const std::string& text, std::size_t line = 0) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Token> index_;
};

}  // namespace mute::data

#endif  // MUTE_DATA_VOCABULARY_H_

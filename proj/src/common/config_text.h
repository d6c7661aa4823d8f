// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_COMMON_CONFIG_TEXT_H_
#define MUTE_COMMON_CONFIG_TEXT_H_

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace mute {

// Flat sectioned key-value text:
//
//   # comment
//   [section]
//   key = value
struct ConfigSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;

  const std::string* find(const std::string& key) const;
  void set(const std::string& key, std::string value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, int value) {
    set(key, static_cast<std::uint64_t>(value));
  }
  void set_bool(const std::string& key, bool value);
};

class ConfigFile {
 public:
  // Throws ParseError with the line number on malformed input.
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);

  std::string render() const;
  void save(const std::string& path) const;

  const ConfigSection* find(const std::string& name) const;
  ConfigSection& section(const std::string& name);
  const std::vector<ConfigSection>& sections() const { return sections_; }

  // Rejects sections outside the allowed set.
  void check_sections(const std::vector<std::string>& allowed) const;

 private:
  std::vector<ConfigSection> sections_;
};

// Typed reads from one section. Every key present in the section must be
// consumed before finish(), otherwise it is reported as unknown.
class SectionReader {
 public:
  explicit SectionReader(const ConfigSection* section,
                         std::string name = std::string());

  std::string str(const std::string& key, const std::string& fallback);
  std::uint64_t integer(const std::string& key, std::uint64_t fallback);
  double real(const std::string& key, double fallback);
  bool flag(const std::string& key, bool fallback);
  bool has(const std::string& key) const;

  void finish() const;

 private:
  const std::string* take(const std::string& key);

  const ConfigSection* section_;
  std::string name_;
  std::set<std::string> used_;
};

std::string format_double(double value);
// Shortest decimal that reads back to the same double.
std::string short_double(double value);
std::vector<std::string> split(const std::string& text, char sep);
std::string trim(const std::string& text);

}  // namespace mute

#endif  // MUTE_COMMON_CONFIG_TEXT_H_

// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "common/config_text.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "common/errors.h"

namespace mute {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    if (ch == sep) {
      out.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  out.push_back(current);
  return out;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string short_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

const std::string* ConfigSection::find(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

void ConfigSection::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries.emplace_back(key, std::move(value));
}

void ConfigSection::set(const std::string& key, double value) {
  set(key, format_double(value));
}

void ConfigSection::set(const std::string& key, std::uint64_t value) {
  set(key, std::to_string(value));
}

void ConfigSection::set_bool(const std::string& key, bool value) {
  set(key, std::string(value ? "true" : "false"));
}

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile file;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  ConfigSection* current = nullptr;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ParseError("malformed section header '" + line + "'", line_no);
      }
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (file.find(name)) {
        throw ParseError("duplicate section [" + name + "]", line_no);
      }
      current = &file.section(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected 'key = value', got '" + line + "'", line_no);
    }
    if (!current) {
      throw ParseError("key outside of any section", line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (current->find(key)) {
      throw ParseError("duplicate key '" + key + "'", line_no);
    }
    current->entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return file;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse(text.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string ConfigFile::render() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& s : sections_) {
    if (!first) out << '\n';
    first = false;
    out << '[' << s.name << "]\n";
    for (const auto& [k, v] : s.entries) out << k << " = " << v << '\n';
  }
  return out.str();
}

void ConfigFile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write config " + path);
  out << render();
  if (!out) throw IoError("failed writing " + path);
}

const ConfigSection* ConfigFile::find(const std::string& name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ConfigSection& ConfigFile::section(const std::string& name) {
  for (auto& s : sections_) {
    if (s.name == name) return s;
  }
  sections_.push_back({name, {}});
  return sections_.back();
}

void ConfigFile::check_sections(const std::vector<std::string>& allowed) const {
  for (const auto& s : sections_) {
    if (std::find(allowed.begin(), allowed.end(), s.name) == allowed.end()) {
      throw ContractError("unknown config section [" + s.name + "]");
    }
  }
}

SectionReader::SectionReader(const ConfigSection* section, std::string name)
    : section_(section), name_(std::move(name)) {
  if (name_.empty() && section_) name_ = section_->name;
}

bool SectionReader::has(const std::string& key) const {
  return section_ && section_->find(key);
}

const std::string* SectionReader::take(const std::string& key) {
  if (!section_) return nullptr;
  const std::string* v = section_->find(key);
  if (v) used_.insert(key);
  return v;
}

std::string SectionReader::str(const std::string& key,
                               const std::string& fallback) {
  const std::string* v = take(key);
  return v ? *v : fallback;
}

std::uint64_t SectionReader::integer(const std::string& key,
                                     std::uint64_t fallback) {
  const std::string* v = take(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ContractError("[" + name_ + "] " + key +
                        ": expected a nonnegative integer, got '" + *v + "'");
  }
  return out;
}

double SectionReader::real(const std::string& key, double fallback) {
  const std::string* v = take(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double out = std::stod(*v, &used);
    if (used == v->size()) return out;
  } catch (const std::exception&) {
  }
  throw ContractError("[" + name_ + "] " + key + ": expected a number, got '" +
                      *v + "'");
}

bool SectionReader::flag(const std::string& key, bool fallback) {
  const std::string* v = take(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ContractError("[" + name_ + "] " + key + ": expected true/false, got '" +
                      *v + "'");
}

void SectionReader::finish() const {
  if (!section_) return;
  for (const auto& [k, v] : section_->entries) {
    if (!used_.count(k)) {
      throw ContractError("unknown key '" + k + "' in [" + name_ + "]");
    }
  }
}

}  // namespace mute

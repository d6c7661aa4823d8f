// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_COMMON_ERRORS_H_
#define MUTE_COMMON_ERRORS_H_

#include <stdexcept>
#include <string>

namespace mute {

// Shape disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Token or row index outside its valid range.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Violated precondition that is not a shape or index problem.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// NaN or other non-finite input where finite values are required.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed input file. Carries the offending line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")"
                                : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A rate whose denominator is zero.
class UndefinedRateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mute

#endif  // MUTE_COMMON_ERRORS_H_

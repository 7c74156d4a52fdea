#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xrec {

/// Input violates a documented precondition (bad config, bad shapes, negative values).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A text input could not be parsed. Carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Training diverged (NaN/Inf in a loss or activation).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Token or node not present in a lookup table.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

}  // namespace xrec

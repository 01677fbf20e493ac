#pragma once

#include <stdexcept>
#include <string>

namespace uniftest {

/// Bad parameters or malformed input. The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Family file syntax error; the message names the offending line.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// An instance exceeds a configured resource budget (bitmap cap, oracle edge
/// budget, enumeration size). The CLI maps this to exit code 3.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Kneser matching search ran out of restarts before reaching its target.
class InsufficientMatching : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace uniftest

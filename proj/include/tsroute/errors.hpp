#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsroute {

// Invalid distribution or model parameters (non-positive alpha/beta, bad grid, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed external input. Carries the 1-based line and column when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Failure inside an experiment loop; `step()` is the offending step index.
class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, std::size_t step)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace tsroute

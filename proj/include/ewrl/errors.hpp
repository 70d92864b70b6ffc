#pragma once

#include <stdexcept>
#include <string>

namespace ewrl {

// Error taxonomy shared by every module. The CLI maps each category to a
// single-line "ERROR: <category>: <message>" on stderr plus a distinct
// exit code, so messages must be one line and name the offending item.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ContractViolation : std::runtime_error {
  explicit ContractViolation(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numeric quantity left the finite range mid-computation (overflowed ratio,
// NaN loss, ...). Messages name the offending rollout/iteration.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ewrl

#pragma once

#include <stdexcept>
#include <string>

namespace lobimpact {

enum class ErrorKind {
  BrokenChain,
  CrossedQuotes,
  UnmatchedTrade,
  NonHalfTickGap,
  SchemaError,
  InvariantViolation,
  InsufficientData,
  SingularSystem,
  DimensionMismatch,
  WindowTooShort,
  AlphaOutOfRange,
  ConfigInvalid,
};

const char* kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + message), kind_(kind), detail_(message) {}

  ErrorKind kind() const { return kind_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

// SchemaError carrying the offending line (1-based, header is line 1).
class SchemaError : public Error {
 public:
  SchemaError(long line, const std::string& message)
      : Error(ErrorKind::SchemaError, "line " + std::to_string(line) + ": " + message), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace lobimpact

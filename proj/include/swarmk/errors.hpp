#pragma once

#include <limits>
#include <stdexcept>
#include <string>

#include "swarmk/expr.hpp"

namespace swarmk {

/// Problem with a model: bad source text, unknown names, invalid structure.
class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& msg, SourceLoc loc = {})
      : std::runtime_error(msg), loc_(loc) {}
  SourceLoc loc() const { return loc_; }

 private:
  SourceLoc loc_;
};

enum class ParseErrorKind { lexical, syntax, semantic };

/// Error raised while reading model source. what() is "origin:line:col: message".
class ParseError : public ModelError {
 public:
  ParseError(ParseErrorKind kind, const std::string& origin, SourceLoc loc, const std::string& msg);
  ParseErrorKind kind() const { return kind_; }
  const std::string& message() const { return message_; }

 private:
  ParseErrorKind kind_;
  std::string message_;
};

enum class NumericErrorKind {
  non_finite,
  conservation_drift,
  negative_population,
  delay_misaligned,
  division_by_zero,
  missing_history,
  no_root,
  not_reached,
  state_space_too_large,
  unsupported,
};

const char* to_string(NumericErrorKind kind);

/// Failure during a numerical computation. `time()` is the model time at
/// which it was detected, when meaningful (NaN otherwise).
class NumericError : public std::runtime_error {
 public:
  NumericError(NumericErrorKind kind, const std::string& msg, double time = std::numeric_limits<double>::quiet_NaN());
  NumericErrorKind kind() const { return kind_; }
  double time() const { return time_; }

 private:
  NumericErrorKind kind_;
  double time_;
};

}  // namespace swarmk

#include "swarmk/errors.hpp"

namespace swarmk {

ParseError::ParseError(ParseErrorKind kind, const std::string& origin, SourceLoc loc, const std::string& msg)
    : ModelError(origin + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + msg, loc),
      kind_(kind),
      message_(msg) {}

const char* to_string(NumericErrorKind kind) {
  switch (kind) {
    case NumericErrorKind::non_finite: return "NonFinite";
    case NumericErrorKind::conservation_drift: return "ConservationDrift";
    case NumericErrorKind::negative_population: return "NegativePopulation";
    case NumericErrorKind::delay_misaligned: return "DelayMisaligned";
    case NumericErrorKind::division_by_zero: return "DivisionByZero";
    case NumericErrorKind::missing_history: return "MissingHistory";
    case NumericErrorKind::no_root: return "NoRoot";
    case NumericErrorKind::not_reached: return "NotReached";
    case NumericErrorKind::state_space_too_large: return "StateSpaceTooLarge";
    case NumericErrorKind::unsupported: return "Unsupported";
  }
  return "Unknown";
}

NumericError::NumericError(NumericErrorKind kind, const std::string& msg, double time)
    : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind), time_(time) {}

}  // namespace swarmk

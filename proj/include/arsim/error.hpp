#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arsim {

enum class Errc {
  InvalidAction,
  InvalidPowers,
  InvalidConfig,
  EmptyInput,
  NonPositiveEntry,
  DegenerateDenominator,
  NonConvergence,
  EmptySetUnexpected,
  InfiltrationBudgetExceeded,
  InvalidScenario,
  DegenerateVariance,
  ParseError,
  NonPositiveRate,
  NonMonotoneTimestamp,
  IoError,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidAction: return "InvalidAction";
    case Errc::InvalidPowers: return "InvalidPowers";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NonPositiveEntry: return "NonPositiveEntry";
    case Errc::DegenerateDenominator: return "DegenerateDenominator";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::EmptySetUnexpected: return "EmptySetUnexpected";
    case Errc::InfiltrationBudgetExceeded: return "InfiltrationBudgetExceeded";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::ParseError: return "ParseError";
    case Errc::NonPositiveRate: return "NonPositiveRate";
    case Errc::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Domain error raised by every module. The code identifies the failure class;
/// the message carries the detail (offending value, line number, ...).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace arsim

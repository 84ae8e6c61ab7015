#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rdline {

// Every failure raised by the library carries one of these codes so callers
// (and the CLI exit-code mapping) can branch without parsing messages.
enum class ErrorCode {
  InvalidArgument,
  OutsideValidity,
  SingularSystem,
  OscillatoryGamma,
  AmbiguousCase,
  UndefinedAtTZero,
  ZeroBulkRate,
  QuadratureFailure,
  DegenerateDenominator,
  IncompleteSpectrum,
  DegenerateNorm,
  NonFiniteState,
  ConvergenceFailure,
  NonDecayingSignal,
  InvalidMoments,
  UnstableParams,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace rdline

#pragma once

#include <stdexcept>
#include <string>

namespace symk {

/// Failure categories shared by every module. The CLI maps
/// `ConfigError` to exit code 2 and everything else to exit code 1.
enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  NonFinite,
  NotPositiveDefinite,
  NoConvergence,
  Overflow,
  InvalidCoordinate,
  DuplicateFunctional,
  EmptyDataset,
  InsufficientTrace,
  EmptySample,
  NotQuadratic,
  RankDeficient,
  TooManySnapshots,
  FilterTooTight,
  TooFewSamples,
  NotOneDOF,
  GridMismatch,
  EmptySeries,
  AllCandidatesFailed,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace symk

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cerfgp {

enum class ErrorCode {
  Schema,
  Parse,
  DatasetTooSmall,
  ZeroVariance,
  DegenerateGps,
  Input,
  NonDifferentiableKernel,
  IllConditioned,
  Index,
  State,
  NoSupport,
  TooFewUnits,
  DegenerateExposure,
  TuningFailed,
  InsufficientSideData,
  GridTooSmall,
  Estimation,
  Benchmark,
  Config,
  Io,
};

/// Broad failure class; the CLI maps these onto process exit codes.
enum class ErrorCategory { Config, Data, Numerical };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace cerfgp

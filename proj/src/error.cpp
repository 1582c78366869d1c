#include "cerfgp/error.hpp"

namespace cerfgp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Schema: return "schema_error";
    case ErrorCode::Parse: return "parse_error";
    case ErrorCode::DatasetTooSmall: return "dataset_too_small";
    case ErrorCode::ZeroVariance: return "zero_variance";
    case ErrorCode::DegenerateGps: return "degenerate_gps";
    case ErrorCode::Input: return "input_error";
    case ErrorCode::NonDifferentiableKernel: return "non_differentiable_kernel";
    case ErrorCode::IllConditioned: return "ill_conditioned";
    case ErrorCode::Index: return "index_error";
    case ErrorCode::State: return "state_error";
    case ErrorCode::NoSupport: return "no_support";
    case ErrorCode::TooFewUnits: return "too_few_units";
    case ErrorCode::DegenerateExposure: return "degenerate_exposure";
    case ErrorCode::TuningFailed: return "tuning_failed";
    case ErrorCode::InsufficientSideData: return "insufficient_side_data";
    case ErrorCode::GridTooSmall: return "grid_too_small";
    case ErrorCode::Estimation: return "estimation_error";
    case ErrorCode::Benchmark: return "benchmark_error";
    case ErrorCode::Config: return "config_error";
    case ErrorCode::Io: return "io_error";
  }
  return "unknown_error";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::NonDifferentiableKernel:
      return ErrorCategory::Config;
    case ErrorCode::Schema:
    case ErrorCode::Parse:
    case ErrorCode::DatasetTooSmall:
    case ErrorCode::Input:
    case ErrorCode::Io:
    case ErrorCode::Index:
      return ErrorCategory::Data;
    default:
      return ErrorCategory::Numerical;
  }
}

int exit_code_for(ErrorCode code) {
  switch (category_of(code)) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numerical: return 4;
  }
  return 4;
}

}  // namespace cerfgp

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace inscribe {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFinite,
  Asymmetric,
  NegativeSlack,
  DegenerateIncidence,
  NotSimplicial,
  NotFullDimensional,
  InteriorPoint,
  RetryLimit,
  CentroidOnSphere,
  BorderViolation,
  ZeroVertex,
  LengthMismatch,
  InfeasiblePoint,
  Unsupported,
  InvalidParam,
  Parse,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::Asymmetric: return "Asymmetric";
    case ErrorCode::NegativeSlack: return "NegativeSlack";
    case ErrorCode::DegenerateIncidence: return "DegenerateIncidence";
    case ErrorCode::NotSimplicial: return "NotSimplicial";
    case ErrorCode::NotFullDimensional: return "NotFullDimensional";
    case ErrorCode::InteriorPoint: return "InteriorPoint";
    case ErrorCode::RetryLimit: return "RetryLimit";
    case ErrorCode::CentroidOnSphere: return "CentroidOnSphere";
    case ErrorCode::BorderViolation: return "BorderViolation";
    case ErrorCode::ZeroVertex: return "ZeroVertex";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InfeasiblePoint: return "InfeasiblePoint";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace detail

}  // namespace inscribe

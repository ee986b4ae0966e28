#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fairboard {

enum class ErrorCode {
  BadMagic,
  UnsupportedDtype,
  TruncatedFile,
  IoFailure,
  InvalidVolume,
  UnknownLabel,
  GridMismatch,
  EmptyMask,
  BothEmpty,
  EmptyInput,
  NonFiniteInput,
  ZeroMean,
  TooFewValues,
  ZeroVariance,
  EmptyGroup,
  RankDeficient,
  UnknownLevel,
  SingularDesign,
  InsufficientModels,
  BadWeights,
  TooFewStudies,
  TooFewPoints,
  MissingGroundTruth,
  MissingUpstream,
  InvalidArgument,
  ParseError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Missing values are quiet NaNs throughout, matching the tabular exports.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

}  // namespace fairboard

#include "fairboard/error.hpp"

namespace fairboard {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidVolume: return "InvalidVolume";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::BothEmpty: return "BothEmpty";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::ZeroMean: return "ZeroMean";
    case ErrorCode::TooFewValues: return "TooFewValues";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::UnknownLevel: return "UnknownLevel";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::InsufficientModels: return "InsufficientModels";
    case ErrorCode::BadWeights: return "BadWeights";
    case ErrorCode::TooFewStudies: return "TooFewStudies";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::MissingUpstream: return "MissingUpstream";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace fairboard

#include "symk/error.hpp"

namespace symk {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::InvalidCoordinate: return "InvalidCoordinate";
    case ErrorCode::DuplicateFunctional: return "DuplicateFunctional";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InsufficientTrace: return "InsufficientTrace";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::NotQuadratic: return "NotQuadratic";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooManySnapshots: return "TooManySnapshots";
    case ErrorCode::FilterTooTight: return "FilterTooTight";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NotOneDOF: return "NotOneDOF";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::AllCandidatesFailed: return "AllCandidatesFailed";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace symk

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hgr {

enum class ErrorCode {
  InvalidInput,
  EmptyInput,
  SelfEdge,
  DuplicateEdge,
  CycleDetected,
  UnreachableNodes,
  UnknownNode,
  DepthOutOfRange,
  ZeroVector,
  DimMismatch,
  BadMagic,
  VersionUnsupported,
  TruncatedFile,
  IoError,
  MissingEmbeddings,
  InvalidRatio,
  NonPositiveTemperature,
  EmptyBatch,
  MissingParams,
  MissingCounts,
  ZeroCount,
  LabelNotSeen,
  InsufficientImages,
  EmptyCandidates,
  EmptyTestSet,
  Usage,
};

/// Stable short tag printed by the CLI ahead of every diagnostic.
constexpr std::string_view error_tag(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "E_INVALID_INPUT";
    case ErrorCode::EmptyInput: return "E_EMPTY_INPUT";
    case ErrorCode::SelfEdge: return "E_SELF_EDGE";
    case ErrorCode::DuplicateEdge: return "E_DUPLICATE_EDGE";
    case ErrorCode::CycleDetected: return "E_CYCLE";
    case ErrorCode::UnreachableNodes: return "E_UNREACHABLE";
    case ErrorCode::UnknownNode: return "E_UNKNOWN_NODE";
    case ErrorCode::DepthOutOfRange: return "E_DEPTH_RANGE";
    case ErrorCode::ZeroVector: return "E_ZERO_VECTOR";
    case ErrorCode::DimMismatch: return "E_DIM_MISMATCH";
    case ErrorCode::BadMagic: return "E_BAD_MAGIC";
    case ErrorCode::VersionUnsupported: return "E_VERSION";
    case ErrorCode::TruncatedFile: return "E_TRUNCATED";
    case ErrorCode::IoError: return "E_IO";
    case ErrorCode::MissingEmbeddings: return "E_MISSING_EMBEDDINGS";
    case ErrorCode::InvalidRatio: return "E_INVALID_RATIO";
    case ErrorCode::NonPositiveTemperature: return "E_TEMPERATURE";
    case ErrorCode::EmptyBatch: return "E_EMPTY_BATCH";
    case ErrorCode::MissingParams: return "E_MISSING_PARAMS";
    case ErrorCode::MissingCounts: return "E_MISSING_COUNTS";
    case ErrorCode::ZeroCount: return "E_ZERO_COUNT";
    case ErrorCode::LabelNotSeen: return "E_LABEL_NOT_SEEN";
    case ErrorCode::InsufficientImages: return "E_INSUFFICIENT_IMAGES";
    case ErrorCode::EmptyCandidates: return "E_EMPTY_CANDIDATES";
    case ErrorCode::EmptyTestSet: return "E_EMPTY_TEST_SET";
    case ErrorCode::Usage: return "E_USAGE";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace hgr

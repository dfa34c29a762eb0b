#include "screensum/error.hpp"

namespace screensum {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::EmptyScreenplay: return "EmptyScreenplay";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::UnwritableFile: return "UnwritableFile";
    case ErrorCode::EmbeddingDimMismatch: return "EmbeddingDimMismatch";
    case ErrorCode::DimInconsistent: return "DimInconsistent";
    case ErrorCode::MissingText: return "MissingText";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::VocabularyMiss: return "VocabularyMiss";
    case ErrorCode::LengthExceeded: return "LengthExceeded";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::NoCharacters: return "NoCharacters";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
  }
  return "Unknown";
}

}  // namespace screensum

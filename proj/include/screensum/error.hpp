#pragma once

#include <stdexcept>
#include <string>

namespace screensum {

enum class ErrorCode {
  InvalidArgument,
  MalformedXml,
  SchemaViolation,
  EmptyScreenplay,
  DuplicateId,
  MissingField,
  UnreadableFile,
  UnwritableFile,
  EmbeddingDimMismatch,
  DimInconsistent,
  MissingText,
  UnsupportedFormat,
  InvariantViolation,
  ShapeMismatch,
  NonFinite,
  VocabularyMiss,
  LengthExceeded,
  ConfigMismatch,
  NoCharacters,
  TooFewPoints,
  EmptyCorpus,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace screensum

#pragma once

#include <stdexcept>
#include <string>

namespace raganything {

// Base for all engine errors. `code()` is a stable machine-greppable
// identifier that the CLI prints as a prefix on stderr.
class EngineError : public std::runtime_error {
 public:
  EngineError(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define RAGANYTHING_DEFINE_ERROR(NAME, CODE)                      \
  class NAME : public EngineError {                               \
   public:                                                        \
    explicit NAME(const std::string& message)                     \
        : EngineError(CODE, message) {}                           \
  }

// content_model
RAGANYTHING_DEFINE_ERROR(SchemaError, "E_SCHEMA");
RAGANYTHING_DEFINE_ERROR(OrderError, "E_ORDER");
RAGANYTHING_DEFINE_ERROR(RaggedTableError, "E_RAGGED_TABLE");
RAGANYTHING_DEFINE_ERROR(UnitIndexError, "E_INDEX");

// model_gateway
RAGANYTHING_DEFINE_ERROR(ModelTransportError, "E_TRANSPORT");
RAGANYTHING_DEFINE_ERROR(MalformedReplyError, "E_MALFORMED_REPLY");
RAGANYTHING_DEFINE_ERROR(MissingSlotError, "E_MISSING_SLOT");
RAGANYTHING_DEFINE_ERROR(EmptyInputError, "E_EMPTY_INPUT");
RAGANYTHING_DEFINE_ERROR(ContextTooLargeError, "E_CONTEXT_TOO_LARGE");

// retrieval
RAGANYTHING_DEFINE_ERROR(EmptyQueryError, "E_EMPTY_QUERY");
RAGANYTHING_DEFINE_ERROR(DimMismatchError, "E_DIM_MISMATCH");

// synthesis
RAGANYTHING_DEFINE_ERROR(DanglingKeyError, "E_DANGLING_KEY");

// persistence
RAGANYTHING_DEFINE_ERROR(IoError, "E_IO");
RAGANYTHING_DEFINE_ERROR(VersionError, "E_VERSION");
RAGANYTHING_DEFINE_ERROR(ChecksumError, "E_CHECKSUM");

// config
RAGANYTHING_DEFINE_ERROR(ConfigError, "E_CONFIG");

#undef RAGANYTHING_DEFINE_ERROR

}  // namespace raganything

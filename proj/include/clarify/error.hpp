#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clarify {

enum class ErrorCode {
  InvalidArgument,
  EmptyQuery,
  InvalidReport,
  InvalidDecision,
  ParseError,
  DuplicateKey,
  UnknownRef,
  AgentTimeout,
  AgentFailure,
  BackendUnavailable,
  BackendTimeout,
  MalformedResponse,
  UnparsableDecision,
  NotAmbiguous,
  NoPending,
  UnknownOption,
  UnknownSession,
  InvalidCount,
  LengthMismatch,
  Empty,
  EmbedderUnavailable,
  ConfigError,
};

/// Stable wire name of an error code, e.g. "EmptyQuery".
std::string_view to_string(ErrorCode code) noexcept;

/// The one exception type raised by the library. Callers branch on `code()`.
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

}  // namespace clarify

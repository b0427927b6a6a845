#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hap {

enum class ErrorCode {
  InvalidConfig,
  ShapeMismatch,
  IndexOutOfRange,
  MissingRecord,
  DuplicateKey,
  MissingAux,
  MapperFailure,
  ReducerFailure,
  SpillIOFailure,
  DimensionMismatch,
  InvalidRange,
  ParseError,
  PositiveSimilarity,
  LengthMismatch,
  IOFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // what() without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace hap

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hsgd {

enum class ErrorCode {
  kInvalidArgument,
  kLengthMismatch,
  kNonFinite,
  kInvalidLambda,
  kInvalidConfig,
  kParseError,
  kIoError,
  kEmptyInput,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a stable code so the CLI can
// print a machine-readable line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace hsgd

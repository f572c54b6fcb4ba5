#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iotrim {

enum class ErrorCode {
  kValidation,       // malformed name, address, fixture field
  kNotApplicable,    // operation does not apply to this input kind
  kNotFound,         // unknown device, functionality, field, rule, window
  kPrecondition,     // device OFF, window already open, missing baseline
  kDuplicate,
  kUndefinedShare,   // traffic share with zero total bytes
  kDeviceBroken,     // clean run or controls failing
  kUnknownOwner,
  kMismatch,         // longitudinal diff across different devices
  kParse,            // structured-text input could not be parsed
  kIo,
  kUnavailable,      // companion probe or validator not reachable
};

std::string_view ToString(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure carrying the 1-based line of the offending record.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCode::kParse,
              "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace iotrim

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace cspun {

enum class ErrorKind {
  kParse,       // malformed input bytes
  kValidation,  // well-formed input that violates an invariant
  kNotFound,
  kConflict,    // duplicate key, already-assigned split, ...
  kTransport,   // backend unreachable; retryable
  kBackend,     // backend answered but the answer is unusable
  kEmptyContext,
  kInvalidArgument,
};

const char* to_string(ErrorKind kind);

/// Library-wide exception. Carries an optional 1-based line number and a
/// field name so file-level errors can point at the offending cell.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> line = std::nullopt,
        std::optional<std::string> field = std::nullopt);

  ErrorKind kind() const { return kind_; }
  const std::optional<std::size_t>& line() const { return line_; }
  const std::optional<std::string>& field() const { return field_; }
  /// The message without the line/field prefix that what() carries.
  const std::string& message() const { return message_; }
  bool retryable() const { return kind_ == ErrorKind::kTransport; }

  /// One-line JSON object: {"error":"validation","message":...,"line":3,...}
  std::string to_json_line() const;

 private:
  ErrorKind kind_;
  std::string message_;
  std::optional<std::size_t> line_;
  std::optional<std::string> field_;
};

}  // namespace cspun

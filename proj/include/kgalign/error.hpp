#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace kgalign {

enum class ErrorKind {
  ParseError,
  DuplicateId,
  DanglingReference,
  IntegrityError,
  ShapeError,
  ValueError,
  UnknownEntity,
  EmptyEval,
  AttributeUnknown,
  RelationUnknown,
  EmptyCandidates,
  TooManyOptions,
  TransportError,
  ApiError,
  RunAborted,
  IoError,
  ConfigError,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library. The kind selects the CLI exit code
/// and lets tests assert on the failure class without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  /// 1-based line number for parse failures.
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
};

}  // namespace kgalign

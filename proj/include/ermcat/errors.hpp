#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ermcat {

/// Coarse error classes. Each maps to exactly one HTTP status in the service.
enum class ErrorKind {
  bad_request,         // 400: syntax, decode, payload typing, validation
  unauthenticated,     // 401
  forbidden,           // 403
  not_found,           // 404
  method_not_allowed,  // 405
  not_acceptable,      // 406
  conflict,            // 409
  precondition_failed, // 412
  unavailable,         // 503
  internal,            // 500
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the URL parser. `offset` is a byte offset into the raw input for
/// decode errors; `segment` is the index of the offending path segment.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::optional<std::size_t> offset = std::nullopt,
             std::optional<std::size_t> segment = std::nullopt,
             ErrorKind kind = ErrorKind::bad_request)
      : Error(kind, message), offset_(offset), segment_(segment) {}

  std::optional<std::size_t> offset() const noexcept { return offset_; }
  std::optional<std::size_t> segment() const noexcept { return segment_; }

 private:
  std::optional<std::size_t> offset_;
  std::optional<std::size_t> segment_;
};

enum class StorageErrorKind {
  key_violation,
  fkey_violation,
  not_null_violation,
  serialization_conflict,
  type_error,
};

const char* to_string(StorageErrorKind kind) noexcept;

class StorageError : public Error {
 public:
  StorageError(StorageErrorKind kind, const std::string& path, const std::string& detail,
               std::optional<std::size_t> row_index = std::nullopt);

  StorageErrorKind storage_kind() const noexcept { return storage_kind_; }
  const std::string& path() const noexcept { return path_; }
  const std::string& detail() const noexcept { return detail_; }
  std::optional<std::size_t> row_index() const noexcept { return row_index_; }

 private:
  StorageErrorKind storage_kind_;
  std::string path_;
  std::string detail_;
  std::optional<std::size_t> row_index_;
};

}  // namespace ermcat

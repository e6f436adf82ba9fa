#include "ermcat/errors.hpp"

namespace ermcat {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::bad_request: return "bad_request";
    case ErrorKind::unauthenticated: return "unauthenticated";
    case ErrorKind::forbidden: return "forbidden";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::method_not_allowed: return "method_not_allowed";
    case ErrorKind::not_acceptable: return "not_acceptable";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::precondition_failed: return "precondition_failed";
    case ErrorKind::unavailable: return "unavailable";
    case ErrorKind::internal: return "internal";
  }
  return "internal";
}

const char* to_string(StorageErrorKind kind) noexcept {
  switch (kind) {
    case StorageErrorKind::key_violation: return "key_violation";
    case StorageErrorKind::fkey_violation: return "fkey_violation";
    case StorageErrorKind::not_null_violation: return "not_null_violation";
    case StorageErrorKind::serialization_conflict: return "serialization_conflict";
    case StorageErrorKind::type_error: return "type_error";
  }
  return "type_error";
}

namespace {

ErrorKind classify(StorageErrorKind kind) {
  switch (kind) {
    case StorageErrorKind::key_violation:
    case StorageErrorKind::fkey_violation:
    case StorageErrorKind::not_null_violation:
      return ErrorKind::conflict;
    case StorageErrorKind::serialization_conflict:
      return ErrorKind::unavailable;
    case StorageErrorKind::type_error:
      return ErrorKind::bad_request;
  }
  return ErrorKind::internal;
}

std::string describe(StorageErrorKind kind, const std::string& path, const std::string& detail,
                     std::optional<std::size_t> row_index) {
  std::string out = to_string(kind);
  if (!path.empty()) out += " at " + path;
  if (row_index) out += " (row " + std::to_string(*row_index) + ")";
  if (!detail.empty()) out += ": " + detail;
  return out;
}

}  // namespace

StorageError::StorageError(StorageErrorKind kind, const std::string& path, const std::string& detail,
                           std::optional<std::size_t> row_index)
    : Error(classify(kind), describe(kind, path, detail, row_index)),
      storage_kind_(kind),
      path_(path),
      detail_(detail),
      row_index_(row_index) {}

}  // namespace ermcat

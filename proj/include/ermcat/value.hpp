#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace ermcat {

/// The closed column type system.
enum class ColumnType { text, int8, float8, boolean, date, timestamptz, json };

std::string_view to_string(ColumnType type) noexcept;
std::optional<ColumnType> parse_column_type(std::string_view name) noexcept;

/// Proleptic Gregorian calendar date, days since 1970-01-01.
struct Date {
  std::int32_t days = 0;
  friend auto operator<=>(const Date&, const Date&) = default;
};

/// UTC instant, microseconds since the Unix epoch.
struct Timestamp {
  std::int64_t micros = 0;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

/// A JSON document held in canonical (sorted-key, compact) serialization.
struct JsonText {
  std::string text;
  friend auto operator<=>(const JsonText&, const JsonText&) = default;
};

/// A typed cell. std::monostate is SQL NULL.
using Value = std::variant<std::monostate, std::string, std::int64_t, double, bool, Date, Timestamp, JsonText>;
using Row = std::vector<Value>;

inline bool is_null(const Value& v) noexcept { return std::holds_alternative<std::monostate>(v); }

/// True if `v` is null or holds the representation of `type`.
bool value_has_type(const Value& v, ColumnType type) noexcept;

/// Parses the textual form of a constant. Throws StorageError(type_error).
Value parse_value(ColumnType type, std::string_view text);

/// Canonical text form; null renders as the empty string.
std::string format_value(const Value& v);

/// Total order used for sorting: values of one type compare naturally, null
/// sorts after every non-null value.
int compare_values(const Value& a, const Value& b) noexcept;

nlohmann::json value_to_json(const Value& v);
Value value_from_json(ColumnType type, const nlohmann::json& j);

Date make_date(int year, unsigned month, unsigned day);
Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0, int second = 0,
                         std::int64_t micros = 0);

struct ValueHash {
  std::size_t operator()(const Value& v) const noexcept;
};

struct RowHash {
  std::size_t operator()(const Row& r) const noexcept;
};

}  // namespace ermcat

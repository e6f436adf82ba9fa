#include "ermcat/value.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>

#include "ermcat/errors.hpp"

namespace ermcat {

namespace {

constexpr std::int64_t kMicrosPerSecond = 1'000'000;
constexpr std::int64_t kMicrosPerDay = 86'400 * kMicrosPerSecond;

[[noreturn]] void type_error(ColumnType type, std::string_view text) {
  throw StorageError(StorageErrorKind::type_error, "",
                     "cannot interpret '" + std::string(text) + "' as " + std::string(to_string(type)));
}

bool parse_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

std::optional<Date> parse_date_prefix(std::string_view s) {
  int y = 0, m = 0, d = 0;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!parse_digits(s, 0, 4, y) || !parse_digits(s, 5, 2, m) || !parse_digits(s, 8, 2, d)) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  auto date = parse_date_prefix(s);
  if (!date) return std::nullopt;
  std::int64_t micros = static_cast<std::int64_t>(date->days) * kMicrosPerDay;
  std::size_t pos = 10;
  if (pos == s.size()) return Timestamp{micros};
  if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return std::nullopt;
  ++pos;
  int hh = 0, mm = 0, ss = 0;
  if (!parse_digits(s, pos, 2, hh) || pos + 2 >= s.size() || s[pos + 2] != ':' ||
      !parse_digits(s, pos + 3, 2, mm))
    return std::nullopt;
  pos += 5;
  if (pos < s.size() && s[pos] == ':') {
    if (!parse_digits(s, pos + 1, 2, ss)) return std::nullopt;
    pos += 3;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  std::int64_t frac = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 6) frac = frac * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (std::size_t i = digits; i < 6; ++i) frac *= 10;
  }
  std::int64_t offset_minutes = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' || s[pos] == 'z') {
      ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
      int sign = s[pos] == '-' ? -1 : 1;
      int oh = 0, om = 0;
      if (!parse_digits(s, pos + 1, 2, oh)) return std::nullopt;
      pos += 3;
      if (pos < s.size() && s[pos] == ':') ++pos;
      if (pos < s.size()) {
        if (!parse_digits(s, pos, 2, om)) return std::nullopt;
        pos += 2;
      }
      if (oh > 23 || om > 59) return std::nullopt;
      offset_minutes = sign * (oh * 60 + om);
    } else {
      return std::nullopt;
    }
  }
  if (pos != s.size()) return std::nullopt;
  micros += ((hh * 60 + mm) * 60 + ss) * kMicrosPerSecond + frac;
  micros -= offset_minutes * 60 * kMicrosPerSecond;
  return Timestamp{micros};
}

std::string format_date(Date d) {
  std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{d.days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string format_timestamp(Timestamp t) {
  std::int64_t day = floor_div(t.micros, kMicrosPerDay);
  std::int64_t rem = t.micros - day * kMicrosPerDay;
  std::int64_t secs = rem / kMicrosPerSecond;
  std::int64_t frac = rem % kMicrosPerSecond;
  std::string out = format_date(Date{static_cast<std::int32_t>(day)});
  char buf[32];
  std::snprintf(buf, sizeof buf, "T%02lld:%02lld:%02lld", static_cast<long long>(secs / 3600),
                static_cast<long long>((secs / 60) % 60), static_cast<long long>(secs % 60));
  out += buf;
  if (frac != 0) {
    std::snprintf(buf, sizeof buf, ".%06lld", static_cast<long long>(frac));
    std::string f = buf;
    while (f.back() == '0') f.pop_back();
    out += f;
  }
  out += "+00:00";
  return out;
}

std::string format_double(double d) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string_view to_string(ColumnType type) noexcept {
  switch (type) {
    case ColumnType::text: return "text";
    case ColumnType::int8: return "int8";
    case ColumnType::float8: return "float8";
    case ColumnType::boolean: return "boolean";
    case ColumnType::date: return "date";
    case ColumnType::timestamptz: return "timestamptz";
    case ColumnType::json: return "json";
  }
  return "text";
}

std::optional<ColumnType> parse_column_type(std::string_view name) noexcept {
  for (auto t : {ColumnType::text, ColumnType::int8, ColumnType::float8, ColumnType::boolean, ColumnType::date,
                 ColumnType::timestamptz, ColumnType::json}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

bool value_has_type(const Value& v, ColumnType type) noexcept {
  switch (type) {
    case ColumnType::text: return is_null(v) || std::holds_alternative<std::string>(v);
    case ColumnType::int8: return is_null(v) || std::holds_alternative<std::int64_t>(v);
    case ColumnType::float8: return is_null(v) || std::holds_alternative<double>(v);
    case ColumnType::boolean: return is_null(v) || std::holds_alternative<bool>(v);
    case ColumnType::date: return is_null(v) || std::holds_alternative<Date>(v);
    case ColumnType::timestamptz: return is_null(v) || std::holds_alternative<Timestamp>(v);
    case ColumnType::json: return is_null(v) || std::holds_alternative<JsonText>(v);
  }
  return false;
}

Value parse_value(ColumnType type, std::string_view text) {
  switch (type) {
    case ColumnType::text:
      return std::string(text);
    case ColumnType::int8: {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) type_error(type, text);
      return v;
    }
    case ColumnType::float8: {
      double v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
        type_error(type, text);
      return v;
    }
    case ColumnType::boolean:
      if (text == "true") return true;
      if (text == "false") return false;
      type_error(type, text);
    case ColumnType::date: {
      auto d = parse_date_prefix(text);
      if (!d || text.size() != 10) type_error(type, text);
      return *d;
    }
    case ColumnType::timestamptz: {
      auto t = parse_timestamp(text);
      if (!t) type_error(type, text);
      return *t;
    }
    case ColumnType::json: {
      auto doc = nlohmann::json::parse(text, nullptr, false);
      if (doc.is_discarded()) type_error(type, text);
      return JsonText{doc.dump()};
    }
  }
  type_error(type, text);
}

std::string format_value(const Value& v) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(Date d) const { return format_date(d); }
    std::string operator()(Timestamp t) const { return format_timestamp(t); }
    std::string operator()(const JsonText& j) const { return j.text; }
  };
  return std::visit(Visitor{}, v);
}

int compare_values(const Value& a, const Value& b) noexcept {
  bool an = is_null(a), bn = is_null(b);
  if (an || bn) return an == bn ? 0 : (an ? 1 : -1);
  if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
  auto cmp = a <=> b;
  if (cmp == std::partial_ordering::less) return -1;
  if (cmp == std::partial_ordering::greater) return 1;
  return 0;
}

nlohmann::json value_to_json(const Value& v) {
  struct Visitor {
    nlohmann::json operator()(std::monostate) const { return nullptr; }
    nlohmann::json operator()(const std::string& s) const { return s; }
    nlohmann::json operator()(std::int64_t i) const { return i; }
    nlohmann::json operator()(double d) const { return d; }
    nlohmann::json operator()(bool b) const { return b; }
    nlohmann::json operator()(Date d) const { return format_date(d); }
    nlohmann::json operator()(Timestamp t) const { return format_timestamp(t); }
    nlohmann::json operator()(const JsonText& j) const { return nlohmann::json::parse(j.text); }
  };
  return std::visit(Visitor{}, v);
}

Value value_from_json(ColumnType type, const nlohmann::json& j) {
  if (j.is_null()) return std::monostate{};
  auto fail = [&]() -> Value { type_error(type, j.dump()); };
  switch (type) {
    case ColumnType::text:
      if (!j.is_string()) return fail();
      return j.get<std::string>();
    case ColumnType::int8:
      if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) return fail();
      if (j.is_number_integer()) return j.get<std::int64_t>();
      return fail();
    case ColumnType::float8:
      if (j.is_number()) return j.get<double>();
      return fail();
    case ColumnType::boolean:
      if (!j.is_boolean()) return fail();
      return j.get<bool>();
    case ColumnType::date:
    case ColumnType::timestamptz:
      if (!j.is_string()) return fail();
      return parse_value(type, j.get<std::string>());
    case ColumnType::json:
      return JsonText{j.dump()};
  }
  return fail();
}

Date make_date(int year, unsigned month, unsigned day) {
  std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  return Date{static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
}

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute, int second,
                         std::int64_t micros) {
  auto d = make_date(year, month, day);
  return Timestamp{static_cast<std::int64_t>(d.days) * kMicrosPerDay +
                   ((hour * 60 + minute) * 60 + second) * kMicrosPerSecond + micros};
}

std::size_t ValueHash::operator()(const Value& v) const noexcept {
  struct Visitor {
    std::size_t operator()(std::monostate) const { return 0x9e3779b9u; }
    std::size_t operator()(const std::string& s) const { return std::hash<std::string>{}(s); }
    std::size_t operator()(std::int64_t i) const { return std::hash<std::int64_t>{}(i); }
    std::size_t operator()(double d) const { return std::hash<double>{}(d); }
    std::size_t operator()(bool b) const { return b ? 1 : 2; }
    std::size_t operator()(Date d) const { return std::hash<std::int32_t>{}(d.days); }
    std::size_t operator()(Timestamp t) const { return std::hash<std::int64_t>{}(t.micros); }
    std::size_t operator()(const JsonText& j) const { return std::hash<std::string>{}(j.text); }
  };
  return std::visit(Visitor{}, v) ^ (v.index() * 0x100000001b3ull);
}

std::size_t RowHash::operator()(const Row& r) const noexcept {
  std::size_t h = 1469598103934665603ull;
  ValueHash vh;
  for (const auto& v : r) h = (h ^ vh(v)) * 1099511628211ull;
  return h;
}

}  // namespace ermcat

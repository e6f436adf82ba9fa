#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ermcat/model.hpp"

namespace ermcat {

enum class Mapping { entity, attribute, attributegroup, aggregate };
enum class JoinDirection { inner, left, right, full };
enum class Operator { eq, lt, leq, gt, geq, null, regexp, ciregexp, ts };
enum class AggregateFn { cnt, cnt_d, min, max, array };
enum class Format { json, csv };

std::string_view to_string(Mapping m) noexcept;
std::string_view to_string(Operator op) noexcept;  // URL token, e.g. "::gt::"
std::string_view to_string(AggregateFn fn) noexcept;
std::string_view to_string(Format f) noexcept;
bool is_text_pattern(Operator op) noexcept;

struct TableRef {
  std::optional<std::string> schema;
  std::string table;
  friend bool operator==(const TableRef&, const TableRef&) = default;
};

/// Explicit join endpoint: columns of the current context naming one side of
/// a foreign key. The joined table is the other side.
struct Endpoint {
  JoinDirection direction = JoinDirection::inner;
  std::vector<std::string> columns;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// A table instance in the path. A TableRef source after the first element
/// joins implicitly on the unique foreign key relating it to the context.
struct TableInstance {
  std::optional<std::string> alias;
  std::variant<TableRef, Endpoint> source;
  friend bool operator==(const TableInstance&, const TableInstance&) = default;
};

struct ColumnRef {
  std::optional<std::string> alias;
  std::string column;     // empty when wildcard
  bool wildcard = false;  // unencoded "*"
  friend bool operator==(const ColumnRef&, const ColumnRef&) = default;
};

/// Boolean filter tree. Parsed trees are normalized: And/Or nodes have at
/// least two children and never directly contain a node of their own kind.
struct Predicate {
  enum class Kind { leaf, negation, conjunction, disjunction };
  Kind kind = Kind::leaf;
  ColumnRef column;                     // leaf
  Operator op = Operator::eq;           // leaf
  std::optional<std::string> operand;   // leaf; absent only for ::null::
  std::vector<Predicate> children;      // negation: exactly one

  static Predicate leaf(ColumnRef column, Operator op, std::optional<std::string> operand = std::nullopt);
  static Predicate negate(Predicate child);
  static Predicate all_of(std::vector<Predicate> children);
  static Predicate any_of(std::vector<Predicate> children);

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct FilterElement {
  Predicate predicate;
  friend bool operator==(const FilterElement&, const FilterElement&) = default;
};

struct ContextReset {
  std::string alias;
  friend bool operator==(const ContextReset&, const ContextReset&) = default;
};

using PathElement = std::variant<TableInstance, FilterElement, ContextReset>;

struct OutputColumn {
  std::optional<std::string> out_alias;
  std::optional<AggregateFn> fn;
  ColumnRef source;  // wildcard only inside cnt(*)

  /// External name: the alias, else the source column name.
  std::string name() const;
  friend bool operator==(const OutputColumn&, const OutputColumn&) = default;
};

/// attribute/aggregate use `columns` only; attributegroup puts its group keys
/// in `group_keys` and the aggregate or update columns in `columns`.
struct Projection {
  std::vector<OutputColumn> group_keys;
  std::vector<OutputColumn> columns;
  friend bool operator==(const Projection&, const Projection&) = default;
};

struct SortKey {
  std::string column;
  bool descending = false;
  friend bool operator==(const SortKey&, const SortKey&) = default;
};

struct DataRequest {
  std::string catalog;
  Mapping mapping = Mapping::entity;
  std::vector<PathElement> path;
  std::optional<Projection> projection;
  std::optional<std::vector<SortKey>> sort;
  std::optional<std::vector<std::optional<std::string>>> after;  // nullopt entry = ::null::
  std::optional<std::uint64_t> limit;
  std::optional<Format> accept;
  bool explain = false;
  friend bool operator==(const DataRequest&, const DataRequest&) = default;
};

/// Parses a raw (still percent-encoded) data URL path and query string.
DataRequest parse_data_url(std::string_view path_text, std::string_view query_text = {});

/// Parses one filter path segment (already split on unencoded "/").
Predicate parse_filter(std::string_view segment_text);

/// Canonical URL text; parse_data_url(render) reproduces the request.
std::string render(const DataRequest& request);
std::string render_filter(const Predicate& predicate);

/// Parses "/ermrest/catalog/N/schema/..." or a bare "/schema/..." path.
ModelPath parse_model_url(std::string_view path_text);

}  // namespace ermcat

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ermcat/model.hpp"
#include "ermcat/text_match.hpp"
#include "ermcat/url.hpp"

namespace ermcat {

enum class JoinKind { inner, left, right, full };
enum class Method { get, post, put, del };

/// Join of a path instance onto an earlier instance, derived from exactly one
/// foreign key. `on` pairs (column index in attach table, column index in the
/// joined table).
struct JoinStep {
  JoinKind kind = JoinKind::inner;
  std::size_t attach = 0;
  std::vector<std::pair<std::size_t, std::size_t>> on;
  std::vector<std::pair<std::string, std::string>> on_names;
};

struct PlanInstance {
  std::optional<std::string> alias;
  TableName table;
  std::optional<JoinStep> join;  // absent for the root
};

struct JoinTree {
  std::vector<PlanInstance> instances;
  std::map<std::string, std::size_t> aliases;
  std::size_t context = 0;  // final path context
};

struct ColumnSlot {
  std::size_t instance = 0;
  std::size_t column = 0;
  ColumnType type = ColumnType::text;
  friend bool operator==(const ColumnSlot&, const ColumnSlot&) = default;
};

/// Predicate with resolved columns and operands parsed to column types.
/// A wildcard leaf carries every text column of its instance (possibly none).
struct TypedPredicate {
  Predicate::Kind kind = Predicate::Kind::leaf;
  std::vector<ColumnSlot> columns;
  bool wildcard = false;
  Operator op = Operator::eq;
  Value operand;
  std::shared_ptr<const TextPattern> pattern;
  std::vector<TypedPredicate> children;
};

struct PlanOutput {
  std::string name;
  ColumnType type = ColumnType::text;
  std::optional<AggregateFn> fn;
  std::optional<ColumnSlot> source;  // absent only for cnt(*)
};

struct PlanSort {
  std::variant<std::size_t, ColumnSlot> key;  // output index or hidden source column
  bool descending = false;
};

struct QueryPlan {
  Mapping mapping = Mapping::entity;
  JoinTree joins;
  std::optional<TypedPredicate> predicate;
  std::vector<PlanOutput> outputs;
  std::size_t group_key_count = 0;   // attributegroup: leading outputs that are group keys
  std::vector<PlanSort> ordering;    // client keys first, then implicit tie-breaks
  std::size_t client_sort_count = 0;
  std::optional<std::vector<Value>> after;
  std::optional<std::uint64_t> limit;
  std::size_t target = 0;
};

enum class MutationKind { entity_insert, entity_update, entity_delete, attribute_clear, group_update };

/// Binding of one input (payload) column to a target table column.
struct InputBinding {
  std::string input;
  std::size_t column = 0;
  ColumnType type = ColumnType::text;
};

struct MutationPlan {
  MutationKind kind = MutationKind::entity_insert;
  TableName target;
  std::vector<InputBinding> correlation;  // entity_update: key; group_update: group keys
  std::vector<InputBinding> assignments;  // insert/update payload columns; clear: columns to null
  std::optional<QueryPlan> selection;     // delete/clear: rows chosen by path + filters
};

/// Resolved path: join tree plus each filter with the context it saw.
struct ResolvedPath {
  JoinTree joins;
  std::vector<std::pair<std::size_t, const Predicate*>> filters;
};

ResolvedPath resolve_path(const DataRequest& request, const ErmModel& model);
QueryPlan plan_retrieval(const DataRequest& request, const ErmModel& model);
MutationPlan plan_mutation(const DataRequest& request, const ErmModel& model, Method method,
                           const std::vector<std::string>& payload_columns);

/// Deterministic, indented text rendering of a plan tree.
std::string explain(const QueryPlan& plan, const ErmModel& model);

}  // namespace ermcat

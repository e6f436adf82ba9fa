#pragma once

#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "ermcat/model.hpp"

namespace ermcat {

struct CreateSchema {
  Schema schema;
};
struct CreateTable {
  Table table;  // full subtree; schema taken from table.schema_name
};
struct AddColumn {
  TableName table;
  Column column;
};
struct AddKey {
  TableName table;
  Key key;
};
struct AddForeignKey {
  TableName table;
  ForeignKey fkey;
};
struct DeleteElement {
  ModelPath path;
};
struct SetComment {
  ModelPath path;
  std::optional<std::string> text;  // nullopt clears
};
struct PutAnnotation {
  ModelPath path;
  std::string key;
  nlohmann::json payload;
};
struct DeleteAnnotation {
  ModelPath path;
  std::string key;
};

using ModelChange = std::variant<CreateSchema, CreateTable, AddColumn, AddKey, AddForeignKey, DeleteElement,
                                 SetComment, PutAnnotation, DeleteAnnotation>;

struct ModelChangeResult {
  ErmModel model;
  nlohmann::ordered_json document;  // the created/updated element, null after deletes
};

/// Applies one change to a copy of `model`. The result is fully validated;
/// on any error nothing is returned and `model` is untouched.
///
/// Errors: name collision or a delete that would orphan a cross-table
/// reference -> conflict; unknown element -> not_found; invariant violations
/// -> bad_request naming the offending element path.
ModelChangeResult apply_model_change(const ErmModel& model, const ModelChange& change);

/// Comment of an element; throws not_found for unknown or container paths.
std::optional<std::string> element_comment(const ErmModel& model, const ModelPath& path);
const Annotations& element_annotations(const ErmModel& model, const ModelPath& path);

}  // namespace ermcat

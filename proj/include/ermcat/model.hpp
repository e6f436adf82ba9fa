#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ermcat/value.hpp"

namespace ermcat {

/// Annotation payloads keyed by URI. The service stores and serves them; it
/// never reads them.
using Annotations = std::map<std::string, nlohmann::json>;

struct TableName {
  std::string schema;
  std::string table;
  friend auto operator<=>(const TableName&, const TableName&) = default;
};

std::string to_string(const TableName& name);

struct Column {
  std::string name;
  ColumnType type = ColumnType::text;
  bool nullok = true;
  std::optional<Value> default_value;
  std::optional<std::string> comment;
  Annotations annotations;
  friend bool operator==(const Column&, const Column&) = default;
};

struct Key {
  std::vector<std::string> columns;
  std::optional<std::string> comment;
  Annotations annotations;
  friend bool operator==(const Key&, const Key&) = default;
};

struct ForeignKey {
  std::optional<std::string> name;
  std::vector<std::string> columns;
  TableName referenced;
  std::vector<std::string> referenced_columns;
  std::optional<std::string> comment;
  Annotations annotations;
  friend bool operator==(const ForeignKey&, const ForeignKey&) = default;
};

struct Table {
  std::string schema_name;
  std::string name;
  std::optional<std::string> comment;
  Annotations annotations;
  std::vector<Column> columns;
  std::vector<Key> keys;
  std::vector<ForeignKey> foreign_keys;

  TableName table_name() const { return {schema_name, name}; }
  const Column* find_column(std::string_view column) const;
  std::optional<std::size_t> column_index(std::string_view column) const;
  /// Finds a key whose column set equals `columns` (order-insensitive).
  const Key* find_key(const std::vector<std::string>& columns) const;
  friend bool operator==(const Table&, const Table&) = default;
};

struct Schema {
  std::string name;
  std::optional<std::string> comment;
  Annotations annotations;
  std::map<std::string, Table> tables;
  friend bool operator==(const Schema&, const Schema&) = default;
};

/// The catalog's entity-relationship model. Value type; published snapshots
/// are held as shared_ptr<const ErmModel>.
struct ErmModel {
  std::map<std::string, Schema> schemas;

  static ErmModel initial();  // one empty "public" schema

  const Table* find_table(const TableName& name) const;
  Table* find_table(const TableName& name);
  /// Resolves an unqualified table name across schemas. Throws not_found or
  /// bad_request (ambiguous).
  const Table& resolve_table(const std::optional<std::string>& schema, const std::string& table) const;

  friend bool operator==(const ErmModel&, const ErmModel&) = default;
};

/// Two key column lists denote the same key when they hold the same set.
bool same_column_set(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct ModelViolation {
  std::string path;
  std::string reason;
};

/// Checks every structural invariant. Total; an empty result means valid.
std::vector<ModelViolation> validate_model(const ErmModel& model);

// --- element paths ---------------------------------------------------------

/// A typed address of a model element or one of its sub-resources.
struct ModelPath {
  enum class Element {
    model,             // /schema
    schema,            // /schema/S
    table_container,   // /schema/S/table
    table,             // /schema/S/table/T
    column_container,  // .../column
    column,            // .../column/C
    key_container,     // .../key
    key,               // .../key/C1,C2
    fkey_container,    // .../foreignkey
    fkey,              // .../foreignkey/C1,C2/reference/S2:T2/D1,D2
  };
  enum class Sub { none, comment, annotations, annotation };

  std::optional<std::string> catalog;
  Element element = Element::model;
  std::string schema;
  std::string table;
  std::string column;
  std::vector<std::string> columns;  // key columns or fkey columns
  TableName referenced;
  std::vector<std::string> referenced_columns;
  Sub sub = Sub::none;
  std::string annotation_key;

  friend bool operator==(const ModelPath&, const ModelPath&) = default;
};

/// Renders the element part of a path (no catalog prefix), percent-encoded.
std::string render_model_path(const ModelPath& path);

// --- documents -------------------------------------------------------------

nlohmann::ordered_json column_to_json(const Column& column);
nlohmann::ordered_json key_to_json(const Key& key);
nlohmann::ordered_json fkey_to_json(const ForeignKey& fkey);
nlohmann::ordered_json table_to_json(const Table& table);
nlohmann::ordered_json schema_to_json(const Schema& schema);
nlohmann::ordered_json model_to_json(const ErmModel& model);

/// Inverse of the *_to_json functions. Throws Error(bad_request) on shape or
/// type problems; names taken from context when absent from the document.
Column column_from_json(const nlohmann::json& doc);
Key key_from_json(const nlohmann::json& doc);
ForeignKey fkey_from_json(const nlohmann::json& doc, const std::string& default_schema);
Table table_from_json(const nlohmann::json& doc, const std::string& schema_name);
Schema schema_from_json(const nlohmann::json& doc, const std::string& name);
ErmModel model_from_json(const nlohmann::json& doc);

/// Resolves an element path to its JSON document. Throws not_found.
nlohmann::ordered_json element_document(const ErmModel& model, const ModelPath& path);

}  // namespace ermcat

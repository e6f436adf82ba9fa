#include "ermcat/model_change.hpp"

#include <algorithm>

#include "ermcat/errors.hpp"

namespace ermcat {

namespace {

struct ElementSlots {
  std::optional<std::string>* comment = nullptr;
  Annotations* annotations = nullptr;
};

Schema& schema_of(ErmModel& m, const std::string& name) {
  auto it = m.schemas.find(name);
  if (it == m.schemas.end()) throw Error(ErrorKind::not_found, "schema " + name + " not found");
  return it->second;
}

Table& table_of(ErmModel& m, const TableName& name) {
  Schema& s = schema_of(m, name.schema);
  auto it = s.tables.find(name.table);
  if (it == s.tables.end()) throw Error(ErrorKind::not_found, "table " + to_string(name) + " not found");
  return it->second;
}

ElementSlots locate(ErmModel& m, const ModelPath& p) {
  using E = ModelPath::Element;
  switch (p.element) {
    case E::schema: {
      Schema& s = schema_of(m, p.schema);
      return {&s.comment, &s.annotations};
    }
    case E::table: {
      Table& t = table_of(m, {p.schema, p.table});
      return {&t.comment, &t.annotations};
    }
    case E::column: {
      Table& t = table_of(m, {p.schema, p.table});
      for (auto& c : t.columns)
        if (c.name == p.column) return {&c.comment, &c.annotations};
      throw Error(ErrorKind::not_found, "column " + p.column + " not found");
    }
    case E::key: {
      Table& t = table_of(m, {p.schema, p.table});
      for (auto& k : t.keys)
        if (same_column_set(k.columns, p.columns)) return {&k.comment, &k.annotations};
      throw Error(ErrorKind::not_found, "key not found");
    }
    case E::fkey: {
      Table& t = table_of(m, {p.schema, p.table});
      for (auto& fk : t.foreign_keys)
        if (fk.columns == p.columns && fk.referenced == p.referenced && fk.referenced_columns == p.referenced_columns)
          return {&fk.comment, &fk.annotations};
      throw Error(ErrorKind::not_found, "foreign key not found");
    }
    default:
      throw Error(ErrorKind::not_found, "element has no comment or annotations");
  }
}

struct Referrer {
  TableName table;
  const ForeignKey* fkey;
};

// Foreign keys anywhere in the model whose referenced key is `key` of `target`.
std::vector<Referrer> referrers_of_key(const ErmModel& m, const TableName& target, const std::vector<std::string>& key) {
  std::vector<Referrer> out;
  for (const auto& [_, s] : m.schemas)
    for (const auto& [__, t] : s.tables)
      for (const auto& fk : t.foreign_keys)
        if (fk.referenced == target && same_column_set(fk.referenced_columns, key))
          out.push_back({t.table_name(), &fk});
  return out;
}

std::string describe(const Referrer& r) {
  std::string cols;
  for (const auto& c : r.fkey->columns) cols += (cols.empty() ? "" : ",") + c;
  return to_string(r.table) + "(" + cols + ")" + (r.fkey->name ? " [" + *r.fkey->name + "]" : "");
}

void validate_or_throw(const ErmModel& m) {
  auto violations = validate_model(m);
  if (!violations.empty()) {
    throw Error(ErrorKind::bad_request,
                "validation error at " + violations.front().path + ": " + violations.front().reason);
  }
}

void delete_column(ErmModel& m, Table& t, const std::string& column) {
  if (!t.find_column(column)) throw Error(ErrorKind::not_found, "column " + column + " not found");
  auto uses = [&](const std::vector<std::string>& cols) {
    return std::find(cols.begin(), cols.end(), column) != cols.end();
  };
  const TableName self = t.table_name();
  for (const auto& k : t.keys) {
    if (!uses(k.columns)) continue;
    for (const auto& r : referrers_of_key(m, self, k.columns)) {
      if (r.table != self)
        throw Error(ErrorKind::conflict, "column " + column + " is part of a key referenced by " + describe(r));
    }
  }
  std::vector<std::vector<std::string>> dropped_keys;
  for (const auto& k : t.keys)
    if (uses(k.columns)) dropped_keys.push_back(k.columns);
  std::erase_if(t.keys, [&](const Key& k) { return uses(k.columns); });
  std::erase_if(t.foreign_keys, [&](const ForeignKey& fk) {
    if (uses(fk.columns)) return true;
    if (fk.referenced != self) return false;
    return std::any_of(dropped_keys.begin(), dropped_keys.end(),
                       [&](const auto& k) { return same_column_set(k, fk.referenced_columns); });
  });
  std::erase_if(t.columns, [&](const Column& c) { return c.name == column; });
}

void delete_table(ErmModel& m, const TableName& name) {
  table_of(m, name);
  for (const auto& [_, s] : m.schemas)
    for (const auto& [__, t] : s.tables) {
      if (t.table_name() == name) continue;
      for (const auto& fk : t.foreign_keys)
        if (fk.referenced == name)
          throw Error(ErrorKind::conflict,
                      "table " + to_string(name) + " is referenced by " + describe({t.table_name(), &fk}));
    }
  schema_of(m, name.schema).tables.erase(name.table);
}

void delete_schema(ErmModel& m, const std::string& name) {
  schema_of(m, name);
  for (const auto& [sname, s] : m.schemas) {
    if (sname == name) continue;
    for (const auto& [_, t] : s.tables)
      for (const auto& fk : t.foreign_keys)
        if (fk.referenced.schema == name)
          throw Error(ErrorKind::conflict, "schema " + name + " is referenced by " + describe({t.table_name(), &fk}));
  }
  m.schemas.erase(name);
}

struct Applier {
  ErmModel& m;

  nlohmann::ordered_json operator()(const CreateSchema& c) {
    if (c.schema.name.empty()) throw Error(ErrorKind::bad_request, "schema name is empty");
    if (m.schemas.count(c.schema.name)) throw Error(ErrorKind::conflict, "schema " + c.schema.name + " already exists");
    m.schemas.emplace(c.schema.name, c.schema);
    validate_or_throw(m);
    return schema_to_json(m.schemas.at(c.schema.name));
  }

  nlohmann::ordered_json operator()(const CreateTable& c) {
    Schema& s = schema_of(m, c.table.schema_name);
    if (s.tables.count(c.table.name))
      throw Error(ErrorKind::conflict, "table " + to_string(c.table.table_name()) + " already exists");
    s.tables.emplace(c.table.name, c.table);
    validate_or_throw(m);
    return table_to_json(*m.find_table(c.table.table_name()));
  }

  nlohmann::ordered_json operator()(const AddColumn& c) {
    Table& t = table_of(m, c.table);
    if (t.find_column(c.column.name)) throw Error(ErrorKind::conflict, "column " + c.column.name + " already exists");
    t.columns.push_back(c.column);
    validate_or_throw(m);
    return column_to_json(c.column);
  }

  nlohmann::ordered_json operator()(const AddKey& c) {
    Table& t = table_of(m, c.table);
    if (t.find_key(c.key.columns)) throw Error(ErrorKind::conflict, "key already exists");
    t.keys.push_back(c.key);
    validate_or_throw(m);
    return key_to_json(c.key);
  }

  nlohmann::ordered_json operator()(const AddForeignKey& c) {
    Table& t = table_of(m, c.table);
    for (const auto& fk : t.foreign_keys)
      if (fk.columns == c.fkey.columns && fk.referenced == c.fkey.referenced &&
          fk.referenced_columns == c.fkey.referenced_columns)
        throw Error(ErrorKind::conflict, "foreign key already exists");
    t.foreign_keys.push_back(c.fkey);
    validate_or_throw(m);
    return fkey_to_json(c.fkey);
  }

  nlohmann::ordered_json operator()(const DeleteElement& c) {
    using E = ModelPath::Element;
    const ModelPath& p = c.path;
    switch (p.element) {
      case E::schema: delete_schema(m, p.schema); break;
      case E::table: delete_table(m, {p.schema, p.table}); break;
      case E::column: delete_column(m, table_of(m, {p.schema, p.table}), p.column); break;
      case E::key: {
        Table& t = table_of(m, {p.schema, p.table});
        if (!t.find_key(p.columns)) throw Error(ErrorKind::not_found, "key not found");
        auto refs = referrers_of_key(m, t.table_name(), p.columns);
        if (!refs.empty()) throw Error(ErrorKind::conflict, "key is referenced by " + describe(refs.front()));
        std::erase_if(t.keys, [&](const Key& k) { return same_column_set(k.columns, p.columns); });
        break;
      }
      case E::fkey: {
        Table& t = table_of(m, {p.schema, p.table});
        auto before = t.foreign_keys.size();
        std::erase_if(t.foreign_keys, [&](const ForeignKey& fk) {
          return fk.columns == p.columns && fk.referenced == p.referenced &&
                 fk.referenced_columns == p.referenced_columns;
        });
        if (before == t.foreign_keys.size()) throw Error(ErrorKind::not_found, "foreign key not found");
        break;
      }
      default:
        throw Error(ErrorKind::method_not_allowed, "containers cannot be deleted");
    }
    validate_or_throw(m);
    return nullptr;
  }

  nlohmann::ordered_json operator()(const SetComment& c) {
    auto slots = locate(m, c.path);
    *slots.comment = c.text;
    return c.text ? nlohmann::ordered_json(*c.text) : nlohmann::ordered_json(nullptr);
  }

  nlohmann::ordered_json operator()(const PutAnnotation& c) {
    auto slots = locate(m, c.path);
    (*slots.annotations)[c.key] = c.payload;
    return nlohmann::ordered_json::parse(c.payload.dump());
  }

  nlohmann::ordered_json operator()(const DeleteAnnotation& c) {
    auto slots = locate(m, c.path);
    if (!slots.annotations->erase(c.key)) throw Error(ErrorKind::not_found, "annotation " + c.key + " not found");
    return nullptr;
  }
};

}  // namespace

ModelChangeResult apply_model_change(const ErmModel& model, const ModelChange& change) {
  ModelChangeResult result{model, nullptr};
  result.document = std::visit(Applier{result.model}, change);
  return result;
}

std::optional<std::string> element_comment(const ErmModel& model, const ModelPath& path) {
  return *locate(const_cast<ErmModel&>(model), path).comment;
}

const Annotations& element_annotations(const ErmModel& model, const ModelPath& path) {
  return *locate(const_cast<ErmModel&>(model), path).annotations;
}

}  // namespace ermcat

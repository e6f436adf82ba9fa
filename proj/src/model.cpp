#include "ermcat/model.hpp"

#include <algorithm>
#include <set>

#include "ermcat/errors.hpp"
#include "ermcat/percent.hpp"

namespace ermcat {

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void bad_document(const std::string& what) {
  throw Error(ErrorKind::bad_request, "malformed model document: " + what);
}

void put_common(ojson& doc, const std::optional<std::string>& comment, const Annotations& annotations) {
  if (comment) doc["comment"] = *comment;
  if (!annotations.empty()) {
    ojson ann = ojson::object();
    for (const auto& [k, v] : annotations) ann[k] = ojson::parse(v.dump());
    doc["annotations"] = std::move(ann);
  }
}

void get_common(const nlohmann::json& doc, std::optional<std::string>& comment, Annotations& annotations) {
  if (auto it = doc.find("comment"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) bad_document("comment must be a string");
    comment = it->get<std::string>();
  }
  if (auto it = doc.find("annotations"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) bad_document("annotations must be an object");
    for (const auto& [k, v] : it->items()) annotations[k] = v;
  }
}

std::vector<std::string> string_list(const nlohmann::json& doc, const char* field) {
  auto it = doc.find(field);
  if (it == doc.end() || !it->is_array()) bad_document(std::string(field) + " must be a list of names");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) bad_document(std::string(field) + " must be a list of names");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string required_string(const nlohmann::json& doc, const char* field) {
  auto it = doc.find(field);
  if (it == doc.end() || !it->is_string()) bad_document(std::string("missing string field ") + field);
  return it->get<std::string>();
}

std::string join_encoded(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += percent_encode(names[i]);
  }
  return out;
}

std::string table_path(const TableName& t) {
  return "/schema/" + percent_encode(t.schema) + "/table/" + percent_encode(t.table);
}

}  // namespace

std::string to_string(const TableName& name) { return name.schema + ":" + name.table; }

const Column* Table::find_column(std::string_view column) const {
  for (const auto& c : columns)
    if (c.name == column) return &c;
  return nullptr;
}

std::optional<std::size_t> Table::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == column) return i;
  return std::nullopt;
}

const Key* Table::find_key(const std::vector<std::string>& cols) const {
  for (const auto& k : keys)
    if (same_column_set(k.columns, cols)) return &k;
  return nullptr;
}

bool same_column_set(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return std::set<std::string>(a.begin(), a.end()) == std::set<std::string>(b.begin(), b.end()) &&
         a.size() == b.size();
}

ErmModel ErmModel::initial() {
  ErmModel m;
  m.schemas["public"].name = "public";
  return m;
}

const Table* ErmModel::find_table(const TableName& name) const {
  auto s = schemas.find(name.schema);
  if (s == schemas.end()) return nullptr;
  auto t = s->second.tables.find(name.table);
  return t == s->second.tables.end() ? nullptr : &t->second;
}

Table* ErmModel::find_table(const TableName& name) {
  return const_cast<Table*>(std::as_const(*this).find_table(name));
}

const Table& ErmModel::resolve_table(const std::optional<std::string>& schema, const std::string& table) const {
  if (schema) {
    if (const auto* t = find_table({*schema, table})) return *t;
    throw Error(ErrorKind::not_found, "table " + *schema + ":" + table + " not found");
  }
  const Table* found = nullptr;
  for (const auto& [_, s] : schemas) {
    auto it = s.tables.find(table);
    if (it == s.tables.end()) continue;
    if (found) throw Error(ErrorKind::bad_request, "table name " + table + " is ambiguous; qualify with a schema");
    found = &it->second;
  }
  if (!found) throw Error(ErrorKind::not_found, "table " + table + " not found");
  return *found;
}

std::vector<ModelViolation> validate_model(const ErmModel& model) {
  std::vector<ModelViolation> out;
  auto add = [&](std::string path, std::string reason) { out.push_back({std::move(path), std::move(reason)}); };
  for (const auto& [sname, schema] : model.schemas) {
    if (sname.empty()) add("/schema/", "schema name is empty");
    if (schema.name != sname) add("/schema/" + percent_encode(sname), "schema name does not match its key");
    for (const auto& [tname, table] : schema.tables) {
      std::string tpath = table_path({sname, tname});
      if (tname.empty()) add(tpath, "table name is empty");
      if (table.name != tname || table.schema_name != sname) add(tpath, "table name does not match its key");
      std::set<std::string> seen;
      for (const auto& c : table.columns) {
        std::string cpath = tpath + "/column/" + percent_encode(c.name);
        if (c.name.empty()) add(cpath, "column name is empty");
        if (!seen.insert(c.name).second) add(cpath, "duplicate column name");
        if (c.default_value && !value_has_type(*c.default_value, c.type)) add(cpath, "default value has wrong type");
        if (c.default_value && is_null(*c.default_value) && !c.nullok) add(cpath, "null default on non-null column");
      }
      std::vector<const Key*> keys_seen;
      for (const auto& k : table.keys) {
        std::string kpath = tpath + "/key/" + join_encoded(k.columns);
        if (k.columns.empty()) add(kpath, "key has no columns");
        std::set<std::string> kc(k.columns.begin(), k.columns.end());
        if (kc.size() != k.columns.size()) add(kpath, "key repeats a column");
        for (const auto& c : k.columns)
          if (!table.find_column(c)) add(kpath, "key column " + c + " does not exist");
        for (const auto* other : keys_seen)
          if (same_column_set(other->columns, k.columns)) add(kpath, "duplicate key column set");
        keys_seen.push_back(&k);
      }
      for (const auto& fk : table.foreign_keys) {
        std::string fpath = tpath + "/foreignkey/" + join_encoded(fk.columns) + "/reference/" +
                            percent_encode(fk.referenced.schema) + ":" + percent_encode(fk.referenced.table) + "/" +
                            join_encoded(fk.referenced_columns);
        if (fk.columns.empty()) add(fpath, "foreign key has no columns");
        if (fk.columns.size() != fk.referenced_columns.size()) {
          add(fpath, "foreign key arity mismatch");
          continue;
        }
        std::set<std::string> fc(fk.columns.begin(), fk.columns.end());
        if (fc.size() != fk.columns.size()) add(fpath, "foreign key repeats a column");
        const Table* ref = model.find_table(fk.referenced);
        if (!ref) {
          add(fpath, "referenced table " + to_string(fk.referenced) + " does not exist");
          continue;
        }
        if (!ref->find_key(fk.referenced_columns)) add(fpath, "referenced columns are not a key");
        for (std::size_t i = 0; i < fk.columns.size(); ++i) {
          const Column* from = table.find_column(fk.columns[i]);
          const Column* to = ref->find_column(fk.referenced_columns[i]);
          if (!from) add(fpath, "foreign key column " + fk.columns[i] + " does not exist");
          if (!to) add(fpath, "referenced column " + fk.referenced_columns[i] + " does not exist");
          if (from && to && from->type != to->type) add(fpath, "column types differ across reference");
        }
      }
    }
  }
  return out;
}

std::string render_model_path(const ModelPath& p) {
  using E = ModelPath::Element;
  std::string out = "/schema";
  if (p.element != E::model) {
    out += "/" + percent_encode(p.schema);
    if (p.element == E::table_container) out += "/table";
    if (p.element >= E::table) out += "/table/" + percent_encode(p.table);
    switch (p.element) {
      case E::column_container: out += "/column"; break;
      case E::column: out += "/column/" + percent_encode(p.column); break;
      case E::key_container: out += "/key"; break;
      case E::key: out += "/key/" + join_encoded(p.columns); break;
      case E::fkey_container: out += "/foreignkey"; break;
      case E::fkey:
        out += "/foreignkey/" + join_encoded(p.columns) + "/reference/" + percent_encode(p.referenced.schema) + ":" +
               percent_encode(p.referenced.table) + "/" + join_encoded(p.referenced_columns);
        break;
      default: break;
    }
  }
  switch (p.sub) {
    case ModelPath::Sub::none: break;
    case ModelPath::Sub::comment: out += "/comment"; break;
    case ModelPath::Sub::annotations: out += "/annotation"; break;
    case ModelPath::Sub::annotation: out += "/annotation/" + percent_encode(p.annotation_key); break;
  }
  return out;
}

ojson column_to_json(const Column& c) {
  ojson doc;
  doc["name"] = c.name;
  doc["type"] = std::string(to_string(c.type));
  doc["nullok"] = c.nullok;
  if (c.default_value) doc["default"] = ojson::parse(value_to_json(*c.default_value).dump());
  put_common(doc, c.comment, c.annotations);
  return doc;
}

ojson key_to_json(const Key& k) {
  ojson doc;
  doc["unique_columns"] = k.columns;
  put_common(doc, k.comment, k.annotations);
  return doc;
}

ojson fkey_to_json(const ForeignKey& fk) {
  ojson doc;
  if (fk.name) doc["name"] = *fk.name;
  doc["foreign_key_columns"] = fk.columns;
  doc["referenced_table"] = {{"schema_name", fk.referenced.schema}, {"table_name", fk.referenced.table}};
  doc["referenced_columns"] = fk.referenced_columns;
  put_common(doc, fk.comment, fk.annotations);
  return doc;
}

ojson table_to_json(const Table& t) {
  ojson doc;
  doc["schema_name"] = t.schema_name;
  doc["table_name"] = t.name;
  doc["kind"] = "table";
  put_common(doc, t.comment, t.annotations);
  doc["column_definitions"] = ojson::array();
  for (const auto& c : t.columns) doc["column_definitions"].push_back(column_to_json(c));
  doc["keys"] = ojson::array();
  for (const auto& k : t.keys) doc["keys"].push_back(key_to_json(k));
  doc["foreign_keys"] = ojson::array();
  for (const auto& fk : t.foreign_keys) doc["foreign_keys"].push_back(fkey_to_json(fk));
  return doc;
}

ojson schema_to_json(const Schema& s) {
  ojson doc;
  put_common(doc, s.comment, s.annotations);
  doc["tables"] = ojson::object();
  for (const auto& [name, t] : s.tables) doc["tables"][name] = table_to_json(t);
  return doc;
}

ojson model_to_json(const ErmModel& m) {
  ojson doc;
  doc["schemas"] = ojson::object();
  for (const auto& [name, s] : m.schemas) doc["schemas"][name] = schema_to_json(s);
  return doc;
}

Column column_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) bad_document("column definition must be an object");
  Column c;
  c.name = required_string(doc, "name");
  auto type = parse_column_type(required_string(doc, "type"));
  if (!type) bad_document("unknown column type " + doc["type"].get<std::string>());
  c.type = *type;
  if (auto it = doc.find("nullok"); it != doc.end()) {
    if (!it->is_boolean()) bad_document("nullok must be boolean");
    c.nullok = it->get<bool>();
  }
  if (auto it = doc.find("default"); it != doc.end()) {
    try {
      c.default_value = value_from_json(c.type, *it);
    } catch (const Error&) {
      bad_document("default for column " + c.name + " does not match type " + std::string(to_string(c.type)));
    }
  }
  get_common(doc, c.comment, c.annotations);
  return c;
}

Key key_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) bad_document("key must be an object");
  Key k;
  k.columns = string_list(doc, "unique_columns");
  get_common(doc, k.comment, k.annotations);
  return k;
}

ForeignKey fkey_from_json(const nlohmann::json& doc, const std::string& default_schema) {
  if (!doc.is_object()) bad_document("foreign key must be an object");
  ForeignKey fk;
  if (auto it = doc.find("name"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) bad_document("foreign key name must be a string");
    fk.name = it->get<std::string>();
  }
  fk.columns = string_list(doc, "foreign_key_columns");
  auto rt = doc.find("referenced_table");
  if (rt == doc.end() || !rt->is_object()) bad_document("foreign key needs referenced_table");
  fk.referenced.table = required_string(*rt, "table_name");
  fk.referenced.schema = rt->contains("schema_name") ? required_string(*rt, "schema_name") : default_schema;
  fk.referenced_columns = string_list(doc, "referenced_columns");
  get_common(doc, fk.comment, fk.annotations);
  return fk;
}

Table table_from_json(const nlohmann::json& doc, const std::string& schema_name) {
  if (!doc.is_object()) bad_document("table must be an object");
  Table t;
  t.name = required_string(doc, "table_name");
  t.schema_name = schema_name;
  if (auto it = doc.find("schema_name"); it != doc.end() && !it->is_null()) {
    if (!it->is_string() || it->get<std::string>() != schema_name)
      bad_document("table schema_name does not match the enclosing schema");
  }
  if (auto it = doc.find("kind"); it != doc.end() && *it != "table") bad_document("only kind \"table\" is supported");
  get_common(doc, t.comment, t.annotations);
  if (auto it = doc.find("column_definitions"); it != doc.end()) {
    if (!it->is_array()) bad_document("column_definitions must be a list");
    for (const auto& c : *it) t.columns.push_back(column_from_json(c));
  }
  if (auto it = doc.find("keys"); it != doc.end()) {
    if (!it->is_array()) bad_document("keys must be a list");
    for (const auto& k : *it) t.keys.push_back(key_from_json(k));
  }
  if (auto it = doc.find("foreign_keys"); it != doc.end()) {
    if (!it->is_array()) bad_document("foreign_keys must be a list");
    for (const auto& fk : *it) t.foreign_keys.push_back(fkey_from_json(fk, schema_name));
  }
  return t;
}

Schema schema_from_json(const nlohmann::json& doc, const std::string& name) {
  Schema s;
  s.name = name;
  if (doc.is_null()) return s;
  if (!doc.is_object()) bad_document("schema must be an object");
  get_common(doc, s.comment, s.annotations);
  if (auto it = doc.find("tables"); it != doc.end()) {
    if (!it->is_object()) bad_document("tables must be an object keyed by table name");
    for (const auto& [tname, tdoc] : it->items()) {
      nlohmann::json body = tdoc;
      if (body.is_object() && !body.contains("table_name")) body["table_name"] = tname;
      Table t = table_from_json(body, name);
      if (t.name != tname) bad_document("table key " + tname + " does not match table_name");
      s.tables.emplace(tname, std::move(t));
    }
  }
  return s;
}

ErmModel model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("schemas") || !doc["schemas"].is_object())
    bad_document("model must have a schemas object");
  ErmModel m;
  for (const auto& [name, sdoc] : doc["schemas"].items()) m.schemas.emplace(name, schema_from_json(sdoc, name));
  return m;
}

nlohmann::ordered_json element_document(const ErmModel& model, const ModelPath& p) {
  using E = ModelPath::Element;
  if (p.element == E::model) return model_to_json(model);
  auto s = model.schemas.find(p.schema);
  if (s == model.schemas.end()) throw Error(ErrorKind::not_found, "schema " + p.schema + " not found");
  if (p.element == E::schema) return schema_to_json(s->second);
  if (p.element == E::table_container) {
    ojson doc = ojson::array();
    for (const auto& [_, t] : s->second.tables) doc.push_back(table_to_json(t));
    return doc;
  }
  auto t = s->second.tables.find(p.table);
  if (t == s->second.tables.end()) throw Error(ErrorKind::not_found, "table " + p.schema + ":" + p.table + " not found");
  const Table& table = t->second;
  switch (p.element) {
    case E::table: return table_to_json(table);
    case E::column_container: {
      ojson doc = ojson::array();
      for (const auto& c : table.columns) doc.push_back(column_to_json(c));
      return doc;
    }
    case E::column:
      if (const auto* c = table.find_column(p.column)) return column_to_json(*c);
      throw Error(ErrorKind::not_found, "column " + p.column + " not found");
    case E::key_container: {
      ojson doc = ojson::array();
      for (const auto& k : table.keys) doc.push_back(key_to_json(k));
      return doc;
    }
    case E::key:
      if (const auto* k = table.find_key(p.columns)) return key_to_json(*k);
      throw Error(ErrorKind::not_found, "key not found");
    case E::fkey_container: {
      ojson doc = ojson::array();
      for (const auto& fk : table.foreign_keys) doc.push_back(fkey_to_json(fk));
      return doc;
    }
    case E::fkey:
      for (const auto& fk : table.foreign_keys)
        if (fk.columns == p.columns && fk.referenced == p.referenced && fk.referenced_columns == p.referenced_columns)
          return fkey_to_json(fk);
      throw Error(ErrorKind::not_found, "foreign key not found");
    default: break;
  }
  throw Error(ErrorKind::not_found, "model element not found");
}

}  // namespace ermcat

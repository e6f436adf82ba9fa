#include "ermcat/storage.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <unordered_set>

#include <json.hpp>

#include "ermcat/errors.hpp"

namespace ermcat {

namespace {

using json = nlohmann::json;

std::vector<std::size_t> indexes_of(const Table& t, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) out.push_back(*t.column_index(n));
  return out;
}

Row project(const Row& row, const std::vector<std::size_t>& cols) {
  Row out;
  out.reserve(cols.size());
  for (auto c : cols) out.push_back(row[c]);
  return out;
}

bool any_null(const Row& r) {
  return std::any_of(r.begin(), r.end(), [](const Value& v) { return is_null(v); });
}

std::string tuple_text(const std::vector<std::string>& names, const Row& values) {
  std::string cols, vals;
  for (std::size_t i = 0; i < names.size(); ++i) {
    cols += (i ? "," : "") + names[i];
    vals += (i ? "," : "") + (is_null(values[i]) ? std::string("null") : format_value(values[i]));
  }
  return "(" + cols + ")=(" + vals + ")";
}

using KeySet = std::unordered_set<Row, RowHash>;

KeySet key_values(const TableData& data, const std::vector<std::size_t>& cols) {
  KeySet out;
  for (const auto& [_, row] : data.rows) out.insert(project(row, cols));
  return out;
}

void check_constraints(const CatalogState& state, const TableName& name,
                       const std::map<RowId, std::size_t>& input_index, bool inbound) {
  const Table& t = *state.model->find_table(name);
  const TableData& data = state.table(name);
  const std::string path = to_string(name);

  // Untouched rows first, then statement rows in payload order, so that a
  // duplicate is reported at the later statement row.
  std::vector<std::pair<const Row*, std::optional<std::size_t>>> order;
  std::vector<std::pair<std::size_t, const Row*>> statement_rows;
  for (const auto& [id, row] : data.rows) {
    auto it = input_index.find(id);
    if (it == input_index.end()) {
      order.emplace_back(&row, std::nullopt);
    } else {
      statement_rows.emplace_back(it->second, &row);
    }
  }
  std::stable_sort(statement_rows.begin(), statement_rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [idx, row] : statement_rows) order.emplace_back(row, idx);

  for (const auto& [row, idx] : order)
    for (std::size_t c = 0; c < t.columns.size(); ++c)
      if (!t.columns[c].nullok && is_null((*row)[c]))
        throw StorageError(StorageErrorKind::not_null_violation, path + ":" + t.columns[c].name,
                           "null value in non-nullable column " + t.columns[c].name, idx);

  for (const auto& key : t.keys) {
    auto cols = indexes_of(t, key.columns);
    KeySet seen;
    for (const auto& [row, idx] : order) {
      Row k = project(*row, cols);
      if (any_null(k))
        throw StorageError(StorageErrorKind::not_null_violation, path, "null in key " + tuple_text(key.columns, k),
                           idx);
      if (!seen.insert(std::move(k)).second)
        throw StorageError(StorageErrorKind::key_violation, path,
                           "duplicate key " + tuple_text(key.columns, project(*row, cols)), idx);
    }
  }

  for (const auto& fk : t.foreign_keys) {
    const Table& ref = *state.model->find_table(fk.referenced);
    KeySet targets = key_values(state.table(fk.referenced), indexes_of(ref, fk.referenced_columns));
    auto cols = indexes_of(t, fk.columns);
    for (const auto& [row, idx] : order) {
      Row k = project(*row, cols);
      if (any_null(k) || targets.count(k)) continue;
      throw StorageError(StorageErrorKind::fkey_violation, path,
                         tuple_text(fk.columns, k) + " is not present in " + to_string(fk.referenced), idx);
    }
  }

  if (!inbound) return;
  for (const auto& [_, schema] : state.model->schemas) {
    for (const auto& [__, other] : schema.tables) {
      if (other.table_name() == name) continue;
      for (const auto& fk : other.foreign_keys) {
        if (fk.referenced != name) continue;
        KeySet targets = key_values(data, indexes_of(t, fk.referenced_columns));
        auto cols = indexes_of(other, fk.columns);
        for (const auto& [___, row] : state.table(other.table_name()).rows) {
          Row k = project(row, cols);
          if (any_null(k) || targets.count(k)) continue;
          throw StorageError(StorageErrorKind::fkey_violation, to_string(other.table_name()),
                             tuple_text(fk.columns, k) + " is still referenced from " +
                                 to_string(other.table_name()) + " but no longer present in " + path);
        }
      }
    }
  }
}

json row_to_json(const Row& row) {
  json out = json::array();
  for (const auto& v : row) out.push_back(value_to_json(v));
  return out;
}

Row row_from_json(const Table& t, const json& cells) {
  if (!cells.is_array() || cells.size() != t.columns.size())
    throw Error(ErrorKind::internal, "log row arity mismatch for " + to_string(t.table_name()));
  Row row;
  for (std::size_t i = 0; i < cells.size(); ++i) row.push_back(value_from_json(t.columns[i].type, cells[i]));
  return row;
}

json acls_to_json(const Acls& acls) {
  json out = json::object();
  for (const auto& [k, v] : acls) out[k] = v;
  return out;
}

Acls acls_from_json(const json& doc) {
  Acls acls;
  for (auto it = doc.begin(); it != doc.end(); ++it) acls[it.key()] = it.value().get<std::vector<std::string>>();
  return acls;
}

json checkpoint_record(const CatalogState& state) {
  json tables = json::array();
  for (const auto& [name, data] : state.tables) {
    json rows = json::array();
    for (const auto& [id, row] : data->rows) rows.push_back(json::array({id, row_to_json(row)}));
    tables.push_back({{"schema", name.schema}, {"table", name.table}, {"next_rowid", data->next_rowid},
                      {"rows", std::move(rows)}});
  }
  return {{"kind", "checkpoint"},
          {"version", state.version},
          {"model", json(model_to_json(*state.model))},
          {"acls", acls_to_json(state.acls)},
          {"tables", std::move(tables)}};
}

CatalogState state_from_checkpoint(const json& rec) {
  CatalogState state;
  state.version = rec.at("version").get<std::uint64_t>();
  auto model = std::make_shared<ErmModel>(model_from_json(rec.at("model")));
  state.model = model;
  state.acls = acls_from_json(rec.at("acls"));
  for (const auto& [_, s] : model->schemas)
    for (const auto& [__, t] : s.tables) state.tables[t.table_name()] = std::make_shared<TableData>();
  for (const auto& tj : rec.at("tables")) {
    TableName name{tj.at("schema").get<std::string>(), tj.at("table").get<std::string>()};
    const Table* t = model->find_table(name);
    if (!t) throw Error(ErrorKind::internal, "log names unknown table " + to_string(name));
    auto data = std::make_shared<TableData>();
    data->next_rowid = tj.at("next_rowid").get<RowId>();
    for (const auto& r : tj.at("rows")) data->rows.emplace(r.at(0).get<RowId>(), row_from_json(*t, r.at(1)));
    state.tables[name] = data;
  }
  return state;
}

void apply_delta(CatalogState& state, const json& rec) {
  if (rec.contains("acls")) state.acls = acls_from_json(rec.at("acls"));
  for (const auto& tj : rec.at("tables")) {
    TableName name{tj.at("schema").get<std::string>(), tj.at("table").get<std::string>()};
    const Table* t = state.model->find_table(name);
    if (!t) throw Error(ErrorKind::internal, "log names unknown table " + to_string(name));
    auto data = std::make_shared<TableData>(state.table(name));
    data->next_rowid = tj.at("next_rowid").get<RowId>();
    for (const auto& id : tj.at("delete")) data->rows.erase(id.get<RowId>());
    for (const auto& r : tj.at("put")) data->rows[r.at(0).get<RowId>()] = row_from_json(*t, r.at(1));
    state.tables[name] = data;
  }
  state.version = rec.at("version").get<std::uint64_t>();
}

}  // namespace

const TableData& CatalogState::table(const TableName& name) const {
  auto it = tables.find(name);
  if (it == tables.end()) throw Error(ErrorKind::internal, "no storage for table " + to_string(name));
  return *it->second;
}

CatalogState initial_state(const std::string& owner) {
  CatalogState state;
  state.model = std::make_shared<ErmModel>(ErmModel::initial());
  state.acls = initial_acls(owner);
  return state;
}

void validate_state(const CatalogState& state) {
  for (const auto& [name, _] : state.tables) check_constraints(state, name, {}, false);
}

void check_table_constraints(const CatalogState& state, const TableName& table,
                             const std::map<RowId, std::size_t>& input_index, bool inbound) {
  check_constraints(state, table, input_index, inbound);
}

CatalogState reconcile(const CatalogState& state, ErmModel model) {
  CatalogState out;
  out.version = state.version;
  out.acls = state.acls;
  for (const auto& [_, s] : model.schemas) {
    for (const auto& [__, t] : s.tables) {
      const TableName name = t.table_name();
      const Table* old = state.model->find_table(name);
      auto existing = state.tables.find(name);
      if (!old || existing == state.tables.end()) {
        out.tables[name] = std::make_shared<TableData>();
        continue;
      }
      if (old->columns.size() == t.columns.size() &&
          std::equal(old->columns.begin(), old->columns.end(), t.columns.begin(),
                     [](const Column& a, const Column& b) { return a.name == b.name && a.type == b.type; })) {
        out.tables[name] = existing->second;
        continue;
      }
      std::vector<std::optional<std::size_t>> source;
      for (const auto& c : t.columns) {
        auto idx = old->column_index(c.name);
        source.push_back(idx && old->columns[*idx].type == c.type ? idx : std::nullopt);
      }
      auto data = std::make_shared<TableData>();
      data->next_rowid = existing->second->next_rowid;
      for (const auto& [id, row] : existing->second->rows) {
        Row next;
        next.reserve(t.columns.size());
        for (std::size_t i = 0; i < t.columns.size(); ++i)
          next.push_back(source[i] ? row[*source[i]] : t.columns[i].default_value.value_or(Value{}));
        data->rows.emplace(id, std::move(next));
      }
      out.tables[name] = data;
    }
  }
  out.model = std::make_shared<const ErmModel>(std::move(model));
  return out;
}

// --- Txn -------------------------------------------------------------------

Txn::Txn(Catalog* catalog, TxnMode mode, CatalogState state, std::unique_lock<std::timed_mutex> writer)
    : catalog_(catalog), mode_(mode), state_(std::move(state)), writer_(std::move(writer)) {}

Txn::Txn(Txn&& other) noexcept
    : catalog_(other.catalog_),
      mode_(other.mode_),
      state_(std::move(other.state_)),
      writer_(std::move(other.writer_)),
      working_(std::move(other.working_)),
      touched_(std::move(other.touched_)),
      model_changed_(other.model_changed_),
      acls_changed_(other.acls_changed_),
      open_(other.open_) {
  other.open_ = false;
}

Txn::~Txn() {
  if (open_) catalog_->abort(*this);
}

std::uint64_t Txn::catalog_id() const { return catalog_->id(); }

void Txn::require_write() const {
  if (!open_) throw Error(ErrorKind::internal, "transaction is closed");
  if (mode_ != TxnMode::write) throw Error(ErrorKind::internal, "write attempted in a read transaction");
}

TableData& Txn::writable(const TableName& table) {
  require_write();
  auto it = working_.find(table);
  if (it != working_.end()) return *it->second;
  auto copy = std::make_shared<TableData>(state_.table(table));
  state_.tables[table] = copy;
  working_[table] = copy;
  return *copy;
}

void Txn::set_model(ErmModel model) {
  require_write();
  state_ = reconcile(state_, std::move(model));
  working_.clear();
  validate_state(state_);
  model_changed_ = true;
}

void Txn::set_acls(Acls acls) {
  require_write();
  state_.acls = std::move(acls);
  acls_changed_ = true;
}

RowId Txn::insert_row(const TableName& table, Row row) {
  TableData& data = writable(table);
  RowId id = data.next_rowid++;
  data.rows.emplace(id, std::move(row));
  touched_[table].insert(id);
  return id;
}

void Txn::update_row(const TableName& table, RowId id, Row row) {
  TableData& data = writable(table);
  data.rows.at(id) = std::move(row);
  touched_[table].insert(id);
}

void Txn::delete_row(const TableName& table, RowId id) {
  TableData& data = writable(table);
  data.rows.erase(id);
  touched_[table].insert(id);
}

// --- Catalog ---------------------------------------------------------------

Catalog::Catalog(std::uint64_t id, CatalogState initial, std::filesystem::path wal_path)
    : id_(id), wal_path_(std::move(wal_path)) {
  for (const auto& [_, s] : initial.model->schemas)
    for (const auto& [__, t] : s.tables)
      if (!initial.tables.count(t.table_name())) initial.tables[t.table_name()] = std::make_shared<TableData>();
  if (!wal_path_.empty()) write_checkpoint(initial);
  current_ = std::make_shared<const CatalogState>(std::move(initial));
}

std::unique_ptr<Catalog> Catalog::open(std::uint64_t id, const std::filesystem::path& wal_path) {
  std::ifstream in(wal_path);
  if (!in) throw Error(ErrorKind::internal, "cannot read " + wal_path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(std::move(line));
  std::optional<CatalogState> state;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json rec = json::parse(lines[i], nullptr, false);
    if (rec.is_discarded()) {
      if (i + 1 == lines.size()) break;  // torn final append
      throw Error(ErrorKind::internal, "corrupt record " + std::to_string(i) + " in " + wal_path.string());
    }
    const std::string kind = rec.at("kind").get<std::string>();
    if (kind == "checkpoint") {
      state = state_from_checkpoint(rec);
    } else if (kind == "delta" && state) {
      if (rec.at("version").get<std::uint64_t>() != state->version + 1)
        throw Error(ErrorKind::internal, "version gap in " + wal_path.string());
      apply_delta(*state, rec);
    } else {
      throw Error(ErrorKind::internal, "unexpected record " + std::to_string(i) + " in " + wal_path.string());
    }
  }
  if (!state) throw Error(ErrorKind::internal, "no checkpoint in " + wal_path.string());
  auto catalog = std::unique_ptr<Catalog>(new Catalog(id, std::move(*state), {}));
  catalog->wal_path_ = wal_path;
  return catalog;
}

Txn Catalog::begin(TxnMode mode, std::chrono::milliseconds lock_timeout) {
  std::unique_lock<std::timed_mutex> writer;
  if (mode == TxnMode::write) {
    writer = std::unique_lock<std::timed_mutex>(writer_, std::defer_lock);
    if (!writer.try_lock_for(lock_timeout))
      throw StorageError(StorageErrorKind::serialization_conflict, "catalog " + std::to_string(id_),
                         "another write is in progress");
  }
  if (retired()) throw Error(ErrorKind::not_found, "catalog " + std::to_string(id_) + " not found");
  return Txn(this, mode, *snapshot(), std::move(writer));
}

std::uint64_t Catalog::commit(Txn& txn) {
  if (!txn.open_) throw Error(ErrorKind::internal, "transaction is closed");
  if (txn.mode_ == TxnMode::read || !txn.changed()) {
    std::uint64_t v = txn.state_.version;
    abort(txn);
    return v;
  }
  CatalogState next = txn.state_;
  next.version = txn.state_.version + 1;
  if (!wal_path_.empty()) {
    try {
      if (txn.model_changed_) {
        write_checkpoint(next);
      } else {
        append_delta(next, txn);
      }
    } catch (...) {
      abort(txn);
      throw;
    }
  }
  {
    std::lock_guard<std::mutex> lock(state_mutex_);
    current_ = std::make_shared<const CatalogState>(std::move(next));
  }
  changed_.notify_all();
  std::uint64_t v = txn.state_.version + 1;
  txn.open_ = false;
  if (txn.writer_.owns_lock()) txn.writer_.unlock();
  return v;
}

void Catalog::abort(Txn& txn) noexcept {
  txn.open_ = false;
  if (txn.writer_.owns_lock()) txn.writer_.unlock();
}

std::shared_ptr<const CatalogState> Catalog::snapshot() const {
  std::lock_guard<std::mutex> lock(state_mutex_);
  return current_;
}

std::uint64_t Catalog::wait_for_change(std::uint64_t since, std::chrono::milliseconds timeout) {
  std::unique_lock<std::mutex> lock(state_mutex_);
  changed_.wait_for(lock, timeout, [&] { return retired_ || current_->version > since; });
  return current_->version;
}

void Catalog::retire() {
  std::unique_lock<std::timed_mutex> writer(writer_);
  {
    std::lock_guard<std::mutex> lock(state_mutex_);
    retired_ = true;
  }
  changed_.notify_all();
  if (!wal_path_.empty()) {
    std::error_code ec;
    std::filesystem::remove(wal_path_, ec);
  }
}

bool Catalog::retired() const {
  std::lock_guard<std::mutex> lock(state_mutex_);
  return retired_;
}

void Catalog::write_checkpoint(const CatalogState& state) {
  auto tmp = wal_path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << checkpoint_record(state).dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorKind::internal, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, wal_path_);
}

void Catalog::append_delta(const CatalogState& state, const Txn& txn) {
  json tables = json::array();
  for (const auto& [name, ids] : txn.touched_) {
    const TableData& data = state.table(name);
    json put = json::array(), del = json::array();
    for (RowId id : ids) {
      auto it = data.rows.find(id);
      if (it == data.rows.end()) {
        del.push_back(id);
      } else {
        put.push_back(json::array({id, row_to_json(it->second)}));
      }
    }
    tables.push_back({{"schema", name.schema}, {"table", name.table}, {"next_rowid", data.next_rowid},
                      {"put", std::move(put)}, {"delete", std::move(del)}});
  }
  json rec = {{"kind", "delta"}, {"version", state.version}, {"tables", std::move(tables)}};
  if (txn.acls_changed_) rec["acls"] = acls_to_json(state.acls);
  std::ofstream out(wal_path_, std::ios::app);
  out << rec.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorKind::internal, "cannot append to " + wal_path_.string());
}

}  // namespace ermcat

#include "ermcat/dump.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ermcat/codec.hpp"
#include "ermcat/errors.hpp"
#include "ermcat/percent.hpp"

namespace ermcat {

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::bad_request, "cannot read " + p.filename().string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorKind::internal, "cannot write " + p.string());
}

}  // namespace

std::string dump_file_name(const TableName& table) {
  return percent_encode(table.schema) + "." + percent_encode(table.table) + ".csv";
}

void export_catalog(const CatalogState& state, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "model.json", nlohmann::ordered_json(model_to_json(*state.model)).dump(2) + "\n");
  for (const auto& [name, data] : state.tables) {
    const Table& t = *state.model->find_table(name);
    RowSet rows;
    for (const auto& c : t.columns) rows.columns.emplace_back(c.name, c.type);
    for (const auto& [_, row] : data->rows) rows.rows.push_back(row);
    write_file(dir / dump_file_name(name), encode_csv(rows));
  }
}

CatalogState import_catalog(const std::filesystem::path& dir, const std::string& owner) {
  nlohmann::json doc = nlohmann::json::parse(read_file(dir / "model.json"), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::bad_request, "model.json: malformed JSON");
  ErmModel model;
  try {
    model = model_from_json(doc);
  } catch (const Error& e) {
    throw Error(ErrorKind::bad_request, std::string("model.json: ") + e.what());
  }
  auto violations = validate_model(model);
  if (!violations.empty())
    throw Error(ErrorKind::bad_request,
                "model.json: validation error at " + violations.front().path + ": " + violations.front().reason);

  CatalogState state = initial_state(owner);
  state.model = std::make_shared<const ErmModel>(model);
  for (const auto& [_, s] : model.schemas) {
    for (const auto& [__, t] : s.tables) {
      const std::string file = dump_file_name(t.table_name());
      auto data = std::make_shared<TableData>();
      const auto path = dir / file;
      if (std::filesystem::exists(path)) {
        RowSet rows;
        try {
          PayloadTable payload = decode_csv_payload(read_file(path));
          std::set<std::string> header(payload.columns.begin(), payload.columns.end());
          std::set<std::string> expected;
          for (const auto& c : t.columns) expected.insert(c.name);
          if (header != expected) throw Error(ErrorKind::bad_request, "header does not match the table's columns");
          rows = type_payload(payload, [&](const std::string& c) -> std::optional<ColumnType> {
            const Column* col = t.find_column(c);
            return col ? std::optional(col->type) : std::nullopt;
          });
        } catch (const StorageError& e) {
          throw StorageError(e.storage_kind(), file + ":" + e.path(), e.detail(), e.row_index());
        } catch (const Error& e) {
          throw Error(e.kind(), file + ": " + e.what());
        }
        std::vector<std::size_t> order;
        for (const auto& c : t.columns)
          for (std::size_t i = 0; i < rows.columns.size(); ++i)
            if (rows.columns[i].first == c.name) order.push_back(i);
        for (const auto& in : rows.rows) {
          Row row;
          for (auto i : order) row.push_back(in[i]);
          data->rows.emplace(data->next_rowid++, std::move(row));
        }
      }
      state.tables[t.table_name()] = data;
    }
  }
  for (const auto& [name, _] : state.tables) {
    std::map<RowId, std::size_t> index;
    for (const auto& [id, __] : state.table(name).rows) index[id] = static_cast<std::size_t>(id - 1);
    try {
      check_table_constraints(state, name, index, false);
    } catch (const StorageError& e) {
      throw StorageError(e.storage_kind(), dump_file_name(name), e.detail(), e.row_index());
    }
  }
  return state;
}

}  // namespace ermcat

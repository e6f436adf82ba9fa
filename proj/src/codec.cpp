#include "ermcat/codec.hpp"

#include <set>

#include "ermcat/errors.hpp"

namespace ermcat {

namespace {

void append_csv_field(std::string& out, std::string_view field, bool force_quote) {
  bool quote = force_quote || field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!quote) {
    out += field;
    return;
  }
  out += '"';
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

}  // namespace

std::string encode_json(const RowSet& rows) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& row : rows.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < rows.columns.size(); ++i) obj[rows.columns[i].first] = value_to_json(row[i]);
    doc.push_back(std::move(obj));
  }
  return doc.dump();
}

std::string encode_csv(const RowSet& rows) {
  std::string out;
  for (std::size_t i = 0; i < rows.columns.size(); ++i) {
    if (i) out += ',';
    append_csv_field(out, rows.columns[i].first, rows.columns[i].first.empty());
  }
  out += '\n';
  for (const auto& row : rows.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      if (is_null(row[i])) continue;
      std::string text = format_value(row[i]);
      append_csv_field(out, text, text.empty());
    }
    out += '\n';
  }
  return out;
}

std::vector<std::vector<std::optional<std::string>>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::optional<std::string>>> records;
  std::vector<std::optional<std::string>> record;
  std::size_t i = 0;
  const std::size_t n = text.size();
  if (n == 0) return records;
  while (true) {
    std::optional<std::string> field;
    if (i < n && text[i] == '"') {
      std::string value;
      ++i;
      while (true) {
        if (i >= n) throw Error(ErrorKind::bad_request, "unterminated quoted CSV field in record " +
                                                            std::to_string(records.size()));
        if (text[i] == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            value += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        value += text[i++];
      }
      if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r')
        throw Error(ErrorKind::bad_request, "unexpected text after quoted CSV field in record " +
                                                std::to_string(records.size()));
      field = std::move(value);
    } else {
      std::size_t start = i;
      while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
        if (text[i] == '"')
          throw Error(ErrorKind::bad_request, "stray quote in CSV record " + std::to_string(records.size()));
        ++i;
      }
      if (i > start) field = std::string(text.substr(start, i - start));
    }
    record.push_back(std::move(field));
    if (i < n && text[i] == ',') {
      ++i;
      continue;
    }
    if (i < n && text[i] == '\r') ++i;
    if (i < n && text[i] == '\n') ++i;
    records.push_back(std::move(record));
    record.clear();
    if (i >= n) break;
  }
  return records;
}

PayloadTable decode_csv_payload(std::string_view body) {
  auto records = parse_csv(body);
  if (records.empty()) throw Error(ErrorKind::bad_request, "CSV payload lacks a header row");
  PayloadTable table;
  table.textual = true;
  std::set<std::string> seen;
  for (const auto& h : records.front()) {
    if (!h || h->empty()) throw Error(ErrorKind::bad_request, "CSV header has an empty column name");
    if (!seen.insert(*h).second) throw Error(ErrorKind::bad_request, "CSV header repeats column " + *h);
    table.columns.push_back(*h);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.columns.size())
      throw StorageError(StorageErrorKind::type_error, "payload",
                         std::to_string(records[r].size()) + " fields, expected " +
                             std::to_string(table.columns.size()),
                         r - 1);
    std::vector<nlohmann::json> cells;
    for (const auto& f : records[r]) cells.push_back(f ? nlohmann::json(*f) : nlohmann::json());
    table.cells.push_back(std::move(cells));
  }
  return table;
}

PayloadTable decode_json_payload(std::string_view body) {
  nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::bad_request, "malformed JSON payload");
  if (!doc.is_array()) throw Error(ErrorKind::bad_request, "JSON payload must be an array of objects");
  PayloadTable table;
  // nlohmann::json objects iterate in sorted key order, which gives a stable
  // column order independent of each object's textual key order.
  for (std::size_t r = 0; r < doc.size(); ++r) {
    const auto& obj = doc[r];
    if (!obj.is_object())
      throw StorageError(StorageErrorKind::type_error, "payload", "row is not an object", r);
    std::vector<std::string> keys;
    for (auto it = obj.begin(); it != obj.end(); ++it) keys.push_back(it.key());
    if (r == 0) {
      table.columns = keys;
    } else if (keys != table.columns) {
      throw StorageError(StorageErrorKind::type_error, "payload", "row has a different key set than row 0", r);
    }
    std::vector<nlohmann::json> cells;
    for (const auto& k : keys) cells.push_back(obj.at(k));
    table.cells.push_back(std::move(cells));
  }
  return table;
}

RowSet type_payload(const PayloadTable& table,
                    const std::function<std::optional<ColumnType>(const std::string&)>& type_of) {
  RowSet out;
  for (const auto& c : table.columns) {
    auto type = type_of(c);
    if (!type) throw Error(ErrorKind::bad_request, "unknown payload column " + c);
    out.columns.emplace_back(c, *type);
  }
  for (std::size_t r = 0; r < table.cells.size(); ++r) {
    Row row;
    for (std::size_t i = 0; i < out.columns.size(); ++i) {
      const auto& cell = table.cells[r][i];
      ColumnType type = out.columns[i].second;
      try {
        if (cell.is_null()) {
          row.emplace_back();
        } else if (table.textual) {
          row.push_back(parse_value(type, cell.get<std::string>()));
        } else {
          row.push_back(value_from_json(type, cell));
        }
      } catch (const Error& e) {
        throw StorageError(StorageErrorKind::type_error, out.columns[i].first, e.what(), r);
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace ermcat

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ermcat/value.hpp"

namespace ermcat {

/// A sequence of typed tuples with named, typed columns.
struct RowSet {
  std::vector<std::pair<std::string, ColumnType>> columns;
  std::vector<Row> rows;
  friend bool operator==(const RowSet&, const RowSet&) = default;
};

std::string encode_json(const RowSet& rows);
std::string encode_csv(const RowSet& rows);

/// A decoded request body before typing. JSON cells keep their JSON value;
/// CSV cells are strings or null.
struct PayloadTable {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> cells;
  bool textual = false;
};

/// Throws bad_request on malformed input or inconsistent object keys.
PayloadTable decode_json_payload(std::string_view body);
/// Header row required. Throws bad_request on malformed quoting, ragged rows
/// or duplicate header names.
PayloadTable decode_csv_payload(std::string_view body);

/// Types every cell. `type_of` returns nullopt for an unknown column, which is
/// a bad_request. Cell type errors carry the row index.
RowSet type_payload(const PayloadTable& table,
                    const std::function<std::optional<ColumnType>(const std::string&)>& type_of);

/// Splits CSV text into records of optional fields (nullopt = empty unquoted).
std::vector<std::vector<std::optional<std::string>>> parse_csv(std::string_view text);

}  // namespace ermcat

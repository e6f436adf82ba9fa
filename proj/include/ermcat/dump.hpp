#pragma once

#include <filesystem>
#include <string>

#include "ermcat/storage.hpp"

namespace ermcat {

/// File name of a table's CSV payload in a dump directory.
std::string dump_file_name(const TableName& table);

/// Writes model.json plus one CSV file per table into `dir` (created if
/// needed).
void export_catalog(const CatalogState& state, const std::filesystem::path& dir);

/// Reads a dump and returns a fully validated state owned by `owner`. Errors
/// name the offending file; nothing is created on failure.
CatalogState import_catalog(const std::filesystem::path& dir, const std::string& owner);

}  // namespace ermcat

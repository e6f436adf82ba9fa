#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "ermcat/acl.hpp"

namespace ermcat {

inline constexpr int kConfigVersion = 1;

/// Server configuration. See README for the file format.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir;              // empty: in-memory only
  std::map<std::string, ClientContext> tokens;  // bearer token -> client
  bool trusted_headers = false;                // honor X-Remote-User / X-Remote-Attributes
  std::optional<std::uint64_t> row_cap;
  std::filesystem::path notice_log;            // empty: notices are dropped
  bool cors = false;
};

/// Throws Error(bad_request) naming the offending field.
ServiceConfig config_from_json(const nlohmann::json& doc);
ServiceConfig load_config(const std::filesystem::path& path);

}  // namespace ermcat

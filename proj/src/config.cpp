#include "ermcat/config.hpp"

#include <fstream>
#include <set>

#include "ermcat/errors.hpp"

namespace ermcat {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorKind::bad_request, "config " + field + ": " + why);
}

}  // namespace

ServiceConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) bad("document", "expected an object");
  static const std::set<std::string> known{"version", "listen", "data_dir", "tokens", "trusted_headers",
                                           "row_cap", "notice_log", "cors"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key())) bad(it.key(), "unknown field");
  if (!doc.contains("version") || doc["version"] != kConfigVersion)
    bad("version", "must be " + std::to_string(kConfigVersion));

  ServiceConfig cfg;
  try {
    if (doc.contains("listen")) {
      const auto& l = doc["listen"];
      if (l.contains("host")) cfg.host = l["host"].get<std::string>();
      if (l.contains("port")) cfg.port = l["port"].get<int>();
      if (cfg.port < 0 || cfg.port > 65535) bad("listen.port", "out of range");
    }
    if (doc.contains("data_dir")) cfg.data_dir = doc["data_dir"].get<std::string>();
    if (doc.contains("tokens")) {
      for (auto it = doc["tokens"].begin(); it != doc["tokens"].end(); ++it) {
        ClientContext c;
        c.identity = it.value().at("identity").get<std::string>();
        if (c.identity.empty() || c.identity == kAnonymous) bad("tokens." + it.key(), "invalid identity");
        if (it.value().contains("attributes"))
          c.attributes = it.value()["attributes"].get<std::vector<std::string>>();
        cfg.tokens[it.key()] = std::move(c);
      }
    }
    if (doc.contains("trusted_headers")) cfg.trusted_headers = doc["trusted_headers"].get<bool>();
    if (doc.contains("row_cap") && !doc["row_cap"].is_null()) {
      if (!doc["row_cap"].is_number_unsigned()) bad("row_cap", "must be a non-negative integer");
      cfg.row_cap = doc["row_cap"].get<std::uint64_t>();
    }
    if (doc.contains("notice_log")) cfg.notice_log = doc["notice_log"].get<std::string>();
    if (doc.contains("cors")) cfg.cors = doc["cors"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    bad("document", e.what());
  }
  return cfg;
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::bad_request, "cannot read config " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::bad_request, "config " + path.string() + " is not valid JSON");
  ServiceConfig cfg = config_from_json(doc);
  if (!cfg.data_dir.empty() && cfg.data_dir.is_relative()) cfg.data_dir = path.parent_path() / cfg.data_dir;
  if (!cfg.notice_log.empty() && cfg.notice_log.is_relative()) cfg.notice_log = path.parent_path() / cfg.notice_log;
  return cfg;
}

}  // namespace ermcat

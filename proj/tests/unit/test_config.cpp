#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "ermcat/config.hpp"
#include "ermcat/errors.hpp"

using namespace ermcat;
using nlohmann::json;

TEST_CASE("minimal config takes defaults") {
  ServiceConfig c = config_from_json(json{{"version", 1}});
  CHECK(c.host == "127.0.0.1");
  CHECK(c.port == 8080);
  CHECK(c.data_dir.empty());
  CHECK(c.tokens.empty());
  CHECK_FALSE(c.trusted_headers);
  CHECK_FALSE(c.row_cap);
  CHECK_FALSE(c.cors);
}

TEST_CASE("full config") {
  json doc = json::parse(R"({
    "version": 1,
    "listen": {"host": "0.0.0.0", "port": 9000},
    "data_dir": "/var/lib/ermcat",
    "tokens": {"t1": {"identity": "ann", "attributes": ["grp:a"]}, "t2": {"identity": "bo"}},
    "trusted_headers": true,
    "row_cap": 500,
    "notice_log": "/tmp/n.log",
    "cors": true
  })");
  ServiceConfig c = config_from_json(doc);
  CHECK(c.host == "0.0.0.0");
  CHECK(c.port == 9000);
  CHECK(c.data_dir == "/var/lib/ermcat");
  CHECK(c.tokens.at("t1").identity == "ann");
  CHECK(c.tokens.at("t1").attributes == std::vector<std::string>{"grp:a"});
  CHECK(c.tokens.at("t2").attributes.empty());
  CHECK(c.trusted_headers);
  CHECK(c.row_cap == 500u);
  CHECK(c.cors);
}

TEST_CASE("invalid configs are rejected") {
  const char* bad[] = {
      R"([])",
      R"({})",
      R"({"version": 2})",
      R"({"version": 1, "verbose": true})",
      R"({"version": 1, "listen": {"port": 70000}})",
      R"({"version": 1, "listen": {"port": "80"}})",
      R"({"version": 1, "tokens": {"t": {}}})",
      R"({"version": 1, "tokens": {"t": {"identity": ""}}})",
      R"({"version": 1, "tokens": {"t": {"identity": "*absent*"}}})",
      R"({"version": 1, "row_cap": -1})",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(config_from_json(json::parse(text)), Error);
  }
  try {
    config_from_json(json{{"version", 1}, {"verbose", true}});
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("verbose") != std::string::npos);
  }
}

TEST_CASE("relative paths resolve against the config file") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("ermcat_config_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"version":1,"data_dir":"data","notice_log":"/abs/n.log"})";
  ServiceConfig c = load_config(dir / "c.json");
  CHECK(c.data_dir == dir / "data");
  CHECK(c.notice_log == "/abs/n.log");
  std::ofstream(dir / "broken.json") << "{";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), Error);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), Error);
  fs::remove_all(dir);
}

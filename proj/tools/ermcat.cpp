#include <csignal>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <httplib.h>

#include "ermcat/config.hpp"
#include "ermcat/dump.hpp"
#include "ermcat/fixture.hpp"
#include "ermcat/registry.hpp"
#include "ermcat/service.hpp"

namespace {

ermcat::HttpRequest to_request(const httplib::Request& req) {
  ermcat::HttpRequest out;
  out.method = req.method;
  out.target = req.target;
  for (const auto& [k, v] : req.headers) out.headers.emplace_back(k, v);
  out.body = req.body;
  return out;
}

void apply_response(const ermcat::HttpResponse& in, httplib::Response& res) {
  res.status = in.status;
  std::string content_type = "application/octet-stream";
  for (const auto& [k, v] : in.headers) {
    if (k == "Content-Type") {
      content_type = v;
    } else {
      res.set_header(k, v);
    }
  }
  if (in.status != 204 && in.status != 304) res.set_content(in.body, content_type);
}

std::filesystem::path resolve_data_dir(const std::string& config_path, const std::string& data_dir) {
  if (!data_dir.empty()) return data_dir;
  if (!config_path.empty()) return ermcat::load_config(config_path).data_dir;
  throw std::runtime_error("either --config or --data-dir is required");
}

int serve(const std::string& config_path) {
  ermcat::ServiceConfig cfg = ermcat::load_config(config_path);
  ermcat::Registry registry(cfg.data_dir);
  std::shared_ptr<ermcat::NoticeSink> sink;
  if (!cfg.notice_log.empty()) sink = std::make_shared<ermcat::FileNoticeSink>(cfg.notice_log);
  ermcat::Service service(registry, cfg, sink);

  httplib::Server server;
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    apply_response(service.dispatch(to_request(req)), res);
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  server.Put(".*", handler);
  server.Delete(".*", handler);
  server.Patch(".*", handler);
  server.Options(".*", handler);

  static httplib::Server* active = &server;
  std::signal(SIGINT, [](int) { active->stop(); });
  std::signal(SIGTERM, [](int) { active->stop(); });

  std::cerr << "ermcat listening on " << cfg.host << ":" << cfg.port << "\n";
  if (!server.listen(cfg.host, cfg.port)) {
    std::cerr << "cannot listen on " << cfg.host << ":" << cfg.port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ermcat: relational catalog web service"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, in_dir, owner = "admin";
  std::uint64_t catalog_id = 0;

  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);

  auto* dump_cmd = app.add_subcommand("dump", "export a catalog to a directory");
  dump_cmd->add_option("--config", config_path, "configuration file naming the data directory");
  dump_cmd->add_option("--data-dir", data_dir, "data directory");
  dump_cmd->add_option("--catalog", catalog_id, "catalog id")->required();
  dump_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* restore_cmd = app.add_subcommand("restore", "import a dump as a new catalog");
  restore_cmd->add_option("--config", config_path, "configuration file naming the data directory");
  restore_cmd->add_option("--data-dir", data_dir, "data directory");
  restore_cmd->add_option("--in", in_dir, "dump directory")->required()->check(CLI::ExistingDirectory);
  restore_cmd->add_option("--owner", owner, "owner identity of the new catalog");

  auto* demo_cmd = app.add_subcommand("demo-fixture", "create a catalog holding the demo model and seed rows");
  demo_cmd->add_option("--config", config_path, "configuration file naming the data directory");
  demo_cmd->add_option("--data-dir", data_dir, "data directory");
  demo_cmd->add_option("--owner", owner, "owner identity of the new catalog");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return serve(config_path);
    ermcat::Registry registry(resolve_data_dir(config_path, data_dir));
    if (*dump_cmd) {
      ermcat::export_catalog(*registry.find(catalog_id)->snapshot(), out_dir);
      std::cout << "catalog " << catalog_id << " written to " << out_dir << "\n";
    } else if (*restore_cmd) {
      auto catalog = registry.adopt(ermcat::import_catalog(in_dir, owner));
      std::cout << catalog->id() << "\n";
    } else if (*demo_cmd) {
      auto catalog = registry.adopt(ermcat::demo_fixture(owner));
      std::cout << catalog->id() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "ermcat: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

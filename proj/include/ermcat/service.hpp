#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ermcat/acl.hpp"
#include "ermcat/config.hpp"
#include "ermcat/errors.hpp"
#include "ermcat/notice.hpp"
#include "ermcat/registry.hpp"

namespace ermcat {

using HeaderList = std::vector<std::pair<std::string, std::string>>;

/// Transport-neutral request. `target` is the raw request target: the
/// percent-encoded path plus an optional "?query".
struct HttpRequest {
  std::string method;
  std::string target;
  HeaderList headers;
  std::string body;

  std::optional<std::string> header(std::string_view name) const;
};

struct HttpResponse {
  int status = 200;
  HeaderList headers;
  std::string body;

  std::optional<std::string> header(std::string_view name) const;
  void set_header(std::string name, std::string value);
};

int status_for(ErrorKind kind) noexcept;

/// Strong entity tag for a catalog version, e.g. "1-42" with quotes.
std::string make_etag(std::uint64_t catalog, std::uint64_t version);

/// Routes requests to the registry, model and data layers. Safe for
/// concurrent use.
class Service {
 public:
  static constexpr int kWriteAttempts = 4;  // first try plus three retries

  Service(Registry& registry, ServiceConfig config, std::shared_ptr<NoticeSink> notices = nullptr);

  HttpResponse dispatch(const HttpRequest& request);

  /// Bearer token from the config table, then trusted headers if enabled,
  /// else anonymous. Throws unauthenticated for a bad Authorization header.
  ClientContext authenticate(const HttpRequest& request) const;

  const ServiceConfig& config() const { return config_; }

 private:
  HttpResponse route(const HttpRequest& request);
  HttpResponse catalog_route(const HttpRequest& request, const ClientContext& client, std::uint64_t id,
                             std::string_view rest, std::string_view path, std::string_view query);
  HttpResponse acl_route(const HttpRequest& request, const ClientContext& client, Catalog& catalog,
                         std::string_view rest);
  HttpResponse model_route(const HttpRequest& request, const ClientContext& client, Catalog& catalog,
                           std::string_view path);
  HttpResponse data_route(const HttpRequest& request, const ClientContext& client, Catalog& catalog,
                          std::string_view path, std::string_view query);
  HttpResponse changes_route(const ClientContext& client, Catalog& catalog, std::string_view query);
  void publish(std::uint64_t catalog, std::uint64_t before, std::uint64_t after);

  Registry& registry_;
  ServiceConfig config_;
  std::shared_ptr<NoticeSink> notices_;
};

}  // namespace ermcat

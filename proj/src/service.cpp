#include "ermcat/service.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <iostream>

#include <json.hpp>

#include "ermcat/codec.hpp"
#include "ermcat/executor.hpp"
#include "ermcat/model_change.hpp"
#include "ermcat/percent.hpp"
#include "ermcat/planner.hpp"
#include "ermcat/url.hpp"

namespace ermcat {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr std::string_view kPrefix = "/ermrest/catalog";
constexpr auto kDefaultPollTimeout = std::chrono::milliseconds(30000);
constexpr auto kMaxPollTimeout = std::chrono::milliseconds(300000);

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (true) {
    auto comma = s.find(',');
    auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) return std::nullopt;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::map<std::string, std::string> parse_simple_query(std::string_view query) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (!query.empty()) {
    auto amp = query.find('&', pos);
    auto item = query.substr(pos, amp == std::string_view::npos ? std::string_view::npos : amp - pos);
    if (!item.empty()) {
      auto eq = item.find('=');
      std::string key = percent_decode(item.substr(0, eq));
      std::string value = eq == std::string_view::npos ? "" : percent_decode(item.substr(eq + 1));
      out[key] = value;
    }
    if (amp == std::string_view::npos) break;
    pos = amp + 1;
  }
  return out;
}

bool tag_listed(const std::string& header, const std::string& etag, bool weak_ok) {
  if (trim(header) == "*") return true;
  for (auto tag : split_list(header)) {
    if (weak_ok && tag.rfind("W/", 0) == 0) tag = tag.substr(2);
    if (tag == etag) return true;
  }
  return false;
}

HttpResponse json_response(int status, const ojson& doc) {
  HttpResponse r;
  r.status = status;
  r.set_header("Content-Type", "application/json");
  r.body = doc.dump();
  return r;
}

HttpResponse error_response(ErrorKind kind, const std::string& message, std::optional<std::size_t> row_index = {},
                            std::optional<std::size_t> offset = {}, std::optional<std::size_t> segment = {}) {
  ojson doc = {{"error", to_string(kind)}, {"message", message}};
  if (row_index) doc["row_index"] = *row_index;
  if (offset) doc["offset"] = *offset;
  if (segment) doc["segment"] = *segment;
  HttpResponse r = json_response(status_for(kind), doc);
  if (kind == ErrorKind::unauthenticated) r.set_header("WWW-Authenticate", "Bearer");
  return r;
}

/// The ?accept= parameter wins; otherwise the first supported media type in
/// the Accept header.
Format negotiate(const HttpRequest& req, std::optional<Format> param) {
  if (param) return *param;
  auto accept = req.header("Accept");
  if (!accept || trim(*accept).empty()) return Format::json;
  for (const auto& item : split_list(*accept)) {
    std::string_view media = trim(std::string_view(item).substr(0, item.find(';')));
    if (iequals(media, "application/json") || iequals(media, "*/*") || iequals(media, "application/*"))
      return Format::json;
    if (iequals(media, "text/csv") || iequals(media, "text/*")) return Format::csv;
  }
  throw Error(ErrorKind::not_acceptable, "none of the accepted media types is supported; use application/json or text/csv");
}

HttpResponse rows_response(const RowSet& rows, Format fmt) {
  HttpResponse r;
  if (fmt == Format::csv) {
    r.set_header("Content-Type", "text/csv");
    r.body = encode_csv(rows);
  } else {
    r.set_header("Content-Type", "application/json");
    r.body = encode_json(rows);
  }
  return r;
}

/// Returns 412/304 verdicts for a request against the current tag.
void check_preconditions(const HttpRequest& req, const std::string& etag, bool safe) {
  if (auto m = req.header("If-Match"); m && !tag_listed(*m, etag, false))
    throw Error(ErrorKind::precondition_failed, "If-Match does not match current version " + etag);
  if (!safe)
    if (auto n = req.header("If-None-Match"); n && tag_listed(*n, etag, true))
      throw Error(ErrorKind::precondition_failed, "If-None-Match matches current version " + etag);
}

bool not_modified(const HttpRequest& req, const std::string& etag) {
  auto n = req.header("If-None-Match");
  return n && tag_listed(*n, etag, true);
}

HttpResponse not_modified_response(const std::string& etag) {
  HttpResponse r;
  r.status = 304;
  r.set_header("ETag", etag);
  return r;
}

template <typename Fn>
HttpResponse with_write_txn(Catalog& catalog, Fn&& fn) {
  for (int attempt = 1;; ++attempt) {
    try {
      Txn txn = catalog.begin(TxnMode::write);
      return fn(txn);
    } catch (const StorageError& e) {
      if (e.storage_kind() != StorageErrorKind::serialization_conflict || attempt >= Service::kWriteAttempts) throw;
    }
  }
}

json parse_json_body(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::bad_request, "request body is not valid JSON");
  return doc;
}

ModelChange model_change_for(const std::string& method, const ModelPath& mp, const std::string& body) {
  using E = ModelPath::Element;
  using S = ModelPath::Sub;
  if (method == "POST" && mp.sub == S::none) {
    switch (mp.element) {
      case E::model: {
        json doc = parse_json_body(body);
        if (!doc.is_object() || !doc.contains("schema_name") || !doc["schema_name"].is_string())
          throw Error(ErrorKind::bad_request, "schema document needs a schema_name");
        return CreateSchema{schema_from_json(doc, doc["schema_name"].get<std::string>())};
      }
      case E::schema: {
        json doc = body.empty() ? json::object() : parse_json_body(body);
        return CreateSchema{schema_from_json(doc, mp.schema)};
      }
      case E::table_container:
        return CreateTable{table_from_json(parse_json_body(body), mp.schema)};
      case E::column_container:
        return AddColumn{{mp.schema, mp.table}, column_from_json(parse_json_body(body))};
      case E::key_container:
        return AddKey{{mp.schema, mp.table}, key_from_json(parse_json_body(body))};
      case E::fkey_container:
        return AddForeignKey{{mp.schema, mp.table}, fkey_from_json(parse_json_body(body), mp.schema)};
      default:
        break;
    }
  }
  if (method == "PUT" && mp.sub == S::comment) return SetComment{mp, body};
  if (method == "PUT" && mp.sub == S::annotation) return PutAnnotation{mp, mp.annotation_key, parse_json_body(body)};
  if (method == "DELETE") {
    if (mp.sub == S::none) return DeleteElement{mp};
    if (mp.sub == S::comment) return SetComment{mp, std::nullopt};
    if (mp.sub == S::annotation) return DeleteAnnotation{mp, mp.annotation_key};
  }
  throw Error(ErrorKind::method_not_allowed, method + " is not supported on this model resource");
}

std::optional<Method> data_method(const std::string& m) {
  if (m == "GET" || m == "HEAD") return Method::get;
  if (m == "POST") return Method::post;
  if (m == "PUT") return Method::put;
  if (m == "DELETE") return Method::del;
  return std::nullopt;
}

}  // namespace

std::optional<std::string> HttpRequest::header(std::string_view name) const {
  for (const auto& [k, v] : headers)
    if (iequals(k, name)) return v;
  return std::nullopt;
}

std::optional<std::string> HttpResponse::header(std::string_view name) const {
  for (const auto& [k, v] : headers)
    if (iequals(k, name)) return v;
  return std::nullopt;
}

void HttpResponse::set_header(std::string name, std::string value) {
  for (auto& [k, v] : headers) {
    if (iequals(k, name)) {
      v = std::move(value);
      return;
    }
  }
  headers.emplace_back(std::move(name), std::move(value));
}

int status_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::bad_request: return 400;
    case ErrorKind::unauthenticated: return 401;
    case ErrorKind::forbidden: return 403;
    case ErrorKind::not_found: return 404;
    case ErrorKind::method_not_allowed: return 405;
    case ErrorKind::not_acceptable: return 406;
    case ErrorKind::conflict: return 409;
    case ErrorKind::precondition_failed: return 412;
    case ErrorKind::unavailable: return 503;
    case ErrorKind::internal: return 500;
  }
  return 500;
}

std::string make_etag(std::uint64_t catalog, std::uint64_t version) {
  return "\"" + std::to_string(catalog) + "-" + std::to_string(version) + "\"";
}

Service::Service(Registry& registry, ServiceConfig config, std::shared_ptr<NoticeSink> notices)
    : registry_(registry), config_(std::move(config)), notices_(std::move(notices)) {}

ClientContext Service::authenticate(const HttpRequest& request) const {
  if (auto auth = request.header("Authorization")) {
    std::string_view v = trim(*auth);
    if (v.size() <= 7 || !iequals(v.substr(0, 7), "Bearer "))
      throw Error(ErrorKind::unauthenticated, "malformed Authorization header");
    auto it = config_.tokens.find(std::string(trim(v.substr(7))));
    if (it == config_.tokens.end()) throw Error(ErrorKind::unauthenticated, "unknown bearer token");
    return it->second;
  }
  if (config_.trusted_headers) {
    if (auto user = request.header("X-Remote-User"); user && !trim(*user).empty()) {
      ClientContext c;
      c.identity = std::string(trim(*user));
      if (auto attrs = request.header("X-Remote-Attributes")) c.attributes = split_list(*attrs);
      return c;
    }
  }
  return ClientContext::anonymous();
}

HttpResponse Service::dispatch(const HttpRequest& request) {
  HttpResponse response;
  try {
    response = route(request);
  } catch (const StorageError& e) {
    response = error_response(e.kind(), e.what(), e.row_index());
  } catch (const ParseError& e) {
    response = error_response(e.kind(), e.what(), std::nullopt, e.offset(), e.segment());
  } catch (const Error& e) {
    response = error_response(e.kind(), e.what());
  } catch (const json::exception& e) {
    response = error_response(ErrorKind::bad_request, std::string("malformed document: ") + e.what());
  } catch (const std::exception& e) {
    response = error_response(ErrorKind::internal, e.what());
  }
  if (config_.cors) {
    response.set_header("Access-Control-Allow-Origin", "*");
    response.set_header("Access-Control-Expose-Headers", "ETag, Location, X-Affected-Rows");
  }
  if (request.method == "HEAD") response.body.clear();
  return response;
}

HttpResponse Service::route(const HttpRequest& request) {
  std::string_view target = request.target;
  auto qmark = target.find('?');
  std::string_view path = target.substr(0, qmark);
  std::string_view query = qmark == std::string_view::npos ? std::string_view{} : target.substr(qmark + 1);

  if (request.method == "OPTIONS" && config_.cors) {
    HttpResponse r;
    r.status = 204;
    r.set_header("Access-Control-Allow-Methods", "GET, HEAD, POST, PUT, DELETE, OPTIONS");
    r.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type, Accept, If-Match, If-None-Match");
    return r;
  }
  if (path.substr(0, kPrefix.size()) != kPrefix) throw Error(ErrorKind::not_found, "no resource at " + std::string(path));
  std::string_view rest = path.substr(kPrefix.size());
  ClientContext client = authenticate(request);

  if (rest.empty() || rest == "/") {
    if (request.method != "POST") throw Error(ErrorKind::method_not_allowed, "use POST to create a catalog");
    auto catalog = registry_.create_catalog(client);
    std::string id = std::to_string(catalog->id());
    HttpResponse r = json_response(201, ojson{{"id", id}});
    r.set_header("Location", std::string(kPrefix) + "/" + id);
    r.set_header("ETag", make_etag(catalog->id(), catalog->version()));
    return r;
  }
  if (rest.front() != '/') throw Error(ErrorKind::not_found, "no resource at " + std::string(path));
  rest.remove_prefix(1);
  auto slash = rest.find('/');
  auto id = parse_u64(rest.substr(0, slash));
  if (!id) throw Error(ErrorKind::not_found, "catalog " + std::string(rest.substr(0, slash)) + " not found");
  return catalog_route(request, client, *id, slash == std::string_view::npos ? "" : rest.substr(slash), path, query);
}

HttpResponse Service::catalog_route(const HttpRequest& request, const ClientContext& client, std::uint64_t id,
                                    std::string_view rest, std::string_view path, std::string_view query) {
  if (rest.empty() || rest == "/") {
    if (request.method == "DELETE") {
      registry_.delete_catalog(client, id);
      HttpResponse r;
      r.status = 204;
      return r;
    }
    auto catalog = registry_.find(id);
    if (request.method != "GET" && request.method != "HEAD")
      throw Error(ErrorKind::method_not_allowed, request.method + " is not supported on a catalog");
    Txn txn = catalog->begin(TxnMode::read);
    require_right(txn.acls(), AclName::data_read, client);
    std::string etag = make_etag(id, txn.version());
    check_preconditions(request, etag, true);
    if (not_modified(request, etag)) return not_modified_response(etag);
    ojson acls = ojson::object();
    for (AclName n : kAclNames) acls[std::string(to_string(n))] = txn.acls().at(std::string(to_string(n)));
    HttpResponse r = json_response(200, ojson{{"id", std::to_string(id)}, {"acls", acls}, {"version", txn.version()}});
    r.set_header("ETag", etag);
    return r;
  }

  auto catalog = registry_.find(id);
  std::string_view sub = rest.substr(1);
  std::string_view head = sub.substr(0, sub.find('/'));
  if (head == "acl") return acl_route(request, client, *catalog, sub.substr(head.size()));
  if (head == "schema") return model_route(request, client, *catalog, path);
  if (head == "changes" && sub == head) return changes_route(client, *catalog, query);
  if (head == "entity" || head == "attribute" || head == "attributegroup" || head == "aggregate")
    return data_route(request, client, *catalog, path, query);
  throw Error(ErrorKind::not_found, "no resource at " + std::string(path));
}

HttpResponse Service::acl_route(const HttpRequest& request, const ClientContext& client, Catalog& catalog,
                                std::string_view rest) {
  std::optional<AclName> name;
  if (!rest.empty() && rest != "/") {
    std::string text = percent_decode(rest.substr(1));
    name = parse_acl_name(text);
    if (!name) throw Error(ErrorKind::not_found, "no ACL named " + text);
  }
  if (request.method == "GET" || request.method == "HEAD") {
    Txn txn = catalog.begin(TxnMode::read);
    require_right(txn.acls(), AclName::data_read, client);
    std::string etag = make_etag(catalog.id(), txn.version());
    check_preconditions(request, etag, true);
    if (not_modified(request, etag)) return not_modified_response(etag);
    ojson doc;
    if (name) {
      doc = txn.acls().at(std::string(to_string(*name)));
    } else {
      doc = ojson::object();
      for (AclName n : kAclNames) doc[std::string(to_string(n))] = txn.acls().at(std::string(to_string(n)));
    }
    HttpResponse r = json_response(200, doc);
    r.set_header("ETag", etag);
    return r;
  }
  if (request.method != "PUT" || !name)
    throw Error(ErrorKind::method_not_allowed, request.method + " is not supported on this ACL resource");
  return with_write_txn(catalog, [&](Txn& txn) {
    require_right(txn.acls(), AclName::owner, client);
    check_preconditions(request, make_etag(catalog.id(), txn.version()), false);
    json doc = parse_json_body(request.body);
    if (!doc.is_array() || !std::all_of(doc.begin(), doc.end(), [](const json& j) { return j.is_string(); }))
      throw Error(ErrorKind::bad_request, "ACL body must be a JSON list of strings");
    auto members = doc.get<std::vector<std::string>>();
    if (*name == AclName::owner && members.empty())
      throw Error(ErrorKind::conflict, "the owner ACL cannot be empty");
    Acls acls = txn.acls();
    acls[std::string(to_string(*name))] = members;
    txn.set_acls(std::move(acls));
    std::uint64_t before = txn.version();
    std::uint64_t after = catalog.commit(txn);
    publish(catalog.id(), before, after);
    HttpResponse r = json_response(200, ojson(members));
    r.set_header("ETag", make_etag(catalog.id(), after));
    return r;
  });
}

HttpResponse Service::model_route(const HttpRequest& request, const ClientContext& client, Catalog& catalog,
                                  std::string_view path) {
  ModelPath mp = parse_model_url(path);
  using S = ModelPath::Sub;
  if (request.method == "GET" || request.method == "HEAD") {
    Txn txn = catalog.begin(TxnMode::read);
    require_right(txn.acls(), AclName::data_read, client);
    std::string etag = make_etag(catalog.id(), txn.version());
    check_preconditions(request, etag, true);
    if (not_modified(request, etag)) return not_modified_response(etag);
    HttpResponse r;
    if (mp.sub == S::comment) {
      auto text = element_comment(txn.model(), mp);
      if (!text) throw Error(ErrorKind::not_found, "no comment on " + render_model_path(mp));
      r.set_header("Content-Type", "text/plain");
      r.body = *text;
    } else if (mp.sub == S::annotations) {
      ojson doc = ojson::object();
      for (const auto& [k, v] : element_annotations(txn.model(), mp)) doc[k] = ojson::parse(v.dump());
      r = json_response(200, doc);
    } else if (mp.sub == S::annotation) {
      const auto& ann = element_annotations(txn.model(), mp);
      auto it = ann.find(mp.annotation_key);
      if (it == ann.end()) throw Error(ErrorKind::not_found, "no annotation " + mp.annotation_key);
      r = json_response(200, ojson::parse(it->second.dump()));
    } else {
      r = json_response(200, element_document(txn.model(), mp));
    }
    r.set_header("ETag", etag);
    return r;
  }
  return with_write_txn(catalog, [&](Txn& txn) {
    require_right(txn.acls(), AclName::model_write, client);
    check_preconditions(request, make_etag(catalog.id(), txn.version()), false);
    ModelChange change = model_change_for(request.method, mp, request.body);
    ModelChangeResult result = apply_model_change(txn.model(), change);
    txn.set_model(std::move(result.model));
    std::uint64_t before = txn.version();
    std::uint64_t after = catalog.commit(txn);
    publish(catalog.id(), before, after);
    HttpResponse r;
    if (request.method == "DELETE") {
      r.status = 204;
    } else {
      r = json_response(request.method == "POST" ? 201 : 200, result.document);
    }
    r.set_header("ETag", make_etag(catalog.id(), after));
    return r;
  });
}

HttpResponse Service::data_route(const HttpRequest& request, const ClientContext& client, Catalog& catalog,
                                 std::string_view path, std::string_view query) {
  DataRequest req = parse_data_url(path, query);
  auto method = data_method(request.method);
  if (!method) throw Error(ErrorKind::method_not_allowed, request.method + " is not supported on data resources");

  if (*method == Method::get) {
    Txn txn = catalog.begin(TxnMode::read);
    require_right(txn.acls(), AclName::data_read, client);
    std::string etag = make_etag(catalog.id(), txn.version());
    if (req.explain) {
      require_right(txn.acls(), AclName::owner, client);
      HttpResponse r;
      r.set_header("Content-Type", "text/plain");
      r.body = explain(plan_retrieval(req, txn.model()), txn.model());
      r.set_header("ETag", etag);
      return r;
    }
    Format fmt = negotiate(request, req.accept);
    check_preconditions(request, etag, true);
    if (not_modified(request, etag)) return not_modified_response(etag);
    QueryPlan plan = plan_retrieval(req, txn.model());
    HttpResponse r = rows_response(execute(txn.state(), plan, config_.row_cap), fmt);
    r.set_header("ETag", etag);
    return r;
  }

  if (req.explain) throw Error(ErrorKind::bad_request, "explain applies to retrieval only");
  Format fmt = negotiate(request, req.accept);
  return with_write_txn(catalog, [&](Txn& txn) {
    require_right(txn.acls(), AclName::data_write, client);
    check_preconditions(request, make_etag(catalog.id(), txn.version()), false);
    PayloadTable payload;
    if (*method != Method::del) {
      auto type = request.header("Content-Type").value_or("application/json");
      std::string_view media = trim(std::string_view(type).substr(0, type.find(';')));
      if (iequals(media, "text/csv")) {
        payload = decode_csv_payload(request.body);
      } else if (iequals(media, "application/json")) {
        payload = decode_json_payload(request.body);
      } else {
        throw Error(ErrorKind::bad_request, "unsupported Content-Type " + type);
      }
    }
    MutationPlan plan = plan_mutation(req, txn.model(), *method, payload.columns);
    std::map<std::string, ColumnType> types;
    for (const auto& b : plan.correlation) types[b.input] = b.type;
    for (const auto& b : plan.assignments) types[b.input] = b.type;
    RowSet input = type_payload(payload, [&](const std::string& c) -> std::optional<ColumnType> {
      auto it = types.find(c);
      return it == types.end() ? std::nullopt : std::optional(it->second);
    });
    MutationResult result = mutate(txn, plan, input);
    std::uint64_t before = txn.version();
    std::uint64_t after = catalog.commit(txn);
    publish(catalog.id(), before, after);
    HttpResponse r;
    if (*method == Method::del) {
      r.status = 204;
    } else {
      r = rows_response(result.rows, fmt);
    }
    r.set_header("X-Affected-Rows", std::to_string(result.affected));
    r.set_header("ETag", make_etag(catalog.id(), after));
    return r;
  });
}

HttpResponse Service::changes_route(const ClientContext& client, Catalog& catalog, std::string_view query) {
  auto params = parse_simple_query(query);
  std::uint64_t since = 0;
  auto timeout = kDefaultPollTimeout;
  for (const auto& [k, v] : params) {
    if (k == "since") {
      auto n = parse_u64(v);
      if (!n) throw Error(ErrorKind::bad_request, "since must be a version number");
      since = *n;
    } else if (k == "timeout") {
      auto n = parse_u64(v);
      if (!n) throw Error(ErrorKind::bad_request, "timeout must be milliseconds");
      timeout = std::min(std::chrono::milliseconds(static_cast<std::int64_t>(std::min<std::uint64_t>(*n, 1u << 30))),
                         kMaxPollTimeout);
    } else {
      throw Error(ErrorKind::bad_request, "unknown query parameter " + k);
    }
  }
  require_right(catalog.snapshot()->acls, AclName::data_read, client);
  std::uint64_t version = catalog.wait_for_change(since, timeout);
  if (catalog.retired()) throw Error(ErrorKind::not_found, "catalog " + std::to_string(catalog.id()) + " not found");
  HttpResponse r = json_response(200, ojson{{"id", std::to_string(catalog.id())}, {"version", version},
                                            {"changed", version > since}});
  r.set_header("ETag", make_etag(catalog.id(), version));
  return r;
}

void Service::publish(std::uint64_t catalog, std::uint64_t before, std::uint64_t after) {
  if (!notices_ || after == before) return;
  try {
    notices_->publish({catalog, after, now_rfc3339()});
  } catch (const std::exception& e) {
    std::cerr << "notice for catalog " << catalog << " version " << after << " not delivered: " << e.what() << "\n";
  }
}

}  // namespace ermcat

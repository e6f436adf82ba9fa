#include "ermcat/acl.hpp"

#include <algorithm>

#include "ermcat/errors.hpp"

namespace ermcat {

std::string_view to_string(AclName name) noexcept {
  switch (name) {
    case AclName::owner: return "owner";
    case AclName::model_write: return "model_write";
    case AclName::data_write: return "data_write";
    case AclName::data_read: return "data_read";
  }
  return "owner";
}

std::optional<AclName> parse_acl_name(std::string_view text) noexcept {
  for (AclName n : kAclNames)
    if (to_string(n) == text) return n;
  return std::nullopt;
}

Acls initial_acls(const std::string& owner) {
  Acls acls;
  for (AclName n : kAclNames) acls[std::string(to_string(n))] = {};
  acls["owner"] = {owner};
  return acls;
}

bool acl_matches(const std::vector<std::string>& members, const ClientContext& client) {
  for (const auto& m : members) {
    if (m == "*") return true;
    if (client.authenticated() && m == client.identity) return true;
    if (std::find(client.attributes.begin(), client.attributes.end(), m) != client.attributes.end()) return true;
  }
  return false;
}

bool has_right(const Acls& acls, AclName required, const ClientContext& client) {
  for (AclName n : kAclNames) {
    auto it = acls.find(std::string(to_string(n)));
    if (it != acls.end() && acl_matches(it->second, client)) return true;
    if (n == required) break;
  }
  return false;
}

void require_right(const Acls& acls, AclName required, const ClientContext& client) {
  if (has_right(acls, required, client)) return;
  if (!client.authenticated())
    throw Error(ErrorKind::unauthenticated, "authentication required for " + std::string(to_string(required)));
  throw Error(ErrorKind::forbidden, client.identity + " lacks " + std::string(to_string(required)));
}

}  // namespace ermcat

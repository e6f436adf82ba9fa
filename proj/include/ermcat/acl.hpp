#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ermcat {

/// Catalog ACL names, strongest first. Membership in a stronger ACL grants
/// every weaker right.
enum class AclName { owner, model_write, data_write, data_read };

inline constexpr std::array<AclName, 4> kAclNames{AclName::owner, AclName::model_write, AclName::data_write,
                                                   AclName::data_read};

std::string_view to_string(AclName name) noexcept;
std::optional<AclName> parse_acl_name(std::string_view text) noexcept;

inline constexpr std::string_view kAnonymous = "*absent*";

struct ClientContext {
  std::string identity{kAnonymous};
  std::vector<std::string> attributes;

  bool authenticated() const { return identity != kAnonymous; }
  static ClientContext anonymous() { return {}; }
};

/// Member lists keyed by ACL name; always holds all four names.
using Acls = std::map<std::string, std::vector<std::string>>;

Acls initial_acls(const std::string& owner);

/// True if the list names the identity, any attribute, or "*".
bool acl_matches(const std::vector<std::string>& members, const ClientContext& client);

bool has_right(const Acls& acls, AclName required, const ClientContext& client);

/// Throws unauthenticated for an anonymous caller, forbidden otherwise.
void require_right(const Acls& acls, AclName required, const ClientContext& client);

}  // namespace ermcat

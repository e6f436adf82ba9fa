#include "ermcat/registry.hpp"

#include <fstream>

#include <json.hpp>

#include "ermcat/errors.hpp"

namespace ermcat {

Registry::Registry(std::filesystem::path data_dir) : dir_(std::move(data_dir)) {
  if (dir_.empty()) return;
  std::filesystem::create_directories(dir_);
  std::ifstream in(dir_ / "registry.json");
  if (!in) return;
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::internal, "corrupt registry.json in " + dir_.string());
  next_id_ = doc.at("next_id").get<std::uint64_t>();
  for (const auto& id : doc.at("catalogs")) {
    auto n = id.get<std::uint64_t>();
    catalogs_[n] = std::shared_ptr<Catalog>(Catalog::open(n, wal_for(n)));
  }
}

std::filesystem::path Registry::wal_for(std::uint64_t id) const {
  return dir_.empty() ? std::filesystem::path{} : dir_ / ("catalog_" + std::to_string(id) + ".wal");
}

void Registry::persist_index() const {
  if (dir_.empty()) return;
  nlohmann::json doc = {{"next_id", next_id_}, {"catalogs", nlohmann::json::array()}};
  for (const auto& [id, _] : catalogs_) doc["catalogs"].push_back(id);
  auto tmp = dir_ / "registry.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << doc.dump() << '\n';
    if (!out) throw Error(ErrorKind::internal, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, dir_ / "registry.json");
}

std::shared_ptr<Catalog> Registry::create_catalog(const ClientContext& client) {
  if (!client.authenticated()) throw Error(ErrorKind::unauthenticated, "catalog creation requires authentication");
  return adopt(initial_state(client.identity));
}

std::shared_ptr<Catalog> Registry::adopt(CatalogState state) {
  std::lock_guard<std::mutex> lock(mutex_);
  const std::uint64_t id = next_id_++;
  state.version = 1;
  auto catalog = std::make_shared<Catalog>(id, std::move(state), wal_for(id));
  catalogs_[id] = catalog;
  persist_index();
  return catalog;
}

std::shared_ptr<Catalog> Registry::find(std::uint64_t id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = catalogs_.find(id);
  if (it == catalogs_.end()) throw Error(ErrorKind::not_found, "catalog " + std::to_string(id) + " not found");
  return it->second;
}

void Registry::delete_catalog(const ClientContext& client, std::uint64_t id) {
  auto catalog = find(id);
  require_right(catalog->snapshot()->acls, AclName::owner, client);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!catalogs_.erase(id)) throw Error(ErrorKind::not_found, "catalog " + std::to_string(id) + " not found");
    persist_index();
  }
  catalog->retire();
}

std::vector<std::uint64_t> Registry::ids() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<std::uint64_t> out;
  for (const auto& [id, _] : catalogs_) out.push_back(id);
  return out;
}

}  // namespace ermcat

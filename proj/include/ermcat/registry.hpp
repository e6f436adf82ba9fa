#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "ermcat/acl.hpp"
#include "ermcat/storage.hpp"

namespace ermcat {

/// The set of catalogs served by one process. Ids are decimal serials that
/// are never reused, even across restarts when a data directory is set.
class Registry {
 public:
  /// An empty `data_dir` keeps everything in memory. Otherwise existing
  /// catalogs are replayed from `catalog_{id}.wal` files listed in
  /// registry.json.
  explicit Registry(std::filesystem::path data_dir = {});

  /// Requires an authenticated caller, who becomes the sole owner.
  std::shared_ptr<Catalog> create_catalog(const ClientContext& client);
  /// Registers a prepared state (restore/import) under a fresh id.
  std::shared_ptr<Catalog> adopt(CatalogState state);
  /// Throws not_found.
  std::shared_ptr<Catalog> find(std::uint64_t id) const;
  /// Requires owner. Purges the catalog's model, data and log.
  void delete_catalog(const ClientContext& client, std::uint64_t id);

  std::vector<std::uint64_t> ids() const;
  const std::filesystem::path& data_dir() const { return dir_; }

 private:
  std::filesystem::path wal_for(std::uint64_t id) const;
  void persist_index() const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, std::shared_ptr<Catalog>> catalogs_;
};

}  // namespace ermcat

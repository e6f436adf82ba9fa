#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>

#include "ermcat/acl.hpp"
#include "ermcat/model.hpp"
#include "ermcat/value.hpp"

namespace ermcat {

using RowId = std::uint64_t;

/// Rows of one table keyed by a per-table insertion counter. Iteration in
/// RowId order is insertion order.
struct TableData {
  std::map<RowId, Row> rows;
  RowId next_rowid = 1;
  friend bool operator==(const TableData&, const TableData&) = default;
};

/// One committed catalog version. Published states are immutable and shared
/// between readers.
struct CatalogState {
  std::uint64_t version = 1;
  std::shared_ptr<const ErmModel> model;
  Acls acls;
  std::map<TableName, std::shared_ptr<const TableData>> tables;

  const TableData& table(const TableName& name) const;
};

CatalogState initial_state(const std::string& owner);

/// Checks every key, not-null and foreign key constraint over the whole state.
void validate_state(const CatalogState& state);

/// Checks the constraints that touch one table: its keys, not-null columns and
/// outbound references, plus references into it unless `inbound` is false. `input_index` maps rows
/// written by the current statement to their position in the request payload,
/// which is reported with a violation.
void check_table_constraints(const CatalogState& state, const TableName& table,
                             const std::map<RowId, std::size_t>& input_index = {}, bool inbound = true);

/// Copies `data` for a new column list: columns matched by name keep their
/// values; new columns take their default or null.
CatalogState reconcile(const CatalogState& state, ErmModel model);

enum class TxnMode { read, write };

class Catalog;

/// A snapshot view of one catalog. Write transactions hold the catalog's
/// writer lock until commit or abort; destroying an open Txn aborts it.
class Txn {
 public:
  Txn(Txn&& other) noexcept;
  Txn& operator=(Txn&&) = delete;
  Txn(const Txn&) = delete;
  ~Txn();

  TxnMode mode() const { return mode_; }
  bool is_open() const { return open_; }
  std::uint64_t catalog_id() const;
  std::uint64_t version() const { return state_.version; }
  const CatalogState& state() const { return state_; }
  const ErmModel& model() const { return *state_.model; }
  const Acls& acls() const { return state_.acls; }
  const TableData& table(const TableName& name) const { return state_.table(name); }

  /// Replaces the model, reconciling stored rows, and revalidates all data.
  void set_model(ErmModel model);
  void set_acls(Acls acls);
  RowId insert_row(const TableName& table, Row row);
  void update_row(const TableName& table, RowId id, Row row);
  void delete_row(const TableName& table, RowId id);
  bool changed() const { return model_changed_ || acls_changed_ || !touched_.empty(); }

 private:
  friend class Catalog;
  Txn(Catalog* catalog, TxnMode mode, CatalogState state, std::unique_lock<std::timed_mutex> writer);
  TableData& writable(const TableName& table);
  void require_write() const;

  Catalog* catalog_;
  TxnMode mode_;
  CatalogState state_;
  std::unique_lock<std::timed_mutex> writer_;
  std::map<TableName, std::shared_ptr<TableData>> working_;
  std::map<TableName, std::set<RowId>> touched_;
  bool model_changed_ = false;
  bool acls_changed_ = false;
  bool open_ = true;
};

/// One tenant's versioned store with optional write-ahead persistence to a
/// single JSON-lines file.
class Catalog {
 public:
  static constexpr std::chrono::milliseconds kDefaultLockTimeout{2000};

  /// Creates a catalog. A non-empty `wal_path` gets an initial checkpoint.
  Catalog(std::uint64_t id, CatalogState initial, std::filesystem::path wal_path = {});
  /// Replays an existing log. A truncated final line is ignored.
  static std::unique_ptr<Catalog> open(std::uint64_t id, const std::filesystem::path& wal_path);

  std::uint64_t id() const { return id_; }
  const std::filesystem::path& wal_path() const { return wal_path_; }

  /// Throws StorageError(serialization_conflict) when the writer lock cannot
  /// be taken within `lock_timeout`.
  Txn begin(TxnMode mode, std::chrono::milliseconds lock_timeout = kDefaultLockTimeout);
  /// Publishes a write txn's effects and returns the new version. Read txns
  /// and write txns without effects release and return their snapshot version.
  std::uint64_t commit(Txn& txn);
  void abort(Txn& txn) noexcept;

  std::shared_ptr<const CatalogState> snapshot() const;
  std::uint64_t version() const { return snapshot()->version; }

  /// Blocks until the version exceeds `since`, the timeout passes, or the
  /// catalog is retired. Returns the version then current.
  std::uint64_t wait_for_change(std::uint64_t since, std::chrono::milliseconds timeout);

  /// Marks the catalog deleted, removes its log and wakes waiters.
  void retire();
  bool retired() const;

 private:
  void write_checkpoint(const CatalogState& state);
  void append_delta(const CatalogState& state, const Txn& txn);

  std::uint64_t id_;
  std::filesystem::path wal_path_;
  mutable std::mutex state_mutex_;
  std::condition_variable changed_;
  std::shared_ptr<const CatalogState> current_;
  bool retired_ = false;
  std::timed_mutex writer_;
};

}  // namespace ermcat

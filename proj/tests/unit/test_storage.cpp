#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "ermcat/dump.hpp"
#include "ermcat/errors.hpp"
#include "ermcat/fixture.hpp"
#include "ermcat/storage.hpp"
#include "random_catalog.hpp"

using namespace ermcat;
namespace fs = std::filesystem;

namespace {

const TableName kExp{"public", "Experiment"};
const TableName kSample{"public", "Sample"};
const TableName kImage{"public", "Image"};

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() / ("ermcat_storage_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Row experiment(std::int64_t id, const char* name) { return {Value{id}, Value{std::string(name)}}; }

StorageErrorKind failure_of(const std::function<void()>& fn, std::optional<std::size_t>* row = nullptr) {
  try {
    fn();
  } catch (const StorageError& e) {
    if (row) *row = e.row_index();
    return e.storage_kind();
  }
  FAIL("no storage error");
  return StorageErrorKind::type_error;
}

}  // namespace

TEST_CASE("transactions") {
  Catalog c(1, demo_fixture("alice"));
  const std::uint64_t v0 = c.version();

  SUBCASE("commit publishes a new version") {
    Txn t = c.begin(TxnMode::write);
    t.insert_row(kExp, experiment(10, "ten"));
    CHECK(t.changed());
    CHECK(c.commit(t) == v0 + 1);
    CHECK(c.snapshot()->table(kExp).rows.size() == 7);
  }
  SUBCASE("abort and destruction discard") {
    {
      Txn t = c.begin(TxnMode::write);
      t.insert_row(kExp, experiment(10, "ten"));
    }
    Txn t = c.begin(TxnMode::write);
    t.insert_row(kExp, experiment(11, "eleven"));
    c.abort(t);
    CHECK(c.version() == v0);
    CHECK(c.snapshot()->table(kExp).rows.size() == 6);
  }
  SUBCASE("no effects, no new version") {
    Txn t = c.begin(TxnMode::write);
    CHECK(c.commit(t) == v0);
    Txn r = c.begin(TxnMode::read);
    CHECK(c.commit(r) == v0);
  }
  SUBCASE("untouched tables are shared between versions") {
    auto before = c.snapshot();
    Txn t = c.begin(TxnMode::write);
    t.insert_row(kExp, experiment(10, "ten"));
    c.commit(t);
    auto after = c.snapshot();
    CHECK(after->tables.at(kImage) == before->tables.at(kImage));
    CHECK(after->tables.at(kExp) != before->tables.at(kExp));
  }
  SUBCASE("read transactions cannot write") {
    Txn r = c.begin(TxnMode::read);
    CHECK_THROWS_AS(r.insert_row(kExp, experiment(10, "ten")), Error);
  }
  SUBCASE("a second writer times out") {
    Txn w = c.begin(TxnMode::write);
    std::optional<StorageErrorKind> kind;
    std::thread other([&] {
      try {
        c.begin(TxnMode::write, std::chrono::milliseconds(50));
      } catch (const StorageError& e) {
        kind = e.storage_kind();
      }
    });
    other.join();
    CHECK(kind == StorageErrorKind::serialization_conflict);
    c.abort(w);
    CHECK_NOTHROW(c.begin(TxnMode::write, std::chrono::milliseconds(50)));
  }
  SUBCASE("waiters wake on commit") {
    std::uint64_t seen = 0;
    std::thread waiter([&] { seen = c.wait_for_change(v0, std::chrono::seconds(10)); });
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    Txn t = c.begin(TxnMode::write);
    t.insert_row(kExp, experiment(10, "ten"));
    c.commit(t);
    waiter.join();
    CHECK(seen == v0 + 1);
    CHECK(c.wait_for_change(v0 + 5, std::chrono::milliseconds(10)) == v0 + 1);
  }
}

TEST_CASE("constraints report the offending payload row") {
  const CatalogState s = demo_fixture("alice");
  auto run = [&](const std::function<void(CatalogState&, std::map<RowId, std::size_t>&)>& edit, const TableName& t) {
    CatalogState copy = s;
    std::map<RowId, std::size_t> index;
    edit(copy, index);
    check_table_constraints(copy, t, index);
  };
  auto put = [](CatalogState& st, const TableName& t, Row row) {
    auto data = std::make_shared<TableData>(st.table(t));
    RowId id = data->next_rowid++;
    data->rows[id] = std::move(row);
    st.tables[t] = data;
    return id;
  };
  std::optional<std::size_t> row;

  CHECK(failure_of([&] { run([&](auto& st, auto& ix) { ix[put(st, kExp, experiment(1, "dup"))] = 4; }, kExp); }, &row) ==
        StorageErrorKind::key_violation);
  CHECK(row == 4);
  CHECK(failure_of([&] {
          run([&](auto& st, auto& ix) { ix[put(st, kExp, {Value{}, Value{std::string("x")}})] = 2; }, kExp);
        }, &row) == StorageErrorKind::not_null_violation);
  CHECK(row == 2);
  CHECK(failure_of([&] {
          run([&](auto& st, auto& ix) {
            ix[put(st, kSample, {Value{std::int64_t{9}}, Value{std::int64_t{99}}, Value{}})] = 0;
          }, kSample);
        }, &row) == StorageErrorKind::fkey_violation);
  CHECK(row == 0);
  CHECK_NOTHROW(run([&](auto& st, auto& ix) { ix[put(st, kSample, {Value{std::int64_t{9}}, Value{}, Value{}})] = 0; },
                    kSample));
  // Removing a referenced experiment breaks an inbound reference.
  CHECK(failure_of([&] {
          run([&](auto& st, auto&) {
            auto data = std::make_shared<TableData>(st.table(kExp));
            data->rows.erase(data->rows.begin());
            st.tables[kExp] = data;
          }, kExp);
        }) == StorageErrorKind::fkey_violation);
  CHECK_NOTHROW(validate_state(s));
}

TEST_CASE("write-ahead log replay") {
  TempDir dir;
  const fs::path wal = dir.path / "catalog_1.wal";
  std::mt19937_64 rng(8);
  CatalogState start = fixture::random_catalog(rng, 30);
  {
    Catalog c(1, start, wal);
    for (int i = 0; i < 20; ++i) {
      Txn t = c.begin(TxnMode::write);
      const TableName a{"public", "A"};
      auto rows = t.table(a).rows;
      if (i % 3 == 0 && !rows.empty()) {
        Row r = rows.begin()->second;
        r[1] = Value{std::string("renamed ") + std::to_string(i)};
        t.update_row(a, rows.begin()->first, r);
      } else {
        t.insert_row(a, {Value{std::int64_t{100000 + i}}, Value{std::string("n")}, Value{}, Value{}, Value{}});
      }
      c.commit(t);
    }
    Txn t = c.begin(TxnMode::write);
    Acls acls = t.acls();
    acls["data_read"] = {"*"};
    t.set_acls(acls);
    c.commit(t);
    auto replayed = Catalog::open(1, wal);
    CHECK(replayed->version() == c.version());
    CHECK(replayed->snapshot()->tables.size() == c.snapshot()->tables.size());
    for (const auto& [name, data] : c.snapshot()->tables) CHECK(*replayed->snapshot()->tables.at(name) == *data);
    CHECK(replayed->snapshot()->acls == c.snapshot()->acls);
    CHECK(*replayed->snapshot()->model == *c.snapshot()->model);
  }
  SUBCASE("a torn final record is ignored") {
    const std::uint64_t full = Catalog::open(1, wal)->version();
    std::ofstream(wal, std::ios::app) << R"({"kind":"delta","version":)";
    auto replayed = Catalog::open(1, wal);
    CHECK(replayed->version() == full);
  }
  SUBCASE("a version gap is refused") {
    std::ofstream(wal, std::ios::app) << R"({"kind":"delta","version":999,"tables":[]})" << "\n";
    CHECK_THROWS(Catalog::open(1, wal));
  }
  SUBCASE("retire removes the log") {
    auto c = Catalog::open(1, wal);
    c->retire();
    CHECK(c->retired());
    CHECK_FALSE(fs::exists(wal));
    CHECK_THROWS_AS(c->begin(TxnMode::read), Error);
  }
}

TEST_CASE("model changes reconcile stored rows") {
  CatalogState s = demo_fixture("alice");
  ErmModel m = *s.model;
  Table& img = *m.find_table(kImage);
  img.columns.erase(img.columns.begin() + 3);  // quality
  img.columns.push_back({"score", ColumnType::int8, true, Value{std::int64_t{5}}, {}, {}});
  CatalogState r = reconcile(s, m);
  for (const auto& [_, row] : r.table(kImage).rows) {
    REQUIRE(row.size() == 5);
    CHECK(std::get<std::int64_t>(row[4]) == 5);
  }
  CHECK(r.table(kImage).rows.size() == s.table(kImage).rows.size());
}

TEST_CASE("dump and restore") {
  TempDir dir;
  std::mt19937_64 rng(12);
  const CatalogState s = fixture::random_catalog(rng, 50);
  export_catalog(s, dir.path);
  CHECK(fs::exists(dir.path / "model.json"));
  CHECK(fs::exists(dir.path / dump_file_name({"lab", "D"})));
  CHECK(dump_file_name({"lab", "D"}) == "lab.D.csv");
  CHECK(dump_file_name({"a.b", "c/d e"}) == "a.b.c%2Fd%20e.csv");

  CatalogState back = import_catalog(dir.path, "bob");
  CHECK(*back.model == *s.model);
  CHECK(back.acls.at("owner") == std::vector<std::string>{"bob"});
  for (const auto& [name, data] : s.tables) {
    std::multiset<std::string> want, got;
    for (const auto& [_, row] : data->rows) want.insert(nlohmann::json(row.size()).dump() + [&] {
      std::string out;
      for (const auto& v : row) out += value_to_json(v).dump() + "\x1f";
      return out;
    }());
    for (const auto& [_, row] : back.table(name).rows) got.insert(nlohmann::json(row.size()).dump() + [&] {
      std::string out;
      for (const auto& v : row) out += value_to_json(v).dump() + "\x1f";
      return out;
    }());
    CHECK(got == want);
  }

  SUBCASE("a broken file is named in the error") {
    std::ofstream(dir.path / "public.B.csv", std::ios::app) << "1,2,3\n";
    try {
      import_catalog(dir.path, "bob");
      FAIL("broken dump imported");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("public.B.csv") != std::string::npos);
    }
  }
}

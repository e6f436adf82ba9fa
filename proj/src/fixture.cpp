#include "ermcat/fixture.hpp"

namespace ermcat {

namespace {

Column col(std::string name, ColumnType type, bool nullok = true) {
  Column c;
  c.name = std::move(name);
  c.type = type;
  c.nullok = nullok;
  return c;
}

Table table(std::string name, std::vector<Column> columns, std::string key) {
  Table t;
  t.schema_name = "public";
  t.name = std::move(name);
  t.columns = std::move(columns);
  t.keys.push_back(Key{{std::move(key)}, {}, {}});
  return t;
}

ForeignKey fkey(std::string column, std::string table, std::string referenced) {
  ForeignKey fk;
  fk.columns = {std::move(column)};
  fk.referenced = {"public", std::move(table)};
  fk.referenced_columns = {std::move(referenced)};
  return fk;
}

}  // namespace

ErmModel demo_model() {
  using T = ColumnType;
  ErmModel m = ErmModel::initial();
  auto& tables = m.schemas["public"].tables;

  tables["Experiment"] = table("Experiment", {col("ID", T::int8, false), col("Name", T::text)}, "ID");

  Table sample = table("Sample", {col("ID", T::int8, false), col("Experiment_ID", T::int8), col("Name", T::text)}, "ID");
  sample.foreign_keys.push_back(fkey("Experiment_ID", "Experiment", "ID"));
  tables["Sample"] = sample;

  Table asset = table("SEC_Asset", {col("ID", T::int8, false), col("Sample_ID", T::int8), col("URL", T::text)}, "ID");
  asset.foreign_keys.push_back(fkey("Sample_ID", "Sample", "ID"));
  tables["SEC_Asset"] = asset;

  tables["Subject"] = table("Subject", {col("id", T::int8, false), col("name", T::text)}, "id");

  Table image = table("Image",
                      {col("id", T::int8, false), col("subject_id", T::int8), col("acquired", T::date),
                       col("quality", T::float8), col("reviewed", T::boolean)},
                      "id");
  image.columns[4].default_value = false;
  image.foreign_keys.push_back(fkey("subject_id", "Subject", "id"));
  tables["Image"] = image;
  return m;
}

CatalogState demo_fixture(const std::string& owner) {
  CatalogState state = initial_state(owner);
  auto model = std::make_shared<ErmModel>(demo_model());
  state.model = model;
  auto fill = [&](const std::string& name, std::vector<Row> rows) {
    auto data = std::make_shared<TableData>();
    for (auto& r : rows) data->rows.emplace(data->next_rowid++, std::move(r));
    state.tables[{"public", name}] = data;
  };
  using I = std::int64_t;
  std::vector<Row> experiments;
  for (I i = 1; i <= 6; ++i) experiments.push_back({i, "Experiment " + std::to_string(i)});
  fill("Experiment", std::move(experiments));
  fill("Sample", {{I{1}, I{1}, std::string("S1")},
                  {I{2}, I{2}, std::string("S2")},
                  {I{3}, I{3}, std::string("S3")},
                  {I{4}, I{4}, std::string("S4")}});
  fill("SEC_Asset", {{I{1}, I{1}, std::string("https://example.org/a1")},
                     {I{2}, I{2}, std::string("https://example.org/a2")},
                     {I{3}, I{4}, std::string("https://example.org/a3")}});
  fill("Subject", {{I{17}, std::string("mouse 17")}, {I{18}, std::string("mouse 18")}, {I{19}, std::string("rat 19")}});
  auto image = [](I id, I subject, Date acquired, double quality, bool reviewed) {
    return Row{id, subject, acquired, quality, reviewed};
  };
  fill("Image", {image(11, 17, make_date(2016, 1, 20), 0.5, true),
                 image(12, 17, make_date(2016, 1, 29), 0.75, false),
                 image(13, 17, make_date(2016, 2, 24), 0.9, true),
                 image(14, 17, make_date(2016, 3, 2), 0.25, false),
                 image(15, 17, make_date(2016, 2, 24), 0.8, false),
                 image(16, 17, make_date(2016, 2, 24), 0.6, true),
                 image(17, 18, make_date(2016, 2, 1), 0.7, true),
                 image(18, 19, make_date(2016, 4, 9), 0.1, false)});
  validate_state(state);
  return state;
}

}  // namespace ermcat

#include "random_catalog.hpp"

#include <algorithm>
#include <set>

namespace fixture {

using namespace ermcat;

namespace {

Column col(std::string name, ColumnType type, bool nullok = true) {
  Column c;
  c.name = std::move(name);
  c.type = type;
  c.nullok = nullok;
  return c;
}

ForeignKey fk(std::string column, TableName ref) {
  ForeignKey f;
  f.columns = {std::move(column)};
  f.referenced = std::move(ref);
  f.referenced_columns = {"id"};
  return f;
}

Table make(std::string schema, std::string name, std::vector<Column> cols) {
  Table t;
  t.schema_name = std::move(schema);
  t.name = std::move(name);
  t.columns = std::move(cols);
  t.keys.push_back(Key{{"id"}, {}, {}});
  return t;
}

const std::vector<std::string> kTexts = {
    "alpha",       "Alpha beta",   "running dogs", "the dog runs", "gamma-ray", "a/b;c",     "x&y=z",
    "50% off",     "(paren)",      "comma, here",  "naïve café",   "",          "quote\"s",  "tab\there",
    "ALPHA rays",  "beta@home",    "dogs::gt::",   "*star*",       "semi;colon", "runs fast", "Gamma"};

const std::vector<std::string> kJson = {R"({"k":1})", "[1,2]", R"("s")", "3", R"({"a":{"b":null}})", "true"};

const std::vector<std::string> kRegex = {"^a", "al", "[dr]og", "s$", "^$", "a.b", "é", "RUN", "(a|b)c?", "^[^ ]+$",
                                         "\\d", "%", ";", "&", "::"};
const std::vector<std::string> kTerms = {"dog", "run", "alpha beta", "ray", "off", "dogs running", "home"};

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace

ErmModel random_model() {
  using T = ColumnType;
  ErmModel m = ErmModel::initial();
  m.schemas["lab"].name = "lab";
  m.schemas["public"].tables["A"] =
      make("public", "A", {col("id", T::int8, false), col("name", T::text), col("score", T::float8),
                           col("born", T::date), col("flag", T::boolean)});
  Table b = make("public", "B", {col("id", T::int8, false), col("a_id", T::int8), col("label", T::text),
                                 col("qty", T::int8), col("at", T::timestamptz)});
  b.foreign_keys.push_back(fk("a_id", {"public", "A"}));
  m.schemas["public"].tables["B"] = b;
  Table c = make("public", "C", {col("id", T::int8, false), col("b_id", T::int8), col("a_id", T::int8),
                                 col("note", T::text), col("meta", T::json)});
  c.foreign_keys.push_back(fk("b_id", {"public", "B"}));
  c.foreign_keys.push_back(fk("a_id", {"public", "A"}));
  m.schemas["public"].tables["C"] = c;
  Table d = make("lab", "D", {col("id", T::int8, false), col("parent_id", T::int8), col("a_id", T::int8),
                              col("tag name", T::text)});
  d.foreign_keys.push_back(fk("parent_id", {"lab", "D"}));
  d.foreign_keys.push_back(fk("a_id", {"public", "A"}));
  m.schemas["lab"].tables["D"] = d;
  return m;
}

CatalogState random_catalog(std::mt19937_64& rng, std::size_t max_rows) {
  CatalogState state = initial_state("owner");
  auto model = std::make_shared<ErmModel>(random_model());
  state.model = model;

  auto ids_for = [&](std::size_t n) {
    std::vector<std::int64_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i + 1);
    std::shuffle(ids.begin(), ids.end(), rng);
    return ids;
  };
  auto count = [&] { return static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(max_rows))); };
  auto maybe_null = [&](Value v, double p = 0.15) { return chance(rng, p) ? Value{} : v; };
  auto ref = [&](const std::vector<std::int64_t>& parents) -> Value {
    if (parents.empty() || chance(rng, 0.15)) return Value{};
    return pick(rng, parents);
  };
  auto text = [&]() -> Value { return maybe_null(pick(rng, kTexts)); };
  auto fill = [&](const TableName& name, std::vector<Row> rows) {
    auto data = std::make_shared<TableData>();
    for (auto& r : rows) data->rows.emplace(data->next_rowid++, std::move(r));
    state.tables[name] = data;
  };

  auto a_ids = ids_for(count());
  std::vector<Row> a;
  for (auto id : a_ids) {
    a.push_back({id, text(), maybe_null(static_cast<double>(uniform(rng, -40, 40)) / 4.0),
                 maybe_null(make_date(2015 + uniform(rng, 0, 2), uniform(rng, 1, 12), uniform(rng, 1, 28))),
                 maybe_null(chance(rng, 0.5))});
  }
  fill({"public", "A"}, std::move(a));

  auto b_ids = ids_for(count());
  std::vector<Row> b;
  for (auto id : b_ids) {
    b.push_back({id, ref(a_ids), text(), maybe_null(std::int64_t{uniform(rng, 0, 9)}),
                 maybe_null(make_timestamp(2016, uniform(rng, 1, 3), uniform(rng, 1, 28), uniform(rng, 0, 23),
                                           uniform(rng, 0, 59), uniform(rng, 0, 59), uniform(rng, 0, 2) * 250000))});
  }
  fill({"public", "B"}, std::move(b));

  auto c_ids = ids_for(count());
  std::vector<Row> c;
  for (auto id : c_ids)
    c.push_back({id, ref(b_ids), ref(a_ids), text(), maybe_null(parse_value(ColumnType::json, pick(rng, kJson)))});
  fill({"public", "C"}, std::move(c));

  // Parents precede children so every parent_id refers to an existing row.
  std::size_t nd = count();
  std::vector<std::int64_t> d_seen;
  std::vector<Row> d;
  for (std::size_t i = 0; i < nd; ++i) {
    auto id = static_cast<std::int64_t>(i + 1);
    d.push_back({id, ref(d_seen), ref(a_ids), text()});
    d_seen.push_back(id);
  }
  fill({"lab", "D"}, std::move(d));
  validate_state(state);
  return state;
}

namespace {

struct Gen {
  std::mt19937_64& rng;
  const CatalogState& state;
  const ErmModel& model;
  struct Inst {
    std::string alias;
    const Table* table;
  };
  std::vector<Inst> insts;
  std::size_t context = 0;

  const Table& table(const TableName& n) const { return *model.find_table(n); }

  std::vector<Value> column_values(const Table& t, std::size_t c) const {
    std::vector<Value> out;
    for (const auto& [_, row] : state.table(t.table_name()).rows)
      if (!is_null(row[c])) out.push_back(row[c]);
    return out;
  }

  ColumnRef ref_to(std::size_t inst, const std::string& column, bool qualify) const {
    ColumnRef r;
    if (qualify || inst != context) r.alias = insts[inst].alias;
    r.column = column;
    return r;
  }

  std::string operand_for(const Table& t, std::size_t c) {
    auto values = column_values(t, c);
    if (!values.empty() && chance(rng, 0.8)) return format_value(pick(rng, values));
    switch (t.columns[c].type) {
      case ColumnType::int8: return std::to_string(uniform(rng, -2, 12));
      case ColumnType::float8: return std::to_string(uniform(rng, -10, 10)) + ".5";
      case ColumnType::boolean: return chance(rng, 0.5) ? "true" : "false";
      case ColumnType::date: return "2016-0" + std::to_string(uniform(rng, 1, 9)) + "-15";
      case ColumnType::timestamptz: return "2016-02-10T12:00:00+02:00";
      case ColumnType::json: return pick(rng, kJson);
      case ColumnType::text: return pick(rng, kTexts);
    }
    return "0";
  }

  Predicate leaf() {
    std::size_t inst = chance(rng, 0.6) ? context : static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(insts.size()) - 1));
    const Table& t = *insts[inst].table;
    if (chance(rng, 0.08)) {
      ColumnRef r;
      r.wildcard = true;
      if (inst != context) r.alias = insts[inst].alias;
      return Predicate::leaf(r, chance(rng, 0.5) ? Operator::ciregexp : Operator::regexp, pick(rng, kRegex));
    }
    std::size_t c = static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(t.columns.size()) - 1));
    ColumnRef r = ref_to(inst, t.columns[c].name, chance(rng, 0.3));
    const ColumnType type = t.columns[c].type;
    int roll = uniform(rng, 0, 9);
    if (roll == 0) return Predicate::leaf(r, Operator::null);
    if (type == ColumnType::text && roll <= 3) {
      if (roll == 3) return Predicate::leaf(r, Operator::ts, pick(rng, kTerms));
      return Predicate::leaf(r, roll == 1 ? Operator::regexp : Operator::ciregexp, pick(rng, kRegex));
    }
    if (type != ColumnType::text && roll == 1 && chance(rng, 0.3))
      return Predicate::leaf(r, Operator::regexp, pick(rng, kRegex));
    static const std::vector<Operator> cmp = {Operator::eq, Operator::eq, Operator::lt, Operator::leq, Operator::gt,
                                              Operator::geq};
    return Predicate::leaf(r, pick(rng, cmp), operand_for(t, c));
  }

  Predicate tree(int leaves) {
    Predicate p;
    if (leaves <= 1) {
      p = leaf();
    } else {
      int left = uniform(rng, 1, leaves - 1);
      std::vector<Predicate> kids{tree(left), tree(leaves - left)};
      p = chance(rng, 0.5) ? Predicate::all_of(std::move(kids)) : Predicate::any_of(std::move(kids));
    }
    if (chance(rng, 0.15)) p = Predicate::negate(std::move(p));
    return p;
  }

  /// Foreign keys anywhere that reference `cols` of `target`. An inbound
  /// endpoint only names a join when this is exactly one.
  std::size_t inbound_count(const Table& target, const std::vector<std::string>& cols) const {
    std::size_t n = 0;
    for (const auto& [_, s] : model.schemas)
      for (const auto& [__, t] : s.tables)
        for (const auto& f : t.foreign_keys)
          n += f.referenced == target.table_name() && f.referenced_columns == cols;
    return n;
  }

  /// Candidate joins from the context table.
  std::vector<std::pair<TableInstance, const Table*>> moves() const {
    const Table& ctx = *insts[context].table;
    std::vector<std::pair<TableInstance, const Table*>> out;
    auto relations = [&](const Table& other) {
      int n = 0;
      for (const auto& f : ctx.foreign_keys) n += f.referenced == other.table_name();
      for (const auto& f : other.foreign_keys) n += f.referenced == ctx.table_name();
      return n;
    };
    auto table_ref = [](const Table& t, bool qualify) {
      TableRef r;
      if (qualify) r.schema = t.schema_name;
      r.table = t.name;
      return r;
    };
    for (const auto& f : ctx.foreign_keys) {
      const Table& other = table(f.referenced);
      TableInstance ti;
      if (relations(other) == 1) {
        ti.source = table_ref(other, other.schema_name == "lab");
      } else {
        ti.source = Endpoint{JoinDirection::inner, f.columns};
      }
      out.emplace_back(ti, &other);
    }
    for (const auto& [_, s] : model.schemas) {
      for (const auto& [__, other] : s.tables) {
        for (const auto& f : other.foreign_keys) {
          if (f.referenced != ctx.table_name()) continue;
          TableInstance ti;
          if (relations(other) == 1) {
            ti.source = table_ref(other, other.schema_name == "lab");
          } else if (inbound_count(ctx, f.referenced_columns) == 1) {
            ti.source = Endpoint{JoinDirection::inner, f.referenced_columns};
          } else {
            continue;
          }
          out.emplace_back(ti, &other);
        }
      }
    }
    return out;
  }
};

}  // namespace

DataRequest random_request(std::mt19937_64& rng, const CatalogState& state, RequestShape shape) {
  const ErmModel& model = *state.model;
  Gen g{rng, state, model, {}, 0};
  DataRequest req;
  req.catalog = "1";
  static const std::vector<TableName> roots = {{"public", "A"}, {"public", "B"}, {"public", "C"}, {"lab", "D"}};
  const Table& root = *model.find_table(pick(rng, roots));
  {
    TableInstance ti;
    ti.alias = "a0";
    TableRef r;
    if (root.schema_name == "lab" || chance(rng, 0.3)) r.schema = root.schema_name;
    r.table = root.name;
    ti.source = r;
    req.path.push_back(ti);
    g.insts.push_back({"a0", &root});
  }

  int joins = uniform(rng, 0, 3);
  int leaves_left = uniform(rng, 0, 4);
  for (int j = 0; j <= joins; ++j) {
    if (j > 0) {
      auto options = g.moves();
      if (options.empty()) break;
      auto [ti, t] = pick(rng, options);
      if (auto* ep = std::get_if<Endpoint>(&ti.source)) {
        static const std::vector<JoinDirection> dirs = {JoinDirection::inner, JoinDirection::left,
                                                        JoinDirection::right, JoinDirection::full};
        ep->direction = pick(rng, dirs);
      } else if (chance(rng, 0.35)) {
        static const std::vector<JoinDirection> dirs = {JoinDirection::left, JoinDirection::right,
                                                        JoinDirection::full};
        // Directional joins need an endpoint; rebuild from the relating key.
        const Table& ctx = *g.insts[g.context].table;
        std::vector<std::string> cols;
        for (const auto& f : ctx.foreign_keys)
          if (f.referenced == t->table_name()) cols = f.columns;
        if (cols.empty())
          for (const auto& f : t->foreign_keys)
            if (f.referenced == ctx.table_name() && g.inbound_count(ctx, f.referenced_columns) == 1)
              cols = f.referenced_columns;
        if (!cols.empty()) ti.source = Endpoint{pick(rng, dirs), cols};
      }
      std::string alias = "a" + std::to_string(g.insts.size());
      ti.alias = alias;
      req.path.push_back(ti);
      g.insts.push_back({alias, t});
      g.context = g.insts.size() - 1;
    }
    if (leaves_left > 0 && chance(rng, 0.5)) {
      int n = uniform(rng, 1, leaves_left);
      leaves_left -= n;
      req.path.push_back(FilterElement{g.tree(n)});
    }
  }
  if (leaves_left > 0) {
    if (g.insts.size() > 1 && chance(rng, 0.3)) {
      g.context = static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(g.insts.size()) - 1));
      req.path.push_back(ContextReset{g.insts[g.context].alias});
    }
    req.path.push_back(FilterElement{g.tree(leaves_left)});
  }

  const Table& target = *g.insts[g.context].table;
  int roll = uniform(rng, 0, 19);
  req.mapping = roll < 7 ? Mapping::entity : roll < 12 ? Mapping::attribute : roll < 17 ? Mapping::attributegroup
                                                                                      : Mapping::aggregate;
  auto column_of = [&](std::size_t inst, std::size_t c, std::string out) {
    OutputColumn oc;
    oc.out_alias = std::move(out);
    oc.source = g.ref_to(inst, g.insts[inst].table->columns[c].name, chance(rng, 0.5));
    return oc;
  };
  auto random_column = [&](std::string out) {
    std::size_t inst = static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(g.insts.size()) - 1));
    std::size_t c = static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(g.insts[inst].table->columns.size()) - 1));
    return column_of(inst, c, std::move(out));
  };
  auto random_aggregate = [&](std::string out) {
    static const std::vector<AggregateFn> fns = {AggregateFn::cnt, AggregateFn::cnt_d, AggregateFn::min,
                                                 AggregateFn::max, AggregateFn::array};
    OutputColumn oc = random_column(std::move(out));
    oc.fn = pick(rng, fns);
    if (*oc.fn == AggregateFn::cnt && chance(rng, 0.4)) oc.source = ColumnRef{std::nullopt, "", true};
    return oc;
  };

  std::vector<std::string> unique_outputs;
  std::vector<std::string> sortable;
  switch (req.mapping) {
    case Mapping::entity:
      for (const auto& c : target.columns) sortable.push_back(c.name);
      unique_outputs = {"id"};
      break;
    case Mapping::attribute: {
      Projection p;
      for (std::size_t i = 0; i < g.insts.size(); ++i) {
        p.columns.push_back(column_of(i, 0, "k" + std::to_string(i)));
        unique_outputs.push_back("k" + std::to_string(i));
      }
      int extra = uniform(rng, 1, 3);
      for (int i = 0; i < extra; ++i) p.columns.push_back(random_column("o" + std::to_string(i)));
      std::shuffle(p.columns.begin(), p.columns.end(), rng);
      for (const auto& c : p.columns) sortable.push_back(c.name());
      req.projection = p;
      break;
    }
    case Mapping::attributegroup: {
      Projection p;
      int keys = uniform(rng, 1, 2);
      for (int i = 0; i < keys; ++i) {
        p.group_keys.push_back(random_column("g" + std::to_string(i)));
        unique_outputs.push_back("g" + std::to_string(i));
      }
      int extra = uniform(rng, 0, 2);
      for (int i = 0; i < extra; ++i)
        p.columns.push_back(chance(rng, 0.8) ? random_aggregate("v" + std::to_string(i)) : random_column("v" + std::to_string(i)));
      for (const auto& c : p.group_keys) sortable.push_back(c.name());
      for (const auto& c : p.columns) sortable.push_back(c.name());
      req.projection = p;
      break;
    }
    case Mapping::aggregate: {
      Projection p;
      int n = uniform(rng, 1, 3);
      for (int i = 0; i < n; ++i) p.columns.push_back(random_aggregate("v" + std::to_string(i)));
      req.projection = p;
      break;
    }
  }

  if (shape.sorted && req.mapping != Mapping::aggregate) {
    std::vector<SortKey> sort;
    std::set<std::string> used;
    int lead = uniform(rng, 0, 2);
    for (int i = 0; i < lead && !sortable.empty(); ++i) {
      const auto& name = pick(rng, sortable);
      if (used.insert(name).second) sort.push_back({name, chance(rng, 0.4)});
    }
    for (const auto& name : unique_outputs)
      if (used.insert(name).second) sort.push_back({name, chance(rng, 0.3)});
    req.sort = sort;
    if (shape.allow_paging && chance(rng, 0.3)) req.limit = static_cast<std::uint64_t>(uniform(rng, 1, 20));
  }
  return req;
}

}  // namespace fixture

#include "oracle.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

namespace oracle {

namespace {

using namespace ermcat;

struct Fail {
  ErrorKind kind;
  std::string message;
};

[[noreturn]] void fail(ErrorKind kind, std::string message) { throw Fail{kind, std::move(message)}; }

constexpr RowId kAbsent = ~RowId{0};

struct Instance {
  std::optional<std::string> alias;
  const Table* table = nullptr;
  std::size_t attach = 0;
  JoinDirection direction = JoinDirection::inner;
  std::vector<std::pair<std::string, std::string>> on;  // (attach column, own column)
};

struct Combo {
  std::vector<RowId> ids;  // kAbsent for a null-extended instance
};

struct Context {
  const CatalogState& state;
  std::vector<Instance> instances;
  std::map<std::string, std::size_t> aliases;
  std::size_t context = 0;
  std::vector<std::pair<std::size_t, const Predicate*>> filters;
};

const Table& lookup_table(const ErmModel& m, const TableRef& ref) {
  std::vector<const Table*> found;
  for (const auto& [sname, s] : m.schemas) {
    if (ref.schema && sname != *ref.schema) continue;
    auto it = s.tables.find(ref.table);
    if (it != s.tables.end()) found.push_back(&it->second);
  }
  if (found.empty()) fail(ErrorKind::not_found, "no table " + ref.table);
  if (found.size() > 1) fail(ErrorKind::bad_request, "ambiguous table " + ref.table);
  return *found.front();
}

bool same_set(std::vector<std::string> a, std::vector<std::string> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

bool has_column(const Table& t, const std::string& c) {
  for (const auto& col : t.columns)
    if (col.name == c) return true;
  return false;
}

std::size_t col_index(const Table& t, const std::string& c) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (t.columns[i].name == c) return i;
  fail(ErrorKind::not_found, "no column " + c + " in " + t.name);
}

void build_path(Context& cx, const DataRequest& req) {
  const ErmModel& m = *cx.state.model;
  for (std::size_t i = 0; i < req.path.size(); ++i) {
    const auto& el = req.path[i];
    if (const auto* ti = std::get_if<TableInstance>(&el)) {
      Instance inst;
      inst.alias = ti->alias;
      if (cx.instances.empty()) {
        const auto* ref = std::get_if<TableRef>(&ti->source);
        if (!ref) fail(ErrorKind::bad_request, "path must begin with a table");
        inst.table = &lookup_table(m, *ref);
      } else {
        const Table& ctx = *cx.instances[cx.context].table;
        std::vector<Instance> cands;
        if (const auto* ref = std::get_if<TableRef>(&ti->source)) {
          const Table& next = lookup_table(m, *ref);
          for (const auto& fk : ctx.foreign_keys) {
            if (fk.referenced != next.table_name()) continue;
            Instance c;
            c.table = &next;
            for (std::size_t k = 0; k < fk.columns.size(); ++k) c.on.emplace_back(fk.columns[k], fk.referenced_columns[k]);
            cands.push_back(c);
          }
          for (const auto& fk : next.foreign_keys) {
            if (fk.referenced != ctx.table_name()) continue;
            Instance c;
            c.table = &next;
            for (std::size_t k = 0; k < fk.columns.size(); ++k) c.on.emplace_back(fk.referenced_columns[k], fk.columns[k]);
            cands.push_back(c);
          }
        } else {
          const auto& ep = std::get<Endpoint>(ti->source);
          for (const auto& c : ep.columns)
            if (!has_column(ctx, c)) fail(ErrorKind::not_found, "no column " + c);
          for (const auto& fk : ctx.foreign_keys) {
            if (!same_set(fk.columns, ep.columns)) continue;
            Instance c;
            c.table = m.find_table(fk.referenced);
            for (std::size_t k = 0; k < fk.columns.size(); ++k) c.on.emplace_back(fk.columns[k], fk.referenced_columns[k]);
            cands.push_back(c);
          }
          for (const auto& [_, s] : m.schemas) {
            for (const auto& [__, t] : s.tables) {
              for (const auto& fk : t.foreign_keys) {
                if (fk.referenced != ctx.table_name() || !same_set(fk.referenced_columns, ep.columns)) continue;
                Instance c;
                c.table = &t;
                for (std::size_t k = 0; k < fk.columns.size(); ++k)
                  c.on.emplace_back(fk.referenced_columns[k], fk.columns[k]);
                cands.push_back(c);
              }
            }
          }
          for (auto& c : cands) c.direction = ep.direction;
        }
        if (cands.size() != 1) fail(ErrorKind::bad_request, cands.empty() ? "unrelated" : "ambiguous");
        inst.table = cands.front().table;
        inst.on = cands.front().on;
        inst.direction = cands.front().direction;
        inst.attach = cx.context;
      }
      cx.instances.push_back(inst);
      cx.context = cx.instances.size() - 1;
      if (ti->alias) {
        if (cx.aliases.count(*ti->alias)) fail(ErrorKind::bad_request, "alias reused");
        cx.aliases[*ti->alias] = cx.context;
      }
    } else if (const auto* f = std::get_if<FilterElement>(&el)) {
      cx.filters.emplace_back(cx.context, &f->predicate);
    } else {
      const auto& r = std::get<ContextReset>(el);
      auto it = cx.aliases.find(r.alias);
      if (it == cx.aliases.end()) fail(ErrorKind::bad_request, "unknown alias " + r.alias);
      cx.context = it->second;
    }
  }
}

// --- combos ------------------------------------------------------------------

const Row* row_of(const Context& cx, const Combo& c, std::size_t i) {
  if (c.ids[i] == kAbsent) return nullptr;
  return &cx.state.table(cx.instances[i].table->table_name()).rows.at(c.ids[i]);
}

bool join_matches(const Context& cx, const Instance& inst, const Row* attach, const Row& row) {
  if (!attach) return false;
  const Table& at = *cx.instances[inst.attach].table;
  for (const auto& [a, b] : inst.on) {
    const Value& x = (*attach)[col_index(at, a)];
    const Value& y = row[col_index(*inst.table, b)];
    if (is_null(x) || is_null(y) || compare_values(x, y) != 0) return false;
  }
  return true;
}

std::vector<Combo> all_combos(const Context& cx) {
  const std::size_t n = cx.instances.size();
  std::vector<Combo> combos;
  for (const auto& [id, _] : cx.state.table(cx.instances[0].table->table_name()).rows) {
    Combo c{std::vector<RowId>(n, kAbsent)};
    c.ids[0] = id;
    combos.push_back(c);
  }
  for (std::size_t i = 1; i < n; ++i) {
    const Instance& inst = cx.instances[i];
    const auto& rows = cx.state.table(inst.table->table_name()).rows;
    std::vector<Combo> next;
    std::set<RowId> used;
    for (const auto& c : combos) {
      bool any = false;
      for (const auto& [id, row] : rows) {
        if (!join_matches(cx, inst, row_of(cx, c, inst.attach), row)) continue;
        Combo d = c;
        d.ids[i] = id;
        next.push_back(d);
        used.insert(id);
        any = true;
      }
      if (!any && (inst.direction == JoinDirection::left || inst.direction == JoinDirection::full)) next.push_back(c);
    }
    if (inst.direction == JoinDirection::right || inst.direction == JoinDirection::full) {
      for (const auto& [id, _] : rows) {
        if (used.count(id)) continue;
        Combo d{std::vector<RowId>(n, kAbsent)};
        d.ids[i] = id;
        next.push_back(d);
      }
    }
    combos = std::move(next);
  }
  std::sort(combos.begin(), combos.end(), [](const Combo& a, const Combo& b) { return a.ids < b.ids; });
  return combos;
}

// --- filters -----------------------------------------------------------------

enum class T3 { f, u, t };

struct Column3 {
  std::size_t instance;
  std::size_t column;
  ColumnType type;
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string stem(const std::string& w) {
  for (std::string suffix : {"ing", "ed", "es", "s"}) {
    if (w.size() >= suffix.size() + 3 && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0)
      return w.substr(0, w.size() - suffix.size());
  }
  return w;
}

std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    unsigned char u = static_cast<unsigned char>(ch);
    if (u < 128 && std::isalnum(u)) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      out.push_back(stem(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(stem(cur));
  return out;
}

struct Leaf {
  std::vector<Column3> columns;
  Operator op;
  Value operand;
  std::optional<std::regex> re;
  std::vector<std::string> terms;
};

struct Node {
  Predicate::Kind kind;
  Leaf leaf;
  std::vector<Node> kids;
};

std::size_t instance_of(const Context& cx, const std::optional<std::string>& alias, std::size_t ctx) {
  if (!alias) return ctx;
  auto it = cx.aliases.find(*alias);
  if (it == cx.aliases.end()) fail(ErrorKind::bad_request, "unknown alias " + *alias);
  return it->second;
}

Value typed(ColumnType type, const std::string& text) {
  try {
    return parse_value(type, text);
  } catch (const Error&) {
    fail(ErrorKind::bad_request, "bad operand " + text);
  }
}

Node compile(const Context& cx, const Predicate& p, std::size_t ctx) {
  Node n;
  n.kind = p.kind;
  if (p.kind != Predicate::Kind::leaf) {
    for (const auto& c : p.children) n.kids.push_back(compile(cx, c, ctx));
    return n;
  }
  std::size_t inst = instance_of(cx, p.column.alias, ctx);
  const Table& t = *cx.instances[inst].table;
  if (p.column.wildcard) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      if (t.columns[i].type == ColumnType::text) n.leaf.columns.push_back({inst, i, ColumnType::text});
  } else {
    std::size_t c = col_index(t, p.column.column);
    n.leaf.columns.push_back({inst, c, t.columns[c].type});
  }
  n.leaf.op = p.op;
  if (p.op == Operator::null) return n;
  if (p.op == Operator::regexp || p.op == Operator::ciregexp) {
    auto flags = std::regex::ECMAScript;
    if (p.op == Operator::ciregexp) flags |= std::regex::icase;
    try {
      n.leaf.re.emplace(*p.operand, flags);
    } catch (const std::regex_error&) {
      fail(ErrorKind::bad_request, "bad regex");
    }
  } else if (p.op == Operator::ts) {
    n.leaf.terms = words(*p.operand);
  } else {
    n.leaf.operand = typed(n.leaf.columns.front().type, *p.operand);
  }
  return n;
}

T3 test_value(const Leaf& l, const Value& v) {
  if (l.op == Operator::null) return is_null(v) ? T3::t : T3::f;
  if (is_null(v)) return T3::u;
  if (l.op == Operator::regexp || l.op == Operator::ciregexp)
    return std::regex_search(format_value(v), *l.re) ? T3::t : T3::f;
  if (l.op == Operator::ts) {
    auto have = words(format_value(v));
    for (const auto& w : l.terms)
      if (std::find(have.begin(), have.end(), w) == have.end()) return T3::f;
    return T3::t;
  }
  int c = compare_values(v, l.operand);
  bool r = l.op == Operator::eq ? c == 0 : l.op == Operator::lt ? c < 0 : l.op == Operator::leq ? c <= 0
         : l.op == Operator::gt ? c > 0 : c >= 0;
  return r ? T3::t : T3::f;
}

const Value& cell(const Context& cx, const Combo& c, std::size_t inst, std::size_t col) {
  static const Value null;
  const Row* r = row_of(cx, c, inst);
  return r ? (*r)[col] : null;
}

T3 test(const Context& cx, const Node& n, const Combo& c) {
  switch (n.kind) {
    case Predicate::Kind::leaf: {
      bool unknown = false;
      for (const auto& col : n.leaf.columns) {
        T3 x = test_value(n.leaf, cell(cx, c, col.instance, col.column));
        if (x == T3::t) return T3::t;
        unknown = unknown || x == T3::u;
      }
      return unknown ? T3::u : T3::f;
    }
    case Predicate::Kind::negation: {
      T3 x = test(cx, n.kids[0], c);
      return x == T3::t ? T3::f : x == T3::f ? T3::t : T3::u;
    }
    case Predicate::Kind::conjunction: {
      bool unknown = false;
      for (const auto& k : n.kids) {
        T3 x = test(cx, k, c);
        if (x == T3::f) return T3::f;
        unknown = unknown || x == T3::u;
      }
      return unknown ? T3::u : T3::t;
    }
    case Predicate::Kind::disjunction: {
      bool unknown = false;
      for (const auto& k : n.kids) {
        T3 x = test(cx, k, c);
        if (x == T3::t) return T3::t;
        unknown = unknown || x == T3::u;
      }
      return unknown ? T3::u : T3::f;
    }
  }
  return T3::f;
}

// --- outputs -------------------------------------------------------------------

struct Out {
  std::string name;
  ColumnType type;
  std::optional<AggregateFn> fn;
  std::optional<Column3> src;
};

Out plan_out(const Context& cx, const OutputColumn& oc) {
  Out o;
  o.name = oc.name();
  o.fn = oc.fn;
  if (!oc.source.wildcard) {
    std::size_t inst = instance_of(cx, oc.source.alias, cx.context);
    const Table& t = *cx.instances[inst].table;
    std::size_t c = col_index(t, oc.source.column);
    o.src = Column3{inst, c, t.columns[c].type};
  }
  if (!oc.fn) {
    o.type = o.src->type;
  } else if (*oc.fn == AggregateFn::cnt || *oc.fn == AggregateFn::cnt_d) {
    o.type = ColumnType::int8;
  } else if (*oc.fn == AggregateFn::array) {
    o.type = ColumnType::json;
  } else {
    if (o.src->type == ColumnType::json) fail(ErrorKind::bad_request, "min/max over json");
    o.type = o.src->type;
  }
  return o;
}

Value reduce(const Context& cx, const Out& o, const std::vector<const Combo*>& members) {
  std::vector<Value> vals;
  for (const Combo* c : members) vals.push_back(o.src ? cell(cx, *c, o.src->instance, o.src->column) : Value{std::int64_t{1}});
  switch (*o.fn) {
    case AggregateFn::cnt:
      return static_cast<std::int64_t>(std::count_if(vals.begin(), vals.end(), [](const Value& v) { return !is_null(v); }));
    case AggregateFn::cnt_d: {
      std::vector<Value> seen;
      for (const auto& v : vals) {
        if (is_null(v)) continue;
        bool dup = false;
        for (const auto& s : seen) dup = dup || compare_values(s, v) == 0;
        if (!dup) seen.push_back(v);
      }
      return static_cast<std::int64_t>(seen.size());
    }
    case AggregateFn::min:
    case AggregateFn::max: {
      std::optional<Value> best;
      for (const auto& v : vals) {
        if (is_null(v)) continue;
        if (!best) {
          best = v;
          continue;
        }
        int c = compare_values(v, *best);
        if (*o.fn == AggregateFn::min ? c < 0 : c > 0) best = v;
      }
      return best.value_or(Value{});
    }
    case AggregateFn::array: {
      if (vals.empty()) return Value{};
      // insertion sort keeps the comparison logic visible
      std::vector<Value> sorted;
      for (const auto& v : vals) {
        auto pos = sorted.begin();
        while (pos != sorted.end() && compare_values(*pos, v) <= 0) ++pos;
        sorted.insert(pos, v);
      }
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& v : sorted) arr.push_back(value_to_json(v));
      return JsonText{arr.dump()};
    }
  }
  return Value{};
}

struct Item {
  Row out;
  Row hidden;
};

Outcome run(const DataRequest& req, const CatalogState& state) {
  Context cx{state, {}, {}, 0, {}};
  build_path(cx, req);
  std::vector<std::pair<std::size_t, Node>> filters;
  for (const auto& [ctx, p] : cx.filters) filters.emplace_back(ctx, compile(cx, *p, ctx));

  const Table& target = *cx.instances[cx.context].table;
  std::vector<Out> outs;
  std::size_t group_count = 0;
  if (req.mapping == Mapping::entity) {
    for (std::size_t i = 0; i < target.columns.size(); ++i)
      outs.push_back({target.columns[i].name, target.columns[i].type, std::nullopt, Column3{cx.context, i, target.columns[i].type}});
  } else {
    if (req.mapping == Mapping::attributegroup) {
      for (const auto& oc : req.projection->group_keys) outs.push_back(plan_out(cx, oc));
      group_count = outs.size();
    }
    for (const auto& oc : req.projection->columns) outs.push_back(plan_out(cx, oc));
  }

  // Sort keys: (output index or hidden column, descending).
  struct Key {
    std::optional<std::size_t> out;
    std::optional<Column3> hidden;
    bool desc = false;
  };
  std::vector<Key> keys;
  if (req.sort) {
    for (const auto& sk : *req.sort) {
      std::optional<std::size_t> idx;
      for (std::size_t i = 0; i < outs.size(); ++i)
        if (outs[i].name == sk.column) idx = i;
      if (!idx) fail(ErrorKind::bad_request, "sort on non-output " + sk.column);
      keys.push_back({idx, std::nullopt, sk.descending});
    }
  }
  const std::size_t client_keys = keys.size();
  std::vector<Value> after;
  if (req.after) {
    for (std::size_t i = 0; i < req.after->size(); ++i) {
      const auto& text = (*req.after)[i];
      after.push_back(text ? typed(outs[*keys[i].out].type, *text) : Value{});
    }
  }
  if (req.sort) {
    if (req.mapping == Mapping::attributegroup) {
      for (std::size_t g = 0; g < group_count; ++g) {
        bool present = false;
        for (const auto& k : keys) present = present || k.out == g;
        if (!present) keys.push_back({g, std::nullopt, false});
      }
    } else if (req.mapping != Mapping::aggregate && !target.keys.empty()) {
      std::set<std::string> sorted;
      for (const auto& k : keys) {
        const Out& o = outs[*k.out];
        if (!o.fn && o.src && o.src->instance == cx.context) sorted.insert(target.columns[o.src->column].name);
      }
      bool total = false;
      for (const auto& key : target.keys) {
        bool all = true;
        for (const auto& c : key.columns) all = all && sorted.count(c);
        total = total || all;
      }
      if (!total) {
        for (const auto& c : target.keys.front().columns) {
          if (sorted.count(c)) continue;
          std::size_t ci = col_index(target, c);
          if (req.mapping == Mapping::entity) {
            keys.push_back({ci, std::nullopt, false});
          } else {
            keys.push_back({std::nullopt, Column3{cx.context, ci, target.columns[ci].type}, false});
          }
        }
      }
    }
  }

  std::vector<Combo> kept;
  for (const auto& c : all_combos(cx)) {
    bool ok = true;
    for (const auto& [_, n] : filters) ok = ok && test(cx, n, c) == T3::t;
    if (ok) kept.push_back(c);
  }

  std::vector<Item> items;
  if (req.mapping == Mapping::entity) {
    std::set<RowId> ids;
    for (const auto& c : kept)
      if (c.ids[cx.context] != kAbsent) ids.insert(c.ids[cx.context]);
    for (RowId id : ids) items.push_back({state.table(target.table_name()).rows.at(id), {}});
  } else if (req.mapping == Mapping::attribute) {
    for (const auto& c : kept) {
      Item it;
      for (const auto& o : outs) it.out.push_back(cell(cx, c, o.src->instance, o.src->column));
      for (const auto& k : keys)
        if (k.hidden) it.hidden.push_back(cell(cx, c, k.hidden->instance, k.hidden->column));
      items.push_back(std::move(it));
    }
  } else {
    std::vector<std::pair<Row, std::vector<const Combo*>>> groups;
    if (req.mapping == Mapping::aggregate) groups.emplace_back(Row{}, std::vector<const Combo*>{});
    for (const auto& c : kept) {
      Row key;
      for (std::size_t g = 0; g < group_count; ++g) key.push_back(cell(cx, c, outs[g].src->instance, outs[g].src->column));
      auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
        for (std::size_t i = 0; i < key.size(); ++i)
          if (compare_values(g.first[i], key[i]) != 0) return false;
        return true;
      });
      if (it == groups.end()) {
        groups.emplace_back(key, std::vector<const Combo*>{&c});
      } else {
        it->second.push_back(&c);
      }
    }
    for (const auto& [key, members] : groups) {
      Item it{key, {}};
      for (std::size_t i = group_count; i < outs.size(); ++i) {
        const Out& o = outs[i];
        if (o.fn) {
          it.out.push_back(reduce(cx, o, members));
        } else {
          it.out.push_back(members.empty() ? Value{} : cell(cx, *members.front(), o.src->instance, o.src->column));
        }
      }
      items.push_back(std::move(it));
    }
    if (req.mapping == Mapping::attributegroup && !req.sort) {
      std::stable_sort(items.begin(), items.end(), [&](const Item& a, const Item& b) {
        for (std::size_t g = 0; g < group_count; ++g) {
          int c = compare_values(a.out[g], b.out[g]);
          if (c) return c < 0;
        }
        return false;
      });
    }
  }

  auto key_value = [&](const Item& it, std::size_t k) -> const Value& {
    if (keys[k].out) return it.out[*keys[k].out];
    std::size_t h = 0;
    for (std::size_t j = 0; j < k; ++j) h += keys[j].hidden ? 1 : 0;
    return it.hidden[h];
  };
  auto cmp = [&](const Item& a, const Item& b, std::size_t nkeys) {
    for (std::size_t k = 0; k < nkeys; ++k) {
      int c = compare_values(key_value(a, k), key_value(b, k));
      if (keys[k].desc) c = -c;
      if (c) return c;
    }
    return 0;
  };
  if (!keys.empty())
    std::stable_sort(items.begin(), items.end(), [&](const Item& a, const Item& b) { return cmp(a, b, keys.size()) < 0; });

  RowSet rs;
  for (const auto& o : outs) rs.columns.emplace_back(o.name, o.type);
  for (const auto& it : items) {
    if (req.after) {
      int c = 0;
      for (std::size_t k = 0; k < client_keys && c == 0; ++k) {
        c = compare_values(key_value(it, k), after[k]);
        if (keys[k].desc) c = -c;
      }
      if (c <= 0) continue;
    }
    if (req.limit && rs.rows.size() >= *req.limit) break;
    rs.rows.push_back(it.out);
  }
  return Outcome{rs, std::nullopt, {}};
}

}  // namespace

Outcome evaluate(const DataRequest& request, const CatalogState& state) {
  try {
    return run(request, state);
  } catch (const Fail& f) {
    return Outcome{std::nullopt, f.kind, f.message};
  }
}

std::vector<RowId> target_rows(const DataRequest& request, const CatalogState& state) {
  Context cx{state, {}, {}, 0, {}};
  build_path(cx, request);
  std::vector<std::pair<std::size_t, Node>> filters;
  for (const auto& [ctx, p] : cx.filters) filters.emplace_back(ctx, compile(cx, *p, ctx));
  std::set<RowId> ids;
  for (const auto& c : all_combos(cx)) {
    bool ok = true;
    for (const auto& [_, n] : filters) ok = ok && test(cx, n, c) == T3::t;
    if (ok && c.ids[cx.context] != kAbsent) ids.insert(c.ids[cx.context]);
  }
  return {ids.begin(), ids.end()};
}

bool same_multiset(const RowSet& a, const RowSet& b) {
  if (a.columns != b.columns || a.rows.size() != b.rows.size()) return false;
  auto less = [](const Row& x, const Row& y) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      int c = compare_values(x[i], y[i]);
      if (c) return c < 0;
    }
    return false;
  };
  auto x = a.rows, y = b.rows;
  std::sort(x.begin(), x.end(), less);
  std::sort(y.begin(), y.end(), less);
  return x == y;
}

std::string describe(const RowSet& rows, std::size_t max_rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < rows.columns.size(); ++i) os << (i ? "," : "") << rows.columns[i].first;
  os << " (" << rows.rows.size() << " rows)\n";
  for (std::size_t r = 0; r < rows.rows.size() && r < max_rows; ++r) {
    for (std::size_t i = 0; i < rows.rows[r].size(); ++i)
      os << (i ? "," : "") << (is_null(rows.rows[r][i]) ? "<null>" : format_value(rows.rows[r][i]));
    os << "\n";
  }
  return os.str();
}

}  // namespace oracle

#include "ermcat/executor.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "ermcat/errors.hpp"

namespace ermcat {

namespace {

constexpr RowId kMissing = std::numeric_limits<RowId>::max();

/// One joined combination. A null-extended instance has no row and sorts last.
struct Tuple {
  std::vector<const Row*> rows;
  std::vector<RowId> ids;
};

const Value& null_value() {
  static const Value v;
  return v;
}

const Value& slot_value(const Tuple& t, const ColumnSlot& s) {
  const Row* r = t.rows[s.instance];
  return r ? (*r)[s.column] : null_value();
}

Row project(const Row& row, const std::vector<std::size_t>& cols) {
  Row out;
  for (auto c : cols) out.push_back(row[c]);
  return out;
}

bool any_null(const Row& r) {
  return std::any_of(r.begin(), r.end(), [](const Value& v) { return is_null(v); });
}

std::vector<Tuple> join_all(const CatalogState& state, const JoinTree& jt) {
  const std::size_t width = jt.instances.size();
  std::vector<Tuple> tuples;
  for (const auto& [id, row] : state.table(jt.instances[0].table).rows) {
    Tuple t{std::vector<const Row*>(width, nullptr), std::vector<RowId>(width, kMissing)};
    t.rows[0] = &row;
    t.ids[0] = id;
    tuples.push_back(std::move(t));
  }
  for (std::size_t i = 1; i < width; ++i) {
    const JoinStep& step = *jt.instances[i].join;
    const TableData& data = state.table(jt.instances[i].table);
    std::vector<std::size_t> attach_cols, new_cols;
    for (const auto& [a, b] : step.on) {
      attach_cols.push_back(a);
      new_cols.push_back(b);
    }
    std::unordered_map<Row, std::vector<std::pair<RowId, const Row*>>, RowHash> index;
    for (const auto& [id, row] : data.rows) {
      Row k = project(row, new_cols);
      if (!any_null(k)) index[std::move(k)].emplace_back(id, &row);
    }
    const bool keep_left = step.kind == JoinKind::left || step.kind == JoinKind::full;
    const bool keep_right = step.kind == JoinKind::right || step.kind == JoinKind::full;
    std::unordered_set<RowId> matched;
    std::vector<Tuple> next;
    for (const auto& t : tuples) {
      const std::vector<std::pair<RowId, const Row*>>* hits = nullptr;
      if (const Row* a = t.rows[step.attach]) {
        Row k = project(*a, attach_cols);
        if (!any_null(k)) {
          auto it = index.find(k);
          if (it != index.end()) hits = &it->second;
        }
      }
      if (hits) {
        for (const auto& [id, row] : *hits) {
          Tuple n = t;
          n.rows[i] = row;
          n.ids[i] = id;
          next.push_back(std::move(n));
          if (keep_right) matched.insert(id);
        }
      } else if (keep_left) {
        next.push_back(t);
      }
    }
    if (keep_right) {
      for (const auto& [id, row] : data.rows) {
        if (matched.count(id)) continue;
        Tuple n{std::vector<const Row*>(width, nullptr), std::vector<RowId>(width, kMissing)};
        n.rows[i] = &row;
        n.ids[i] = id;
        next.push_back(std::move(n));
      }
    }
    tuples = std::move(next);
  }
  std::sort(tuples.begin(), tuples.end(), [](const Tuple& a, const Tuple& b) { return a.ids < b.ids; });
  return tuples;
}

enum class Truth { no, unknown, yes };

Truth compare_truth(Operator op, int c) {
  bool r = false;
  switch (op) {
    case Operator::eq: r = c == 0; break;
    case Operator::lt: r = c < 0; break;
    case Operator::leq: r = c <= 0; break;
    case Operator::gt: r = c > 0; break;
    case Operator::geq: r = c >= 0; break;
    default: break;
  }
  return r ? Truth::yes : Truth::no;
}

Truth eval_leaf(const TypedPredicate& p, const Value& v) {
  if (p.op == Operator::null) return is_null(v) ? Truth::yes : Truth::no;
  if (is_null(v)) return Truth::unknown;
  if (p.pattern) {
    const std::string* s = std::get_if<std::string>(&v);
    bool hit = s ? p.pattern->matches(*s) : p.pattern->matches(format_value(v));
    return hit ? Truth::yes : Truth::no;
  }
  return compare_truth(p.op, compare_values(v, p.operand));
}

Truth eval(const TypedPredicate& p, const Tuple& t) {
  switch (p.kind) {
    case Predicate::Kind::leaf: {
      Truth result = Truth::no;
      for (const auto& slot : p.columns) {
        Truth x = eval_leaf(p, slot_value(t, slot));
        if (x == Truth::yes) return x;
        if (x == Truth::unknown) result = x;
      }
      return result;
    }
    case Predicate::Kind::negation: {
      Truth x = eval(p.children.front(), t);
      return x == Truth::yes ? Truth::no : x == Truth::no ? Truth::yes : Truth::unknown;
    }
    case Predicate::Kind::conjunction: {
      Truth result = Truth::yes;
      for (const auto& c : p.children) {
        Truth x = eval(c, t);
        if (x == Truth::no) return x;
        if (x == Truth::unknown) result = x;
      }
      return result;
    }
    case Predicate::Kind::disjunction: {
      Truth result = Truth::no;
      for (const auto& c : p.children) {
        Truth x = eval(c, t);
        if (x == Truth::yes) return x;
        if (x == Truth::unknown) result = x;
      }
      return result;
    }
  }
  return Truth::no;
}

std::vector<Tuple> filtered_tuples(const CatalogState& state, const QueryPlan& plan) {
  std::vector<Tuple> tuples = join_all(state, plan.joins);
  if (!plan.predicate) return tuples;
  std::vector<Tuple> out;
  for (auto& t : tuples)
    if (eval(*plan.predicate, t) == Truth::yes) out.push_back(std::move(t));
  return out;
}

struct ValueLess {
  bool operator()(const Value& a, const Value& b) const { return compare_values(a, b) < 0; }
};

struct RowLess {
  bool operator()(const Row& a, const Row& b) const {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
      int c = compare_values(a[i], b[i]);
      if (c) return c < 0;
    }
    return a.size() < b.size();
  }
};

Value aggregate(AggregateFn fn, const std::optional<ColumnSlot>& slot, const std::vector<const Tuple*>& tuples) {
  switch (fn) {
    case AggregateFn::cnt: {
      if (!slot) return static_cast<std::int64_t>(tuples.size());
      std::int64_t n = 0;
      for (const Tuple* t : tuples) n += is_null(slot_value(*t, *slot)) ? 0 : 1;
      return n;
    }
    case AggregateFn::cnt_d: {
      std::set<Value, ValueLess> distinct;
      for (const Tuple* t : tuples) {
        const Value& v = slot_value(*t, *slot);
        if (!is_null(v)) distinct.insert(v);
      }
      return static_cast<std::int64_t>(distinct.size());
    }
    case AggregateFn::min:
    case AggregateFn::max: {
      Value best;
      for (const Tuple* t : tuples) {
        const Value& v = slot_value(*t, *slot);
        if (is_null(v)) continue;
        int c = is_null(best) ? -1 : compare_values(v, best);
        if (is_null(best) || (fn == AggregateFn::min ? c < 0 : c > 0)) best = v;
      }
      return best;
    }
    case AggregateFn::array: {
      if (tuples.empty()) return Value{};
      std::vector<Value> values;
      for (const Tuple* t : tuples) values.push_back(slot_value(*t, *slot));
      std::stable_sort(values.begin(), values.end(), ValueLess{});
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& v : values) arr.push_back(value_to_json(v));
      return JsonText{arr.dump()};
    }
  }
  return Value{};
}

struct Record {
  Row out;
  std::vector<Value> hidden;  // values of ColumnSlot sort keys, in ordering order
};

int directed(const Value& a, const Value& b, bool descending) {
  int c = compare_values(a, b);
  return descending ? -c : c;
}

}  // namespace

std::vector<RowId> select_target_rows(const CatalogState& state, const QueryPlan& plan) {
  std::set<RowId> ids;
  for (const auto& t : filtered_tuples(state, plan))
    if (t.rows[plan.target]) ids.insert(t.ids[plan.target]);
  return {ids.begin(), ids.end()};
}

RowSet execute(const CatalogState& state, const QueryPlan& plan, std::optional<std::uint64_t> row_cap) {
  RowSet result;
  for (const auto& o : plan.outputs) result.columns.emplace_back(o.name, o.type);

  std::vector<const ColumnSlot*> hidden_slots;
  for (const auto& s : plan.ordering)
    if (const auto* slot = std::get_if<ColumnSlot>(&s.key)) hidden_slots.push_back(slot);

  std::vector<Record> records;
  if (plan.mapping == Mapping::entity) {
    const TableData& data = state.table(plan.joins.instances[plan.target].table);
    for (RowId id : select_target_rows(state, plan)) records.push_back({data.rows.at(id), {}});
  } else if (plan.mapping == Mapping::attribute) {
    for (const auto& t : filtered_tuples(state, plan)) {
      Record r;
      for (const auto& o : plan.outputs) r.out.push_back(slot_value(t, *o.source));
      for (const auto* s : hidden_slots) r.hidden.push_back(slot_value(t, *s));
      records.push_back(std::move(r));
    }
  } else {
    std::vector<Tuple> tuples = filtered_tuples(state, plan);
    std::map<Row, std::vector<const Tuple*>, RowLess> groups;
    if (plan.mapping == Mapping::aggregate) {
      auto& all = groups[Row{}];
      for (const auto& t : tuples) all.push_back(&t);
    } else {
      for (const auto& t : tuples) {
        Row key;
        for (std::size_t g = 0; g < plan.group_key_count; ++g) key.push_back(slot_value(t, *plan.outputs[g].source));
        groups[std::move(key)].push_back(&t);
      }
    }
    for (const auto& [key, members] : groups) {
      Record r{key, {}};
      for (std::size_t i = key.size(); i < plan.outputs.size(); ++i) {
        const auto& o = plan.outputs[i];
        if (o.fn) {
          r.out.push_back(aggregate(*o.fn, o.source, members));
        } else {
          r.out.push_back(members.empty() ? Value{} : slot_value(*members.front(), *o.source));
        }
      }
      records.push_back(std::move(r));
    }
  }

  auto key_of = [&](const Record& r, std::size_t k, std::size_t& hidden_pos) -> const Value& {
    const auto& s = plan.ordering[k];
    if (const auto* idx = std::get_if<std::size_t>(&s.key)) return r.out[*idx];
    return r.hidden[hidden_pos++];
  };

  if (!plan.ordering.empty()) {
    std::stable_sort(records.begin(), records.end(), [&](const Record& a, const Record& b) {
      std::size_t ha = 0, hb = 0;
      for (std::size_t k = 0; k < plan.ordering.size(); ++k) {
        int c = directed(key_of(a, k, ha), key_of(b, k, hb), plan.ordering[k].descending);
        if (c) return c < 0;
      }
      return false;
    });
  }

  std::size_t first = 0;
  if (plan.after) {
    auto is_after = [&](const Record& r) {
      std::size_t h = 0;
      for (std::size_t k = 0; k < plan.client_sort_count; ++k) {
        int c = directed(key_of(r, k, h), (*plan.after)[k], plan.ordering[k].descending);
        if (c) return c > 0;
      }
      return false;
    };
    while (first < records.size() && !is_after(records[first])) ++first;
  }

  std::optional<std::uint64_t> limit = plan.limit;
  if (row_cap && (!limit || *row_cap < *limit)) limit = row_cap;
  std::size_t last = records.size();
  if (limit && first + *limit < last) last = first + static_cast<std::size_t>(*limit);
  for (std::size_t i = first; i < last; ++i) result.rows.push_back(std::move(records[i].out));
  return result;
}

MutationResult mutate(Txn& txn, const MutationPlan& plan, const RowSet& input) {
  const Table& t = *txn.model().find_table(plan.target);
  MutationResult result;

  auto input_col = [&](const InputBinding& b) -> std::size_t {
    for (std::size_t i = 0; i < input.columns.size(); ++i)
      if (input.columns[i].first == b.input) return i;
    throw Error(ErrorKind::bad_request, "payload is missing column " + b.input);
  };
  std::vector<std::size_t> corr_in, assign_in;
  for (const auto& b : plan.correlation) corr_in.push_back(input_col(b));
  for (const auto& b : plan.assignments)
    if (plan.kind != MutationKind::attribute_clear) assign_in.push_back(input_col(b));

  auto defaults = [&] {
    Row row;
    for (const auto& c : t.columns) row.push_back(c.default_value.value_or(Value{}));
    return row;
  };
  auto assign = [&](Row& row, const Row& in) {
    for (std::size_t i = 0; i < plan.assignments.size(); ++i) row[plan.assignments[i].column] = in[assign_in[i]];
  };
  auto key_of_input = [&](const Row& in, std::size_t r) {
    Row k = project(in, corr_in);
    if (any_null(k))
      throw StorageError(StorageErrorKind::not_null_violation, to_string(plan.target),
                         "null in correlation column", r);
    return k;
  };

  std::map<RowId, std::size_t> input_index;
  switch (plan.kind) {
    case MutationKind::entity_insert: {
      for (const auto& c : t.columns) result.rows.columns.emplace_back(c.name, c.type);
      for (std::size_t r = 0; r < input.rows.size(); ++r) {
        Row row = defaults();
        assign(row, input.rows[r]);
        input_index[txn.insert_row(plan.target, row)] = r;
        result.rows.rows.push_back(std::move(row));
      }
      result.affected = input.rows.size();
      break;
    }
    case MutationKind::entity_update: {
      for (const auto& c : t.columns) result.rows.columns.emplace_back(c.name, c.type);
      std::vector<std::size_t> key_cols;
      for (const auto& b : plan.correlation) key_cols.push_back(b.column);
      std::unordered_map<Row, RowId, RowHash> existing;
      for (const auto& [id, row] : txn.table(plan.target).rows) existing.emplace(project(row, key_cols), id);
      std::unordered_set<Row, RowHash> seen;
      for (std::size_t r = 0; r < input.rows.size(); ++r) {
        const Row& in = input.rows[r];
        Row k = key_of_input(in, r);
        if (!seen.insert(k).second)
          throw StorageError(StorageErrorKind::key_violation, to_string(plan.target),
                             "payload repeats a key value", r);
        auto it = existing.find(k);
        Row row;
        RowId id;
        if (it != existing.end()) {
          id = it->second;
          row = txn.table(plan.target).rows.at(id);
          assign(row, in);
          txn.update_row(plan.target, id, row);
        } else {
          row = defaults();
          assign(row, in);
          id = txn.insert_row(plan.target, row);
        }
        input_index[id] = r;
        result.rows.rows.push_back(std::move(row));
      }
      result.affected = input.rows.size();
      break;
    }
    case MutationKind::entity_delete: {
      auto ids = select_target_rows(txn.state(), *plan.selection);
      for (RowId id : ids) txn.delete_row(plan.target, id);
      result.affected = ids.size();
      break;
    }
    case MutationKind::attribute_clear: {
      auto ids = select_target_rows(txn.state(), *plan.selection);
      for (RowId id : ids) {
        Row row = txn.table(plan.target).rows.at(id);
        for (const auto& b : plan.assignments) row[b.column] = Value{};
        txn.update_row(plan.target, id, std::move(row));
      }
      result.affected = ids.size();
      break;
    }
    case MutationKind::group_update: {
      result.rows.columns = input.columns;
      std::vector<std::size_t> key_cols;
      for (const auto& b : plan.correlation) key_cols.push_back(b.column);
      std::unordered_map<Row, std::vector<RowId>, RowHash> groups;
      for (const auto& [id, row] : txn.table(plan.target).rows) {
        Row k = project(row, key_cols);
        if (!any_null(k)) groups[std::move(k)].push_back(id);
      }
      std::unordered_set<Row, RowHash> seen;
      for (std::size_t r = 0; r < input.rows.size(); ++r) {
        const Row& in = input.rows[r];
        Row k = key_of_input(in, r);
        if (!seen.insert(k).second)
          throw StorageError(StorageErrorKind::key_violation, to_string(plan.target),
                             "payload repeats a group key", r);
        auto it = groups.find(k);
        if (it == groups.end()) continue;
        for (RowId id : it->second) {
          Row row = txn.table(plan.target).rows.at(id);
          assign(row, in);
          txn.update_row(plan.target, id, std::move(row));
          input_index[id] = r;
        }
        result.affected += it->second.size();
        result.rows.rows.push_back(in);
      }
      break;
    }
  }
  check_table_constraints(txn.state(), plan.target, input_index);
  return result;
}

}  // namespace ermcat

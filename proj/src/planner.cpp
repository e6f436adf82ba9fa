#include "ermcat/planner.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ermcat/errors.hpp"

namespace ermcat {

namespace {

struct JoinCandidate {
  TableName table;
  JoinStep step;
  std::string label;
};

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ",") + n;
  return out;
}

std::string fkey_label(const TableName& from, const ForeignKey& fk) {
  return to_string(from) + "(" + join_names(fk.columns) + ")->" + to_string(fk.referenced) + "(" +
         join_names(fk.referenced_columns) + ")" + (fk.name ? " [" + *fk.name + "]" : "");
}

// Context table holds the foreign key; the joined table holds the key.
JoinCandidate outbound(const Table& ctx, const ForeignKey& fk, const Table& ref) {
  JoinCandidate c{ref.table_name(), {}, fkey_label(ctx.table_name(), fk)};
  for (std::size_t i = 0; i < fk.columns.size(); ++i) {
    c.step.on.emplace_back(*ctx.column_index(fk.columns[i]), *ref.column_index(fk.referenced_columns[i]));
    c.step.on_names.emplace_back(fk.columns[i], fk.referenced_columns[i]);
  }
  return c;
}

// Joined table holds the foreign key; the context table holds the key.
JoinCandidate inbound(const Table& ctx, const Table& referrer, const ForeignKey& fk) {
  JoinCandidate c{referrer.table_name(), {}, fkey_label(referrer.table_name(), fk)};
  for (std::size_t i = 0; i < fk.columns.size(); ++i) {
    c.step.on.emplace_back(*ctx.column_index(fk.referenced_columns[i]), *referrer.column_index(fk.columns[i]));
    c.step.on_names.emplace_back(fk.referenced_columns[i], fk.columns[i]);
  }
  return c;
}

JoinKind join_kind(JoinDirection d) {
  switch (d) {
    case JoinDirection::inner: return JoinKind::inner;
    case JoinDirection::left: return JoinKind::left;
    case JoinDirection::right: return JoinKind::right;
    case JoinDirection::full: return JoinKind::full;
  }
  return JoinKind::inner;
}

const Table& table_at(const JoinTree& jt, const ErmModel& model, std::size_t instance) {
  return *model.find_table(jt.instances[instance].table);
}

JoinCandidate choose(std::vector<JoinCandidate> candidates, const std::string& from, const std::string& to) {
  if (candidates.empty())
    throw Error(ErrorKind::bad_request, "no foreign key relates " + from + " and " + to);
  if (candidates.size() > 1) {
    std::string labels;
    for (const auto& c : candidates) labels += (labels.empty() ? "" : "; ") + c.label;
    throw Error(ErrorKind::bad_request, "ambiguous join between " + from + " and " + to +
                                            "; choose an endpoint among: " + labels);
  }
  return std::move(candidates.front());
}

JoinCandidate resolve_implicit(const Table& ctx, const Table& next) {
  std::vector<JoinCandidate> out;
  for (const auto& fk : ctx.foreign_keys)
    if (fk.referenced == next.table_name()) out.push_back(outbound(ctx, fk, next));
  for (const auto& fk : next.foreign_keys)
    if (fk.referenced == ctx.table_name()) out.push_back(inbound(ctx, next, fk));
  return choose(std::move(out), to_string(ctx.table_name()), to_string(next.table_name()));
}

JoinCandidate resolve_endpoint(const Table& ctx, const Endpoint& ep, const ErmModel& model) {
  for (const auto& c : ep.columns)
    if (!ctx.find_column(c))
      throw Error(ErrorKind::not_found, "column " + c + " not found in " + to_string(ctx.table_name()));
  std::vector<JoinCandidate> out;
  for (const auto& fk : ctx.foreign_keys)
    if (same_column_set(fk.columns, ep.columns)) out.push_back(outbound(ctx, fk, *model.find_table(fk.referenced)));
  for (const auto& [_, s] : model.schemas)
    for (const auto& [__, t] : s.tables)
      for (const auto& fk : t.foreign_keys)
        if (fk.referenced == ctx.table_name() && same_column_set(fk.referenced_columns, ep.columns))
          out.push_back(inbound(ctx, t, fk));
  return choose(std::move(out), to_string(ctx.table_name()), "(" + join_names(ep.columns) + ")");
}

std::size_t instance_for(const JoinTree& jt, const std::optional<std::string>& alias, std::size_t context) {
  if (!alias) return context;
  auto it = jt.aliases.find(*alias);
  if (it == jt.aliases.end()) throw Error(ErrorKind::bad_request, "unknown table alias " + *alias);
  return it->second;
}

ColumnSlot resolve_column(const JoinTree& jt, const ErmModel& model, const ColumnRef& ref, std::size_t context) {
  std::size_t inst = instance_for(jt, ref.alias, context);
  const Table& t = table_at(jt, model, inst);
  auto idx = t.column_index(ref.column);
  if (!idx) throw Error(ErrorKind::not_found, "column " + ref.column + " not found in " + to_string(t.table_name()));
  return {inst, *idx, t.columns[*idx].type};
}

TypedPredicate type_predicate(const Predicate& p, std::size_t context, const JoinTree& jt, const ErmModel& model) {
  TypedPredicate out;
  out.kind = p.kind;
  if (p.kind != Predicate::Kind::leaf) {
    for (const auto& c : p.children) out.children.push_back(type_predicate(c, context, jt, model));
    return out;
  }
  out.op = p.op;
  if (p.column.wildcard) {
    out.wildcard = true;
    std::size_t inst = instance_for(jt, p.column.alias, context);
    const Table& t = table_at(jt, model, inst);
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      if (t.columns[i].type == ColumnType::text) out.columns.push_back({inst, i, ColumnType::text});
  } else {
    out.columns.push_back(resolve_column(jt, model, p.column, context));
  }
  if (p.op == Operator::null) return out;
  if (!p.operand) throw Error(ErrorKind::bad_request, "operator " + std::string(to_string(p.op)) + " needs an operand");
  if (is_text_pattern(p.op)) {
    out.pattern = TextPattern::compile(p.op, *p.operand);
    out.operand = *p.operand;
  } else {
    out.operand = parse_value(out.columns.front().type, *p.operand);
  }
  return out;
}

PlanOutput plan_output(const OutputColumn& c, const JoinTree& jt, const ErmModel& model) {
  PlanOutput out;
  out.name = c.name();
  out.fn = c.fn;
  if (!c.source.wildcard) out.source = resolve_column(jt, model, c.source, jt.context);
  if (!c.fn) {
    out.type = out.source->type;
    return out;
  }
  switch (*c.fn) {
    case AggregateFn::cnt:
    case AggregateFn::cnt_d:
      out.type = ColumnType::int8;
      break;
    case AggregateFn::min:
    case AggregateFn::max:
      if (out.source->type == ColumnType::json)
        throw Error(ErrorKind::bad_request, std::string(to_string(*c.fn)) + " is not defined over json");
      out.type = out.source->type;
      break;
    case AggregateFn::array:
      out.type = ColumnType::json;
      break;
  }
  return out;
}

bool covers_key(const Table& t, const std::set<std::size_t>& cols) {
  for (const auto& k : t.keys) {
    bool all = std::all_of(k.columns.begin(), k.columns.end(),
                           [&](const std::string& c) { return cols.count(*t.column_index(c)) > 0; });
    if (all) return true;
  }
  return false;
}

void plan_ordering(const DataRequest& req, const ErmModel& model, QueryPlan& plan) {
  if (!req.sort) return;
  for (const auto& key : *req.sort) {
    auto it = std::find_if(plan.outputs.begin(), plan.outputs.end(),
                           [&](const PlanOutput& o) { return o.name == key.column; });
    if (it == plan.outputs.end())
      throw Error(ErrorKind::bad_request, "sort key " + key.column + " is not an output column");
    plan.ordering.push_back({static_cast<std::size_t>(it - plan.outputs.begin()), key.descending});
  }
  plan.client_sort_count = plan.ordering.size();

  if (req.after) {
    std::vector<Value> values;
    for (std::size_t i = 0; i < req.after->size(); ++i) {
      const auto& text = (*req.after)[i];
      ColumnType type = plan.outputs[std::get<std::size_t>(plan.ordering[i].key)].type;
      values.push_back(text ? parse_value(type, *text) : Value{});
    }
    plan.after = std::move(values);
  }

  if (plan.mapping == Mapping::attributegroup) {
    for (std::size_t g = 0; g < plan.group_key_count; ++g) {
      bool present = std::any_of(plan.ordering.begin(), plan.ordering.end(), [&](const PlanSort& s) {
        return std::get<std::size_t>(s.key) == g;
      });
      if (!present) plan.ordering.push_back({g, false});
    }
    return;
  }
  if (plan.mapping == Mapping::aggregate) return;

  const Table& target = table_at(plan.joins, model, plan.target);
  if (target.keys.empty()) return;
  std::set<std::size_t> sorted_cols;
  for (const auto& s : plan.ordering) {
    const auto& src = plan.outputs[std::get<std::size_t>(s.key)].source;
    if (src && !plan.outputs[std::get<std::size_t>(s.key)].fn && src->instance == plan.target)
      sorted_cols.insert(src->column);
  }
  if (covers_key(target, sorted_cols)) return;
  for (const auto& name : target.keys.front().columns) {
    std::size_t col = *target.column_index(name);
    if (sorted_cols.count(col)) continue;
    if (plan.mapping == Mapping::entity) {
      plan.ordering.push_back({col, false});
    } else {
      plan.ordering.push_back({ColumnSlot{plan.target, col, target.columns[col].type}, false});
    }
  }
}

// --- explain ---------------------------------------------------------------

std::string instance_label(const JoinTree& jt, std::size_t i) {
  return jt.instances[i].alias ? *jt.instances[i].alias : "t" + std::to_string(i + 1);
}

std::string slot_label(const JoinTree& jt, const ErmModel& model, const ColumnSlot& s) {
  return instance_label(jt, s.instance) + "." + table_at(jt, model, s.instance).columns[s.column].name;
}

std::string op_label(Operator op) {
  switch (op) {
    case Operator::eq: return "=";
    case Operator::lt: return "<";
    case Operator::leq: return "<=";
    case Operator::gt: return ">";
    case Operator::geq: return ">=";
    case Operator::null: return "is null";
    case Operator::regexp: return "~";
    case Operator::ciregexp: return "~*";
    case Operator::ts: return "@@";
  }
  return "?";
}

std::string predicate_label(const TypedPredicate& p, const JoinTree& jt, const ErmModel& model) {
  switch (p.kind) {
    case Predicate::Kind::leaf: {
      std::string lhs;
      if (p.wildcard) {
        lhs = "*{";
        for (std::size_t i = 0; i < p.columns.size(); ++i)
          lhs += (i ? "," : "") + slot_label(jt, model, p.columns[i]);
        lhs += "}";
      } else {
        lhs = slot_label(jt, model, p.columns.front());
      }
      if (p.op == Operator::null) return lhs + " is null";
      return lhs + " " + op_label(p.op) + " " + format_value(p.operand);
    }
    case Predicate::Kind::negation:
      return "not " + predicate_label(p.children.front(), jt, model);
    case Predicate::Kind::conjunction:
    case Predicate::Kind::disjunction: {
      std::string sep = p.kind == Predicate::Kind::conjunction ? " and " : " or ";
      std::string out = "(";
      for (std::size_t i = 0; i < p.children.size(); ++i)
        out += (i ? sep : "") + predicate_label(p.children[i], jt, model);
      return out + ")";
    }
  }
  return {};
}

const char* join_label(JoinKind k) {
  switch (k) {
    case JoinKind::inner: return "inner";
    case JoinKind::left: return "left_outer";
    case JoinKind::right: return "right_outer";
    case JoinKind::full: return "full_outer";
  }
  return "inner";
}

void explain_join(std::ostringstream& os, const JoinTree& jt, std::size_t upto, int depth) {
  std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const auto& inst = jt.instances[upto];
  if (!inst.join) {
    os << pad << "scan(" << (inst.alias ? *inst.alias + ":" : "") << inst.table.table << ")\n";
    return;
  }
  const auto& j = *inst.join;
  os << pad << join_label(j.kind) << "(" << jt.instances[j.attach].table.table << "," << inst.table.table << ",on ";
  for (std::size_t i = 0; i < j.on_names.size(); ++i)
    os << (i ? " and " : "") << j.on_names[i].first << "=" << j.on_names[i].second;
  os << ")\n";
  explain_join(os, jt, upto - 1, depth + 1);
  os << pad << "  scan(" << (inst.alias ? *inst.alias + ":" : "") << inst.table.table << ")\n";
}

}  // namespace

ResolvedPath resolve_path(const DataRequest& request, const ErmModel& model) {
  ResolvedPath rp;
  JoinTree& jt = rp.joins;
  std::size_t context = 0;
  for (std::size_t i = 0; i < request.path.size(); ++i) {
    const auto& el = request.path[i];
    if (const auto* inst = std::get_if<TableInstance>(&el)) {
      PlanInstance pi;
      pi.alias = inst->alias;
      if (i == 0) {
        const auto* ref = std::get_if<TableRef>(&inst->source);
        if (!ref) throw Error(ErrorKind::bad_request, "path must start with a table");
        pi.table = model.resolve_table(ref->schema, ref->table).table_name();
      } else {
        const Table& ctx = table_at(jt, model, context);
        JoinCandidate cand;
        if (const auto* ref = std::get_if<TableRef>(&inst->source)) {
          cand = resolve_implicit(ctx, model.resolve_table(ref->schema, ref->table));
        } else {
          const auto& ep = std::get<Endpoint>(inst->source);
          cand = resolve_endpoint(ctx, ep, model);
          cand.step.kind = join_kind(ep.direction);
        }
        cand.step.attach = context;
        pi.table = cand.table;
        pi.join = std::move(cand.step);
      }
      jt.instances.push_back(std::move(pi));
      context = jt.instances.size() - 1;
      if (inst->alias && !jt.aliases.emplace(*inst->alias, context).second)
        throw Error(ErrorKind::bad_request, "alias " + *inst->alias + " redefined");
    } else if (const auto* f = std::get_if<FilterElement>(&el)) {
      if (jt.instances.empty()) throw Error(ErrorKind::bad_request, "path must start with a table");
      rp.filters.emplace_back(context, &f->predicate);
    } else {
      const auto& reset = std::get<ContextReset>(el);
      auto it = jt.aliases.find(reset.alias);
      if (it == jt.aliases.end()) throw Error(ErrorKind::bad_request, "unknown table alias " + reset.alias);
      context = it->second;
    }
  }
  if (jt.instances.empty()) throw Error(ErrorKind::bad_request, "empty path");
  jt.context = context;
  return rp;
}

QueryPlan plan_retrieval(const DataRequest& request, const ErmModel& model) {
  ResolvedPath rp = resolve_path(request, model);
  QueryPlan plan;
  plan.mapping = request.mapping;
  plan.joins = std::move(rp.joins);
  plan.target = plan.joins.context;

  std::vector<TypedPredicate> filters;
  for (const auto& [ctx, pred] : rp.filters) filters.push_back(type_predicate(*pred, ctx, plan.joins, model));
  if (filters.size() == 1) {
    plan.predicate = std::move(filters.front());
  } else if (filters.size() > 1) {
    TypedPredicate all;
    all.kind = Predicate::Kind::conjunction;
    all.children = std::move(filters);
    plan.predicate = std::move(all);
  }

  switch (request.mapping) {
    case Mapping::entity: {
      if (request.projection) throw Error(ErrorKind::bad_request, "entity URLs take no projection");
      const Table& t = table_at(plan.joins, model, plan.target);
      for (std::size_t i = 0; i < t.columns.size(); ++i)
        plan.outputs.push_back({t.columns[i].name, t.columns[i].type, std::nullopt,
                                ColumnSlot{plan.target, i, t.columns[i].type}});
      break;
    }
    case Mapping::attribute:
    case Mapping::aggregate:
      for (const auto& c : request.projection->columns) plan.outputs.push_back(plan_output(c, plan.joins, model));
      break;
    case Mapping::attributegroup:
      for (const auto& c : request.projection->group_keys) plan.outputs.push_back(plan_output(c, plan.joins, model));
      plan.group_key_count = request.projection->group_keys.size();
      for (const auto& c : request.projection->columns) plan.outputs.push_back(plan_output(c, plan.joins, model));
      break;
  }
  plan_ordering(request, model, plan);
  plan.limit = request.limit;
  return plan;
}

MutationPlan plan_mutation(const DataRequest& request, const ErmModel& model, Method method,
                           const std::vector<std::string>& payload_columns) {
  const Mapping m = request.mapping;
  bool legal = (method == Method::post && m == Mapping::entity) ||
               (method == Method::put && (m == Mapping::entity || m == Mapping::attributegroup)) ||
               (method == Method::del && (m == Mapping::entity || m == Mapping::attribute));
  if (!legal)
    throw Error(ErrorKind::method_not_allowed,
                "method not supported on " + std::string(to_string(m)) + " resources");
  if (request.sort || request.after || request.limit)
    throw Error(ErrorKind::bad_request, "paging modifiers are not allowed on mutations");

  MutationPlan plan;
  if (method == Method::del) {
    DataRequest selection = request;
    selection.explain = false;
    plan.selection = plan_retrieval(selection, model);
    const JoinTree& jt = plan.selection->joins;
    plan.target = jt.instances[jt.context].table;
    if (m == Mapping::entity) {
      plan.kind = MutationKind::entity_delete;
      return plan;
    }
    plan.kind = MutationKind::attribute_clear;
    for (const auto& out : plan.selection->outputs) {
      if (!out.source || out.source->instance != jt.context)
        throw Error(ErrorKind::bad_request, "attribute delete may only clear columns of the target table");
      plan.assignments.push_back({out.name, out.source->column, out.source->type});
    }
    return plan;
  }

  if (request.path.size() != 1 || !std::holds_alternative<TableInstance>(request.path.front()))
    throw Error(ErrorKind::bad_request, "insert and update require a single-table path");
  const auto& inst = std::get<TableInstance>(request.path.front());
  const auto* ref = std::get_if<TableRef>(&inst.source);
  if (!ref) throw Error(ErrorKind::bad_request, "path must start with a table");
  const Table& target = model.resolve_table(ref->schema, ref->table);
  plan.target = target.table_name();

  auto bind = [&](const std::string& input, const std::string& column) -> InputBinding {
    auto idx = target.column_index(column);
    if (!idx)
      throw Error(ErrorKind::bad_request, "unknown column " + column + " for " + to_string(target.table_name()));
    return {input, *idx, target.columns[*idx].type};
  };

  if (m == Mapping::entity) {
    plan.kind = method == Method::post ? MutationKind::entity_insert : MutationKind::entity_update;
    for (const auto& c : payload_columns) plan.assignments.push_back(bind(c, c));
    if (plan.kind == MutationKind::entity_update) {
      std::set<std::string> present(payload_columns.begin(), payload_columns.end());
      const Key* key = nullptr;
      for (const auto& k : target.keys) {
        if (std::all_of(k.columns.begin(), k.columns.end(), [&](const auto& c) { return present.count(c) > 0; })) {
          key = &k;
          break;
        }
      }
      if (!key)
        throw Error(ErrorKind::bad_request, "payload lacks a complete key of " + to_string(target.table_name()) +
                                                " to correlate entities");
      for (const auto& c : key->columns) plan.correlation.push_back(bind(c, c));
    }
    return plan;
  }

  plan.kind = MutationKind::group_update;
  auto source_column = [&](const OutputColumn& c) {
    if (c.fn || c.source.wildcard) throw Error(ErrorKind::bad_request, "update projections cannot use aggregates");
    if (c.source.alias && c.source.alias != inst.alias)
      throw Error(ErrorKind::bad_request, "update projections may only name target columns");
    return bind(c.name(), c.source.column);
  };
  for (const auto& c : request.projection->group_keys) plan.correlation.push_back(source_column(c));
  for (const auto& c : request.projection->columns) plan.assignments.push_back(source_column(c));
  if (plan.assignments.empty()) throw Error(ErrorKind::bad_request, "attributegroup update needs target columns");
  std::set<std::string> expected;
  for (const auto& b : plan.correlation) expected.insert(b.input);
  for (const auto& b : plan.assignments) expected.insert(b.input);
  std::set<std::string> got(payload_columns.begin(), payload_columns.end());
  for (const auto& c : got)
    if (!expected.count(c)) throw Error(ErrorKind::bad_request, "unexpected payload column " + c);
  for (const auto& c : expected)
    if (!got.count(c)) throw Error(ErrorKind::bad_request, "payload is missing column " + c);
  return plan;
}

std::string explain(const QueryPlan& plan, const ErmModel& model) {
  std::ostringstream os;
  const JoinTree& jt = plan.joins;
  int depth = 0;
  auto line = [&](const std::string& text) {
    os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << text << "\n";
    ++depth;
  };
  std::string head = "project " + std::string(to_string(plan.mapping));
  if (plan.mapping == Mapping::entity) {
    head += " " + to_string(jt.instances[plan.target].table);
  } else {
    head += " [";
    for (std::size_t i = 0; i < plan.outputs.size(); ++i) {
      const auto& o = plan.outputs[i];
      head += (i ? ", " : "") + o.name + ":=";
      std::string src = o.source ? slot_label(jt, model, *o.source) : "*";
      head += o.fn ? std::string(to_string(*o.fn)) + "(" + src + ")" : src;
    }
    head += "]";
  }
  line(head);
  if (plan.limit) line("limit " + std::to_string(*plan.limit));
  if (plan.after) {
    std::string text = "after (";
    for (std::size_t i = 0; i < plan.after->size(); ++i)
      text += (i ? "," : "") + (is_null((*plan.after)[i]) ? std::string("null") : format_value((*plan.after)[i]));
    line(text + ")");
  }
  if (!plan.ordering.empty()) {
    std::string text = "sort ";
    for (std::size_t i = 0; i < plan.ordering.size(); ++i) {
      const auto& s = plan.ordering[i];
      text += i ? ", " : "";
      if (const auto* out = std::get_if<std::size_t>(&s.key)) {
        text += plan.outputs[*out].name;
      } else {
        text += slot_label(jt, model, std::get<ColumnSlot>(s.key));
      }
      text += s.descending ? " desc" : " asc";
    }
    line(text);
  }
  if (plan.mapping == Mapping::attributegroup) {
    std::string text = "group [";
    for (std::size_t i = 0; i < plan.group_key_count; ++i) text += (i ? ", " : "") + plan.outputs[i].name;
    line(text + "]");
  } else if (plan.mapping == Mapping::aggregate) {
    line("reduce");
  } else if (plan.mapping == Mapping::entity && jt.instances.size() > 1) {
    line("distinct " + instance_label(jt, plan.target));
  }
  if (plan.predicate) line("filter " + predicate_label(*plan.predicate, jt, model));
  explain_join(os, jt, jt.instances.size() - 1, depth);
  return os.str();
}

}  // namespace ermcat

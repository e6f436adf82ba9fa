#include "ermcat/url.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "ermcat/errors.hpp"
#include "ermcat/percent.hpp"

namespace ermcat {

namespace {

constexpr std::string_view kCatalogPrefix = "/ermrest/catalog/";

bool is_syntax(char c) noexcept {
  switch (c) {
    case ';': case '&': case '!': case '(': case ')': case '=': case ':': case ',':
    case '/': case '@': case '$': case '*': case '?': case '#':
      return true;
    default:
      return false;
  }
}

struct RawPiece {
  std::string_view text;
  std::size_t offset;  // into the full input
};

// Splits on `sep` at parenthesis depth zero.
std::vector<RawPiece> split_top(std::string_view s, char sep, std::size_t base) {
  std::vector<RawPiece> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == sep && depth == 0) {
      out.push_back({s.substr(start, i - start), base + start});
      start = i + 1;
    }
  }
  out.push_back({s.substr(start), base + start});
  return out;
}

[[noreturn]] void syntax_error(const std::string& what, std::optional<std::size_t> segment,
                               std::optional<std::size_t> offset = std::nullopt) {
  std::string msg = what;
  if (segment) msg += " in segment " + std::to_string(*segment);
  throw ParseError(msg, offset, segment);
}

bool plain_atom(std::string_view s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), is_syntax);
}

// Decodes a name atom, rejecting empties and stray syntax characters.
std::string name_atom(RawPiece p, std::optional<std::size_t> segment, const char* what) {
  if (!plain_atom(p.text)) syntax_error(std::string("malformed ") + what + " '" + std::string(p.text) + "'", segment,
                                        p.offset);
  return percent_decode(p.text, p.offset);
}

std::optional<Operator> operator_from_name(std::string_view name) {
  static constexpr std::pair<std::string_view, Operator> kOps[] = {
      {"lt", Operator::lt},         {"leq", Operator::leq},           {"gt", Operator::gt},
      {"geq", Operator::geq},       {"null", Operator::null},         {"regexp", Operator::regexp},
      {"ciregexp", Operator::ciregexp}, {"ts", Operator::ts},
  };
  for (auto [n, op] : kOps)
    if (n == name) return op;
  return std::nullopt;
}

std::optional<AggregateFn> aggregate_from_name(std::string_view name) {
  for (auto fn : {AggregateFn::cnt, AggregateFn::cnt_d, AggregateFn::min, AggregateFn::max, AggregateFn::array})
    if (to_string(fn) == name) return fn;
  return std::nullopt;
}

class FilterParser {
 public:
  FilterParser(std::string_view text, std::size_t base, std::optional<std::size_t> segment)
      : s_(text), base_(base), segment_(segment) {}

  Predicate parse() {
    if (s_.empty()) fail("empty filter");
    Predicate p = disjunction();
    if (pos_ != s_.size()) {
      if (s_[pos_] == ')') fail("unbalanced parentheses");
      fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    }
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) { syntax_error(what, segment_, base_ + pos_); }

  bool at(char c) const { return pos_ < s_.size() && s_[pos_] == c; }

  Predicate disjunction() {
    std::vector<Predicate> parts{conjunction()};
    while (at(';')) {
      ++pos_;
      parts.push_back(conjunction());
    }
    return parts.size() == 1 ? std::move(parts.front()) : Predicate::any_of(std::move(parts));
  }

  Predicate conjunction() {
    std::vector<Predicate> parts{unary()};
    while (at('&')) {
      ++pos_;
      parts.push_back(unary());
    }
    return parts.size() == 1 ? std::move(parts.front()) : Predicate::all_of(std::move(parts));
  }

  Predicate unary() {
    if (at('!')) {
      ++pos_;
      return Predicate::negate(unary());
    }
    if (at('(')) {
      ++pos_;
      Predicate inner = disjunction();
      if (!at(')')) fail("unbalanced parentheses");
      ++pos_;
      return inner;
    }
    return leaf();
  }

  RawPiece atom() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && !is_syntax(s_[pos_])) ++pos_;
    return {s_.substr(start, pos_ - start), base_ + start};
  }

  Predicate leaf() {
    ColumnRef col;
    if (at('*')) {
      ++pos_;
      col.wildcard = true;
    } else {
      RawPiece first = atom();
      if (at(':') && !(pos_ + 1 < s_.size() && s_[pos_ + 1] == ':')) {
        if (first.text.empty()) fail("empty alias qualifier");
        col.alias = percent_decode(first.text, first.offset);
        ++pos_;
        if (at('*')) {
          ++pos_;
          col.wildcard = true;
        } else {
          RawPiece second = atom();
          if (second.text.empty()) fail("operator without column");
          col.column = percent_decode(second.text, second.offset);
        }
      } else {
        if (first.text.empty()) fail("operator without column");
        col.column = percent_decode(first.text, first.offset);
      }
    }
    Operator op;
    if (at('=')) {
      ++pos_;
      op = Operator::eq;
    } else if (s_.substr(pos_, 2) == "::") {
      auto close = s_.find("::", pos_ + 2);
      if (close == std::string_view::npos) fail("dangling '::' operator token");
      auto name = s_.substr(pos_ + 2, close - pos_ - 2);
      auto parsed = operator_from_name(name);
      if (!parsed) fail("unknown operator '::" + std::string(name) + "::'");
      op = *parsed;
      pos_ = close + 2;
    } else {
      fail("expected an operator");
    }
    if (col.wildcard && !is_text_pattern(op)) fail("wildcard column requires a text-pattern operator");
    if (op == Operator::null) {
      if (pos_ < s_.size() && s_[pos_] != ';' && s_[pos_] != '&' && s_[pos_] != ')') fail("::null:: takes no operand");
      return Predicate::leaf(std::move(col), op);
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ';' && s_[pos_] != '&' && s_[pos_] != ')') ++pos_;
    auto raw = s_.substr(start, pos_ - start);
    return Predicate::leaf(std::move(col), op, percent_decode(raw, base_ + start));
  }

  std::string_view s_;
  std::size_t base_;
  std::optional<std::size_t> segment_;
  std::size_t pos_ = 0;
};

std::optional<Endpoint> try_endpoint(RawPiece p, std::optional<std::size_t> segment) {
  std::string_view s = p.text;
  Endpoint ep;
  std::size_t open = 0;
  if (s.rfind("left(", 0) == 0) {
    ep.direction = JoinDirection::left;
    open = 4;
  } else if (s.rfind("right(", 0) == 0) {
    ep.direction = JoinDirection::right;
    open = 5;
  } else if (s.rfind("full(", 0) == 0) {
    ep.direction = JoinDirection::full;
    open = 4;
  } else if (!s.empty() && s[0] == '(') {
    ep.direction = JoinDirection::inner;
  } else {
    return std::nullopt;
  }
  if (s.back() != ')') return std::nullopt;
  auto inner = s.substr(open + 1, s.size() - open - 2);
  auto parts = split_top(inner, ',', p.offset + open + 1);
  for (const auto& part : parts) {
    if (!plain_atom(part.text)) return std::nullopt;
  }
  for (const auto& part : parts) ep.columns.push_back(name_atom(part, segment, "endpoint column"));
  return ep;
}

TableRef parse_table_ref(RawPiece p, std::optional<std::size_t> segment) {
  auto parts = split_top(p.text, ':', p.offset);
  if (parts.size() == 1) return TableRef{std::nullopt, name_atom(parts[0], segment, "table name")};
  if (parts.size() == 2)
    return TableRef{name_atom(parts[0], segment, "schema name"), name_atom(parts[1], segment, "table name")};
  syntax_error("malformed table reference '" + std::string(p.text) + "'", segment, p.offset);
}

PathElement parse_path_segment(RawPiece p, std::size_t segment) {
  std::string_view s = p.text;
  if (s.empty()) syntax_error("empty path segment", segment, p.offset);
  if (s[0] == '$') return ContextReset{name_atom({s.substr(1), p.offset + 1}, segment, "context alias")};
  if (auto bind = s.find(":="); bind != std::string_view::npos) {
    TableInstance inst;
    inst.alias = name_atom({s.substr(0, bind), p.offset}, segment, "alias");
    RawPiece rest{s.substr(bind + 2), p.offset + bind + 2};
    if (auto ep = try_endpoint(rest, segment)) {
      inst.source = std::move(*ep);
    } else {
      inst.source = parse_table_ref(rest, segment);
    }
    return inst;
  }
  if (auto ep = try_endpoint(p, segment)) return TableInstance{std::nullopt, std::move(*ep)};
  bool filter_like = s[0] == '!' || s[0] == '(' || s[0] == '*' || s.find('=') != std::string_view::npos ||
                     s.find("::") != std::string_view::npos;
  if (filter_like) return FilterElement{FilterParser(s, p.offset, segment).parse()};
  return TableInstance{std::nullopt, parse_table_ref(p, segment)};
}

ColumnRef parse_column_source(RawPiece p, std::optional<std::size_t> segment) {
  ColumnRef ref;
  if (p.text == "*") {
    ref.wildcard = true;
    return ref;
  }
  auto parts = split_top(p.text, ':', p.offset);
  if (parts.size() == 2) {
    ref.alias = name_atom(parts[0], segment, "alias qualifier");
    if (parts[1].text == "*") {
      ref.wildcard = true;
    } else {
      ref.column = name_atom(parts[1], segment, "column name");
    }
    return ref;
  }
  if (parts.size() != 1) syntax_error("malformed column reference '" + std::string(p.text) + "'", segment, p.offset);
  ref.column = name_atom(parts[0], segment, "column name");
  return ref;
}

OutputColumn parse_output_column(RawPiece p, std::optional<std::size_t> segment) {
  OutputColumn out;
  std::string_view s = p.text;
  std::size_t base = p.offset;
  if (auto bind = s.find(":="); bind != std::string_view::npos) {
    out.out_alias = name_atom({s.substr(0, bind), base}, segment, "output alias");
    s = s.substr(bind + 2);
    base += bind + 2;
  }
  if (auto open = s.find('('); open != std::string_view::npos) {
    auto fn = aggregate_from_name(s.substr(0, open));
    if (!fn || s.back() != ')') syntax_error("unknown aggregate '" + std::string(s) + "'", segment, base);
    out.fn = fn;
    out.source = parse_column_source({s.substr(open + 1, s.size() - open - 2), base + open + 1}, segment);
    if (out.source.wildcard && *fn != AggregateFn::cnt) syntax_error("only cnt accepts *", segment, base);
    if (!out.out_alias) syntax_error("aggregate " + std::string(s) + " needs an output alias", segment, base);
    return out;
  }
  out.source = parse_column_source({s, base}, segment);
  if (out.source.wildcard) syntax_error("* is only allowed inside cnt()", segment, base);
  return out;
}

std::vector<OutputColumn> parse_output_list(RawPiece p, std::optional<std::size_t> segment) {
  std::vector<OutputColumn> out;
  if (p.text.empty()) return out;
  for (const auto& item : split_top(p.text, ',', p.offset)) {
    if (item.text.empty()) syntax_error("empty projection item", segment, item.offset);
    out.push_back(parse_output_column(item, segment));
  }
  return out;
}

Projection parse_projection(RawPiece p, Mapping mapping, std::size_t segment) {
  Projection proj;
  if (mapping == Mapping::attributegroup) {
    auto halves = split_top(p.text, ';', p.offset);
    if (halves.size() > 2) syntax_error("attributegroup projection has more than one ';'", segment, p.offset);
    proj.group_keys = parse_output_list(halves[0], segment);
    if (proj.group_keys.empty()) syntax_error("attributegroup needs at least one group key", segment, p.offset);
    for (const auto& k : proj.group_keys)
      if (k.fn) syntax_error("group keys cannot be aggregates", segment, p.offset);
    if (halves.size() == 2) proj.columns = parse_output_list(halves[1], segment);
    return proj;
  }
  if (split_top(p.text, ';', p.offset).size() > 1) syntax_error("';' only separates attributegroup keys", segment);
  proj.columns = parse_output_list(p, segment);
  if (proj.columns.empty()) syntax_error("projection is empty", segment, p.offset);
  if (mapping == Mapping::attribute)
    for (const auto& c : proj.columns)
      if (c.fn) syntax_error("aggregates are not allowed in attribute projections", segment, p.offset);
  return proj;
}

void parse_modifiers(RawPiece p, DataRequest& req) {
  std::string_view s = p.text;
  std::size_t pos = 0;
  auto body = [&](std::string_view name) -> RawPiece {
    std::string_view head = s.substr(pos);
    if (head.rfind(name, 0) != 0) syntax_error("unknown modifier at '" + std::string(head) + "'", std::nullopt, p.offset + pos);
    auto close = s.find(')', pos);
    if (close == std::string_view::npos) syntax_error("unterminated modifier", std::nullopt, p.offset + pos);
    RawPiece inner{s.substr(pos + name.size(), close - pos - name.size()), p.offset + pos + name.size()};
    pos = close + 1;
    return inner;
  };
  if (s.substr(pos).rfind("@sort(", 0) == 0) {
    RawPiece inner = body("@sort(");
    std::vector<SortKey> keys;
    for (const auto& item : split_top(inner.text, ',', inner.offset)) {
      SortKey key;
      std::string_view t = item.text;
      if (t.size() > 8 && t.substr(t.size() - 8) == "::desc::") {
        key.descending = true;
        t = t.substr(0, t.size() - 8);
      }
      key.column = name_atom({t, item.offset}, std::nullopt, "sort column");
      keys.push_back(std::move(key));
    }
    req.sort = std::move(keys);
  }
  if (s.substr(pos).rfind("@after(", 0) == 0) {
    RawPiece inner = body("@after(");
    std::vector<std::optional<std::string>> values;
    for (const auto& item : split_top(inner.text, ',', inner.offset)) {
      if (item.text == "::null::") {
        values.emplace_back(std::nullopt);
        continue;
      }
      if (std::any_of(item.text.begin(), item.text.end(), is_syntax))
        syntax_error("unencoded syntax character in @after value", std::nullopt, item.offset);
      values.emplace_back(percent_decode(item.text, item.offset));
    }
    req.after = std::move(values);
  }
  if (pos != s.size()) syntax_error("unsupported or misplaced modifier '" + std::string(s.substr(pos)) + "'",
                                    std::nullopt, p.offset + pos);
}

void parse_query(std::string_view q, DataRequest& req) {
  if (q.empty()) return;
  std::set<std::string> seen;
  for (const auto& item : split_top(q, '&', 0)) {
    auto eq = item.text.find('=');
    if (eq == std::string_view::npos) throw ParseError("query parameter without value: " + std::string(item.text));
    std::string key = percent_decode(item.text.substr(0, eq));
    std::string value = percent_decode(item.text.substr(eq + 1));
    if (!seen.insert(key).second) throw ParseError("duplicate query parameter " + key);
    if (key == "limit") {
      std::uint64_t n = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec != std::errc() || ptr != value.data() + value.size() || n == 0)
        throw ParseError("limit must be a positive integer");
      req.limit = n;
    } else if (key == "accept") {
      if (value == "json") {
        req.accept = Format::json;
      } else if (value == "csv") {
        req.accept = Format::csv;
      } else {
        throw ParseError("accept must be json or csv");
      }
    } else if (key == "explain") {
      if (value != "true" && value != "false") throw ParseError("explain must be true or false");
      req.explain = value == "true";
    } else {
      throw ParseError("unknown query parameter " + key);
    }
  }
}

void validate_request(const DataRequest& req) {
  std::set<std::string> aliases;
  for (std::size_t i = 0; i < req.path.size(); ++i) {
    const auto& el = req.path[i];
    if (const auto* inst = std::get_if<TableInstance>(&el)) {
      if (i == 0 && !std::holds_alternative<TableRef>(inst->source))
        syntax_error("path must start with a table", 0);
      if (inst->alias && !aliases.insert(*inst->alias).second)
        syntax_error("alias " + *inst->alias + " redefined", i);
    } else if (const auto* reset = std::get_if<ContextReset>(&el)) {
      if (!aliases.count(reset->alias)) syntax_error("context reset names unbound alias " + reset->alias, i);
    } else if (i == 0) {
      syntax_error("path must start with a table", 0);
    }
  }
  if (req.projection) {
    std::set<std::string> names;
    auto check = [&](const OutputColumn& c) {
      if (!names.insert(c.name()).second) syntax_error("duplicate output column " + c.name(), req.path.size());
    };
    for (const auto& c : req.projection->group_keys) check(c);
    for (const auto& c : req.projection->columns) check(c);
  }
  if (req.after && !req.sort) throw ParseError("@after requires @sort");
  if (req.after && req.after->size() != req.sort->size())
    throw ParseError("@after has " + std::to_string(req.after->size()) + " values but @sort has " +
                     std::to_string(req.sort->size()) + " keys");
}

// --- rendering -------------------------------------------------------------

std::string render_column_ref(const ColumnRef& c) {
  std::string out;
  if (c.alias) out += percent_encode(*c.alias) + ":";
  out += c.wildcard ? std::string("*") : percent_encode(c.column);
  return out;
}

std::string render_predicate(const Predicate& p, bool parenthesize_or) {
  switch (p.kind) {
    case Predicate::Kind::leaf: {
      std::string out = render_column_ref(p.column) + std::string(to_string(p.op));
      if (p.operand) out += percent_encode(*p.operand);
      return out;
    }
    case Predicate::Kind::negation: {
      const Predicate& c = p.children.front();
      bool simple = c.kind == Predicate::Kind::leaf || c.kind == Predicate::Kind::negation;
      return "!" + (simple ? render_predicate(c, true) : "(" + render_predicate(c, false) + ")");
    }
    case Predicate::Kind::conjunction: {
      std::string out;
      for (std::size_t i = 0; i < p.children.size(); ++i) {
        if (i) out += '&';
        out += render_predicate(p.children[i], true);
      }
      return out;
    }
    case Predicate::Kind::disjunction: {
      std::string out;
      for (std::size_t i = 0; i < p.children.size(); ++i) {
        if (i) out += ';';
        out += render_predicate(p.children[i], true);
      }
      return parenthesize_or ? "(" + out + ")" : out;
    }
  }
  return {};
}

std::string render_output(const OutputColumn& c) {
  std::string out;
  if (c.out_alias) out += percent_encode(*c.out_alias) + ":=";
  if (c.fn) return out + std::string(to_string(*c.fn)) + "(" + render_column_ref(c.source) + ")";
  return out + render_column_ref(c.source);
}

std::string render_outputs(const std::vector<OutputColumn>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += render_output(cols[i]);
  }
  return out;
}

struct ElementRenderer {
  std::string operator()(const TableInstance& t) const {
    std::string out;
    if (t.alias) out += percent_encode(*t.alias) + ":=";
    if (const auto* ref = std::get_if<TableRef>(&t.source)) {
      if (ref->schema) out += percent_encode(*ref->schema) + ":";
      return out + percent_encode(ref->table);
    }
    const auto& ep = std::get<Endpoint>(t.source);
    switch (ep.direction) {
      case JoinDirection::inner: break;
      case JoinDirection::left: out += "left"; break;
      case JoinDirection::right: out += "right"; break;
      case JoinDirection::full: out += "full"; break;
    }
    out += '(';
    for (std::size_t i = 0; i < ep.columns.size(); ++i) {
      if (i) out += ',';
      out += percent_encode(ep.columns[i]);
    }
    return out + ')';
  }
  std::string operator()(const FilterElement& f) const { return render_predicate(f.predicate, false); }
  std::string operator()(const ContextReset& r) const { return "$" + percent_encode(r.alias); }
};

std::vector<std::string> split_decoded(std::string_view raw, char sep, std::size_t base) {
  std::vector<std::string> out;
  for (const auto& p : split_top(raw, sep, base)) {
    if (p.text.empty()) throw ParseError("empty name in model path", p.offset, std::nullopt, ErrorKind::bad_request);
    out.push_back(percent_decode(p.text, p.offset));
  }
  return out;
}

}  // namespace

std::string_view to_string(Mapping m) noexcept {
  switch (m) {
    case Mapping::entity: return "entity";
    case Mapping::attribute: return "attribute";
    case Mapping::attributegroup: return "attributegroup";
    case Mapping::aggregate: return "aggregate";
  }
  return "entity";
}

std::string_view to_string(Operator op) noexcept {
  switch (op) {
    case Operator::eq: return "=";
    case Operator::lt: return "::lt::";
    case Operator::leq: return "::leq::";
    case Operator::gt: return "::gt::";
    case Operator::geq: return "::geq::";
    case Operator::null: return "::null::";
    case Operator::regexp: return "::regexp::";
    case Operator::ciregexp: return "::ciregexp::";
    case Operator::ts: return "::ts::";
  }
  return "=";
}

std::string_view to_string(AggregateFn fn) noexcept {
  switch (fn) {
    case AggregateFn::cnt: return "cnt";
    case AggregateFn::cnt_d: return "cnt_d";
    case AggregateFn::min: return "min";
    case AggregateFn::max: return "max";
    case AggregateFn::array: return "array";
  }
  return "cnt";
}

std::string_view to_string(Format f) noexcept { return f == Format::csv ? "csv" : "json"; }

bool is_text_pattern(Operator op) noexcept {
  return op == Operator::regexp || op == Operator::ciregexp || op == Operator::ts;
}

Predicate Predicate::leaf(ColumnRef column, Operator op, std::optional<std::string> operand) {
  Predicate p;
  p.kind = Kind::leaf;
  p.column = std::move(column);
  p.op = op;
  p.operand = std::move(operand);
  return p;
}

Predicate Predicate::negate(Predicate child) {
  Predicate p;
  p.kind = Kind::negation;
  p.children.push_back(std::move(child));
  return p;
}

namespace {
Predicate combine(Predicate::Kind kind, std::vector<Predicate> children) {
  Predicate p;
  p.kind = kind;
  for (auto& c : children) {
    if (c.kind == kind) {
      for (auto& g : c.children) p.children.push_back(std::move(g));
    } else {
      p.children.push_back(std::move(c));
    }
  }
  return p;
}
}  // namespace

Predicate Predicate::all_of(std::vector<Predicate> children) { return combine(Kind::conjunction, std::move(children)); }
Predicate Predicate::any_of(std::vector<Predicate> children) { return combine(Kind::disjunction, std::move(children)); }

std::string OutputColumn::name() const { return out_alias ? *out_alias : source.column; }

Predicate parse_filter(std::string_view segment_text) {
  return FilterParser(segment_text, 0, std::nullopt).parse();
}

DataRequest parse_data_url(std::string_view path_text, std::string_view query_text) {
  if (path_text.rfind(kCatalogPrefix, 0) != 0)
    throw ParseError("data URL must start with " + std::string(kCatalogPrefix), 0, std::nullopt, ErrorKind::not_found);
  std::size_t pos = kCatalogPrefix.size();
  auto slash = path_text.find('/', pos);
  if (slash == std::string_view::npos) throw ParseError("missing access mapping", pos, std::nullopt, ErrorKind::not_found);
  DataRequest req;
  req.catalog = percent_decode(path_text.substr(pos, slash - pos), pos);
  if (req.catalog.empty()) throw ParseError("empty catalog identifier", pos);
  pos = slash + 1;
  slash = path_text.find('/', pos);
  auto mapping = path_text.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos);
  if (mapping == "entity") {
    req.mapping = Mapping::entity;
  } else if (mapping == "attribute") {
    req.mapping = Mapping::attribute;
  } else if (mapping == "attributegroup") {
    req.mapping = Mapping::attributegroup;
  } else if (mapping == "aggregate") {
    req.mapping = Mapping::aggregate;
  } else {
    throw ParseError("unknown access mapping '" + std::string(mapping) + "'", pos, std::nullopt, ErrorKind::not_found);
  }
  if (slash == std::string_view::npos || slash + 1 >= path_text.size()) throw ParseError("empty data path", pos);
  pos = slash + 1;
  std::string_view rest = path_text.substr(pos);

  std::string_view body = rest;
  if (auto at = rest.find('@'); at != std::string_view::npos) {
    body = rest.substr(0, at);
    parse_modifiers({rest.substr(at), pos + at}, req);
  }
  auto segments = split_top(body, '/', pos);
  std::size_t path_count = segments.size();
  if (req.mapping != Mapping::entity) {
    if (segments.size() < 2) syntax_error("projection requires a table path before it", 0);
    --path_count;
  }
  for (std::size_t i = 0; i < path_count; ++i) req.path.push_back(parse_path_segment(segments[i], i));
  if (req.mapping != Mapping::entity) {
    const auto& last = segments.back();
    if (last.text.empty()) syntax_error("empty projection", path_count, last.offset);
    req.projection = parse_projection(last, req.mapping, path_count);
  }
  parse_query(query_text, req);
  validate_request(req);
  return req;
}

std::string render_filter(const Predicate& predicate) { return render_predicate(predicate, false); }

std::string render(const DataRequest& req) {
  std::string out(kCatalogPrefix);
  out += percent_encode(req.catalog);
  out += '/';
  out += to_string(req.mapping);
  for (const auto& el : req.path) out += "/" + std::visit(ElementRenderer{}, el);
  if (req.projection) {
    out += "/" + render_outputs(req.mapping == Mapping::attributegroup ? req.projection->group_keys
                                                                        : req.projection->columns);
    if (req.mapping == Mapping::attributegroup && !req.projection->columns.empty())
      out += ";" + render_outputs(req.projection->columns);
  }
  if (req.sort) {
    out += "@sort(";
    for (std::size_t i = 0; i < req.sort->size(); ++i) {
      if (i) out += ',';
      out += percent_encode((*req.sort)[i].column);
      if ((*req.sort)[i].descending) out += "::desc::";
    }
    out += ')';
  }
  if (req.after) {
    out += "@after(";
    for (std::size_t i = 0; i < req.after->size(); ++i) {
      if (i) out += ',';
      const auto& v = (*req.after)[i];
      out += v ? percent_encode(*v) : std::string("::null::");
    }
    out += ')';
  }
  std::vector<std::string> params;
  if (req.limit) params.push_back("limit=" + std::to_string(*req.limit));
  if (req.accept) params.push_back("accept=" + std::string(to_string(*req.accept)));
  if (req.explain) params.push_back("explain=true");
  for (std::size_t i = 0; i < params.size(); ++i) out += (i ? "&" : "?") + params[i];
  return out;
}

ModelPath parse_model_url(std::string_view path_text) {
  ModelPath mp;
  std::size_t base = 0;
  std::string_view s = path_text;
  if (s.rfind(kCatalogPrefix, 0) == 0) {
    auto slash = s.find('/', kCatalogPrefix.size());
    if (slash == std::string_view::npos) throw ParseError("missing /schema", s.size(), std::nullopt, ErrorKind::not_found);
    mp.catalog = percent_decode(s.substr(kCatalogPrefix.size(), slash - kCatalogPrefix.size()), kCatalogPrefix.size());
    base = slash;
    s = s.substr(slash);
  }
  if (s.size() > 1 && s.back() == '/') s.remove_suffix(1);
  if (s.empty() || s[0] != '/') throw ParseError("model path must start with /schema", base);
  auto segs = split_top(s.substr(1), '/', base + 1);
  std::size_t i = 0;
  auto more = [&] { return i < segs.size(); };
  auto word = [&](std::string_view w) { return more() && segs[i].text == w; };
  auto take_name = [&](const char* what) {
    if (!more() || segs[i].text.empty())
      throw ParseError(std::string("missing ") + what, base + s.size(), std::nullopt, ErrorKind::bad_request);
    const RawPiece& seg = segs[i++];
    return percent_decode(seg.text, seg.offset);
  };
  auto not_found = [&]() -> ParseError {
    return ParseError("unknown model resource '" + std::string(segs[i].text) + "'", segs[i].offset, std::nullopt,
                      ErrorKind::not_found);
  };
  using E = ModelPath::Element;
  if (!word("schema")) throw ParseError("model path must start with /schema", base, std::nullopt, ErrorKind::not_found);
  ++i;
  if (more()) {
    mp.element = E::schema;
    mp.schema = take_name("schema name");
    if (word("table")) {
      ++i;
      mp.element = E::table_container;
      if (more() && segs[i].text != "comment" && segs[i].text != "annotation") {
        mp.element = E::table;
        mp.table = take_name("table name");
        if (word("column")) {
          ++i;
          mp.element = E::column_container;
          if (more()) {
            mp.element = E::column;
            mp.column = take_name("column name");
          }
        } else if (word("key")) {
          ++i;
          mp.element = E::key_container;
          if (more()) {
            mp.element = E::key;
            mp.columns = split_decoded(segs[i].text, ',', segs[i].offset);
            ++i;
          }
        } else if (word("foreignkey")) {
          ++i;
          mp.element = E::fkey_container;
          if (more()) {
            mp.element = E::fkey;
            mp.columns = split_decoded(segs[i].text, ',', segs[i].offset);
            ++i;
            if (!word("reference")) throw ParseError("foreign key path needs /reference/", base + s.size());
            ++i;
            if (!more()) throw ParseError("missing referenced table", base + s.size());
            auto ref = split_decoded(segs[i].text, ':', segs[i].offset);
            if (ref.size() != 2) throw ParseError("referenced table must be schema:table", segs[i].offset);
            mp.referenced = {ref[0], ref[1]};
            ++i;
            if (!more()) throw ParseError("missing referenced columns", base + s.size());
            mp.referenced_columns = split_decoded(segs[i].text, ',', segs[i].offset);
            ++i;
          }
        }
      }
    }
  }
  if (word("comment")) {
    ++i;
    mp.sub = ModelPath::Sub::comment;
  } else if (word("annotation")) {
    ++i;
    mp.sub = ModelPath::Sub::annotations;
    if (more()) {
      mp.sub = ModelPath::Sub::annotation;
      mp.annotation_key = take_name("annotation key");
    }
  }
  if (more()) throw not_found();
  if (mp.sub != ModelPath::Sub::none &&
      (mp.element == E::model || mp.element == E::table_container || mp.element == E::column_container ||
       mp.element == E::key_container || mp.element == E::fkey_container))
    throw ParseError("containers have no comment or annotations", base, std::nullopt, ErrorKind::not_found);
  return mp;
}

}  // namespace ermcat

#include "ioa/behavior.hpp"

#include <algorithm>
#include <charconv>

#include "ioa/error.hpp"

namespace ioa::behavior {

namespace {

const std::string kTop = "⊤";

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::optional<long long> as_int(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string doc_of(const ParseSpec& parse, const std::string& ch) {
  return ch == kEpsilon ? kEpsilon : parse.parse(ch).doc;
}

// The guard verdict component of the extended partition key.
std::string cond_of(const ParseSpec& parse, const StateSplit& split,
                    const std::vector<Guard>& guards, const std::string& from,
                    const std::string& input) {
  if (input == kEpsilon) return kTop;
  const auto& pc = parse.parse(input);
  bool any_applies = false;
  for (const auto& g : guards) {
    if (g.doc && *g.doc != pc.doc) continue;
    any_applies = true;
    if (g.eval(split.rest(from), pc.params)) return g.name.empty() ? g.str() : g.name;
  }
  if (!any_applies) return kTop;
  throw Error(ErrorCode::kUncoveredTransition,
              "no guard holds for input " + input + " in state " + from);
}

const Guard* find_guard(const std::vector<Guard>& guards, const std::string& cond) {
  for (const auto& g : guards) {
    if ((g.name.empty() ? g.str() : g.name) == cond) return &g;
  }
  return nullptr;
}

}  // namespace

std::string Transition::str() const {
  return "(" + input + "," + output + "," + from + "," + to + ")";
}

// --- TransitionRelation ----------------------------------------------------

TransitionRelation::TransitionRelation(std::set<std::string> inputs,
                                       std::set<std::string> outputs,
                                       std::set<std::string> states,
                                       std::vector<Transition> transitions)
    : inputs_(std::move(inputs)),
      outputs_(std::move(outputs)),
      states_(std::move(states)),
      transitions_(std::move(transitions)) {
  if (inputs_.count(kEpsilon) || outputs_.count(kEpsilon) || states_.count(kEpsilon)) {
    throw Error(ErrorCode::kDomain, "ε is reserved and cannot be declared");
  }
  for (const auto& t : transitions_) {
    if (t.input != kEpsilon && !inputs_.count(t.input)) {
      throw Error(ErrorCode::kDomain, "transition " + t.str() + ": undeclared input");
    }
    if (t.output != kEpsilon && !outputs_.count(t.output)) {
      throw Error(ErrorCode::kDomain, "transition " + t.str() + ": undeclared output");
    }
    if (!states_.count(t.from) || !states_.count(t.to)) {
      throw Error(ErrorCode::kDomain, "transition " + t.str() + ": undeclared state");
    }
  }
  std::sort(transitions_.begin(), transitions_.end());
  transitions_.erase(std::unique(transitions_.begin(), transitions_.end()), transitions_.end());
}

bool TransitionRelation::deterministic() const {
  std::map<std::pair<std::string, std::string>, const Transition*> seen;
  for (const auto& t : transitions_) {
    if (t.input == kEpsilon) return false;
    auto [it, fresh] = seen.emplace(std::make_pair(t.input, t.from), &t);
    if (!fresh && (it->second->output != t.output || it->second->to != t.to)) return false;
  }
  return true;
}

Partition partition_relation(const TransitionRelation& delta, const PartitionKey& key) {
  Partition cells;
  for (const auto& t : delta.transitions()) cells[key(t)].push_back(t);
  return cells;
}

std::vector<TransitionFunction> deterministic_cells(const TransitionRelation& delta,
                                                    const PartitionKey& key) {
  if (!delta.deterministic()) {
    throw Error(ErrorCode::kNondeterministicInput,
                "relation is not deterministic; split exceptions first");
  }
  std::vector<TransitionFunction> out;
  for (const auto& [k, cell] : partition_relation(delta, key)) {
    TransitionFunction fn{k, {}};
    for (const auto& t : cell) {
      auto [it, fresh] = fn.table.emplace(std::make_pair(t.input, t.from),
                                          std::make_pair(t.output, t.to));
      if (!fresh && it->second != std::make_pair(t.output, t.to)) {
        throw Error(ErrorCode::kNondeterministicInput, "cell is not a function at " + t.str());
      }
    }
    out.push_back(std::move(fn));
  }
  return out;
}

// --- StateSplit ------------------------------------------------------------

void StateSplit::validate(const std::set<std::string>& states) const {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& s : states) {
    auto m = mode_of.find(s);
    auto r = rest_of.find(s);
    if (m == mode_of.end() || r == rest_of.end()) {
      throw Error(ErrorCode::kDomain, "state split does not cover state " + s);
    }
    if (!seen.emplace(m->second, r->second).second) {
      throw Error(ErrorCode::kDomain, "state split is not injective at (" + m->second + "," +
                                          r->second + ")");
    }
  }
}

const std::string& StateSplit::mode(const std::string& state) const {
  auto it = mode_of.find(state);
  if (it == mode_of.end()) throw Error(ErrorCode::kDomain, "no mode for state " + state);
  return it->second;
}

const std::string& StateSplit::rest(const std::string& state) const {
  auto it = rest_of.find(state);
  if (it == rest_of.end()) throw Error(ErrorCode::kDomain, "no rest for state " + state);
  return it->second;
}

// --- Documents -------------------------------------------------------------

std::string format_valuation(const Valuation& v) {
  std::string out;
  for (const auto& [k, val] : v) {
    if (!out.empty()) out += ',';
    out += k + "=" + val;
  }
  return out;
}

const Param* DocumentClass::param(std::string_view n) const {
  for (const auto& p : params) {
    if (p.name == n) return &p;
  }
  return nullptr;
}

std::vector<Valuation> DocumentClass::valuations() const { return valuations({}); }

std::vector<Valuation> DocumentClass::valuations(const Valuation& fixed) const {
  std::vector<Valuation> acc{{}};
  for (const auto& p : params) {
    std::vector<Valuation> next;
    auto f = fixed.find(p.name);
    for (const auto& prefix : acc) {
      for (const auto& v : p.domain) {
        if (f != fixed.end() && f->second != v) continue;
        auto row = prefix;
        row[p.name] = v;
        next.push_back(std::move(row));
      }
    }
    acc = std::move(next);
  }
  return acc;
}

bool operator==(const DocumentClass& a, const DocumentClass& b) {
  if (a.name != b.name || a.params.size() != b.params.size()) return false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    if (a.params[i].name != b.params[i].name || a.params[i].domain != b.params[i].domain) {
      return false;
    }
  }
  return true;
}

const DocumentClass* ParseSpec::doc(std::string_view name) const {
  for (const auto& c : classes) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const ParsedChar& ParseSpec::parse(const std::string& character) const {
  auto it = table.find(character);
  if (it == table.end()) throw Error(ErrorCode::kDomain, "parse is undefined on " + character);
  return it->second;
}

void ParseSpec::validate(const TransitionRelation& delta) const {
  std::set<std::string> names;
  for (const auto& c : classes) {
    if (!names.insert(c.name).second) {
      throw Error(ErrorCode::kDomain, "duplicate document class " + c.name);
    }
  }
  auto check = [&](const std::string& ch) {
    const auto& pc = parse(ch);
    const auto* cls = doc(pc.doc);
    if (!cls) throw Error(ErrorCode::kDomain, ch + " parses to undeclared class " + pc.doc);
    for (const auto& [k, v] : pc.params) {
      const auto* p = cls->param(k);
      if (!p || std::find(p->domain.begin(), p->domain.end(), v) == p->domain.end()) {
        throw Error(ErrorCode::kDomain, ch + ": parameter " + k + "=" + v + " outside domain");
      }
    }
  };
  for (const auto& i : delta.inputs()) check(i);
  for (const auto& o : delta.outputs()) check(o);
}

// --- Guards ----------------------------------------------------------------

bool Comparison::eval(const std::string& value) const {
  int c = 0;
  auto a = as_int(value);
  auto b = as_int(rhs);
  if (a && b) {
    c = *a < *b ? -1 : (*a > *b ? 1 : 0);
  } else {
    c = value.compare(rhs);
    c = c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  switch (op) {
    case Op::kEq: return c == 0;
    case Op::kNe: return c != 0;
    case Op::kLt: return c < 0;
    case Op::kLe: return c <= 0;
    case Op::kGt: return c > 0;
    case Op::kGe: return c >= 0;
  }
  return false;
}

std::string Comparison::str() const {
  static const char* names[] = {"==", "!=", "<", "<=", ">", ">="};
  return lhs + names[static_cast<int>(op)] + rhs;
}

bool Guard::reads_rest() const {
  if (table) return true;
  for (const auto& clause : clauses) {
    for (const auto& c : clause) {
      if (c.lhs == "rest") return true;
    }
  }
  return false;
}

bool Guard::eval(const std::optional<std::string>& rest, const Valuation& params) const {
  if (table) {
    auto it = table->find({rest.value_or(""), format_valuation(params)});
    if (it == table->end()) {
      throw Error(ErrorCode::kDomain, "guard " + name + " is undefined at rest=" +
                                          rest.value_or("") + " " + format_valuation(params));
    }
    return it->second;
  }
  for (const auto& clause : clauses) {
    bool all = true;
    for (const auto& c : clause) {
      if (c.lhs == "rest") {
        if (rest && !c.eval(*rest)) all = false;
      } else {
        auto it = params.find(c.lhs);
        if (it == params.end()) {
          throw Error(ErrorCode::kDomain, "guard " + str() + " reads missing parameter " + c.lhs);
        }
        if (!c.eval(it->second)) all = false;
      }
      if (!all) break;
    }
    if (all) return true;
  }
  return false;
}

std::string Guard::str() const {
  if (table) return name.empty() ? "table" : name;
  if (clauses.empty()) return "false";
  std::string out;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i) out += " | ";
    if (clauses[i].empty()) out += "true";
    for (std::size_t j = 0; j < clauses[i].size(); ++j) {
      if (j) out += " & ";
      out += clauses[i][j].str();
    }
  }
  return out;
}

Guard parse_guard(std::string_view text, std::string name) {
  Guard g;
  g.name = std::move(name);
  std::string body = trim(text);
  if (body == "false") return g;
  for (const auto& alt : split_on(body, '|')) {
    std::vector<Comparison> clause;
    for (const auto& atom : split_on(alt, '&')) {
      if (atom == "true") continue;
      static const std::pair<const char*, Comparison::Op> ops[] = {
          {"==", Comparison::Op::kEq}, {"!=", Comparison::Op::kNe},
          {"<=", Comparison::Op::kLe}, {">=", Comparison::Op::kGe},
          {"<", Comparison::Op::kLt},  {">", Comparison::Op::kGt},
          {"=", Comparison::Op::kEq}};
      bool matched = false;
      for (const auto& [tok, op] : ops) {
        auto pos = atom.find(tok);
        if (pos == std::string::npos) continue;
        Comparison c{trim(atom.substr(0, pos)), op, trim(atom.substr(pos + std::string(tok).size()))};
        if (c.lhs.empty() || c.rhs.empty()) break;
        clause.push_back(std::move(c));
        matched = true;
        break;
      }
      if (!matched) throw Error(ErrorCode::kDomain, "malformed guard condition '" + atom + "'");
    }
    g.clauses.push_back(std::move(clause));
  }
  return g;
}

// --- Roles -----------------------------------------------------------------

std::string GuardedTransition::str() const {
  std::string out = from + " --";
  bool any = false;
  if (in_doc) {
    out += "?" + (in_port.empty() ? "" : in_port + ".") + *in_doc;
    if (guard) out += "[" + guard->str() + "]";
    any = true;
  }
  if (out_doc) {
    if (any) out += "/";
    out += "!" + (out_port.empty() ? "" : out_port + ".") + *out_doc;
    if (!out_params.empty()) out += "(" + format_valuation(out_params) + ")";
  }
  return out + "--> " + to;
}

const DocumentClass* Role::doc(std::string_view n) const {
  for (const auto& d : docs) {
    if (d.name == n) return &d;
  }
  return nullptr;
}

bool Role::has_mode(std::string_view mode) const {
  return std::find(modes.begin(), modes.end(), mode) != modes.end();
}

const std::string& Role::own_mode(const std::string& mode) const {
  auto it = base_mode.find(mode);
  return it == base_mode.end() ? mode : it->second;
}

std::set<std::string> Role::in_docs() const {
  std::set<std::string> out;
  for (const auto& t : transitions) {
    if (t.in_doc) out.insert(*t.in_doc);
  }
  return out;
}

std::set<std::string> Role::out_docs() const {
  std::set<std::string> out;
  for (const auto& t : transitions) {
    if (t.out_doc) out.insert(*t.out_doc);
  }
  return out;
}

bool Role::accepts(const GuardedTransition& t, const Valuation& params) const {
  if (!t.guard) return true;
  if (t.guard->reads_rest() && !rest_domain.empty()) {
    return std::any_of(rest_domain.begin(), rest_domain.end(),
                       [&](const std::string& r) { return t.guard->eval(r, params); });
  }
  return t.guard->eval(std::nullopt, params);
}

void Role::validate() const {
  std::set<std::string> seen;
  for (const auto& m : modes) {
    if (m == kEpsilon) throw Error(ErrorCode::kDomain, "role " + name + ": ε is reserved");
    if (!seen.insert(m).second) throw Error(ErrorCode::kDomain, "role " + name + ": duplicate mode " + m);
  }
  if (!has_mode(initial)) {
    throw Error(ErrorCode::kDomain, "role " + name + ": initial mode " + initial + " undeclared");
  }
  std::set<std::string> doc_names;
  for (const auto& d : docs) {
    if (!doc_names.insert(d.name).second) {
      throw Error(ErrorCode::kDomain, "role " + name + ": duplicate document class " + d.name);
    }
  }
  for (const auto& t : transitions) {
    std::string where = "role " + name + ": transition " + t.str();
    if (!has_mode(t.from) || !has_mode(t.to)) throw Error(ErrorCode::kDomain, where + ": undeclared mode");
    if (t.in_doc && !doc(*t.in_doc)) throw Error(ErrorCode::kDomain, where + ": undeclared class " + *t.in_doc);
    if (t.out_doc && !doc(*t.out_doc)) throw Error(ErrorCode::kDomain, where + ": undeclared class " + *t.out_doc);
    if (t.guard && !t.guard->table) {
      for (const auto& clause : t.guard->clauses) {
        for (const auto& c : clause) {
          if (c.lhs == "rest") continue;
          if (!t.in_doc || !doc(*t.in_doc)->param(c.lhs)) {
            throw Error(ErrorCode::kDomain, where + ": guard reads unknown parameter " + c.lhs);
          }
        }
      }
    }
    if (t.out_doc) {
      const auto* d = doc(*t.out_doc);
      for (const auto& [k, v] : t.out_params) {
        const auto* p = d->param(k);
        if (!p || std::find(p->domain.begin(), p->domain.end(), v) == p->domain.end()) {
          throw Error(ErrorCode::kDomain, where + ": parameter " + k + "=" + v + " outside domain");
        }
      }
    }
  }
}

std::vector<std::string> Role::lint() const {
  std::vector<std::string> out;
  if (realizations.size() != transitions.size()) return out;
  for (std::size_t k = 0; k < transitions.size(); ++k) {
    if (realizations[k].empty()) {
      out.push_back("role " + name + ": transition " + transitions[k].str() +
                    " is never realized by a concrete transition");
    }
  }
  return out;
}

TransitionRelation relation_of(const Role& role) {
  std::set<std::string> inputs, outputs, states(role.modes.begin(), role.modes.end());
  std::vector<Transition> ts;
  for (const auto& t : role.transitions) {
    std::string i = kEpsilon, o = kEpsilon;
    if (t.in_doc) {
      i = (t.in_port.empty() ? "" : t.in_port + ".") + *t.in_doc;
      if (t.guard) i += "[" + t.guard->str() + "]";
      inputs.insert(i);
    }
    if (t.out_doc) {
      o = (t.out_port.empty() ? "" : t.out_port + ".") + *t.out_doc;
      if (!t.out_params.empty()) o += "(" + format_valuation(t.out_params) + ")";
      outputs.insert(o);
    }
    ts.push_back({i, o, t.from, t.to});
  }
  return TransitionRelation(std::move(inputs), std::move(outputs), std::move(states), std::move(ts));
}

PartitionKey extended_key(const ParseSpec& parse, const StateSplit& split,
                          const std::vector<Guard>& guards) {
  return [&parse, &split, &guards](const Transition& t) -> CellKey {
    return {doc_of(parse, t.input), doc_of(parse, t.output), split.mode(t.from),
            split.mode(t.to), cond_of(parse, split, guards, t.from, t.input)};
  };
}

Role make_extended_automaton(const TransitionRelation& delta, const ParseSpec& parse,
                             const StateSplit& split, const std::vector<Guard>& guards,
                             std::optional<std::string> initial_state, std::string name) {
  parse.validate(delta);
  split.validate(delta.states());
  auto cells = partition_relation(delta, extended_key(parse, split, guards));

  Role role;
  role.name = std::move(name);
  role.docs = parse.classes;
  std::set<std::string> modes, rests;
  for (const auto& s : delta.states()) {
    modes.insert(split.mode(s));
    rests.insert(split.rest(s));
  }
  role.modes.assign(modes.begin(), modes.end());
  role.rest_domain.assign(rests.begin(), rests.end());
  if (initial_state) {
    role.initial = split.mode(*initial_state);
  } else if (!role.modes.empty()) {
    role.initial = role.modes.front();
  }
  for (auto& [key, cell] : cells) {
    GuardedTransition gt;
    gt.from = key[2];
    gt.to = key[3];
    if (key[0] != kEpsilon) gt.in_doc = key[0];
    if (key[1] != kEpsilon) gt.out_doc = key[1];
    if (key[4] != kTop) {
      const Guard* g = find_guard(guards, key[4]);
      gt.guard = *g;
    }
    role.transitions.push_back(std::move(gt));
    role.realizations.push_back(std::move(cell));
  }
  return role;
}

std::set<Transition> expand_role(const Role& role, const TransitionRelation& alphabets,
                                 const ParseSpec& parse, const StateSplit& split,
                                 const std::vector<Guard>& guards) {
  std::vector<std::string> ins{kEpsilon}, outs{kEpsilon};
  ins.insert(ins.end(), alphabets.inputs().begin(), alphabets.inputs().end());
  outs.insert(outs.end(), alphabets.outputs().begin(), alphabets.outputs().end());
  std::set<Transition> out;
  for (const auto& gt : role.transitions) {
    std::string want_in = gt.in_doc.value_or(kEpsilon);
    std::string want_out = gt.out_doc.value_or(kEpsilon);
    std::string want_cond = gt.guard ? (gt.guard->name.empty() ? gt.guard->str() : gt.guard->name) : kTop;
    for (const auto& p : alphabets.states()) {
      if (split.mode(p) != gt.from) continue;
      for (const auto& i : ins) {
        if (doc_of(parse, i) != want_in) continue;
        std::string cond;
        try {
          cond = cond_of(parse, split, guards, p, i);
        } catch (const Error&) {
          continue;
        }
        if (cond != want_cond) continue;
        for (const auto& q : alphabets.states()) {
          if (split.mode(q) != gt.to) continue;
          for (const auto& o : outs) {
            if (doc_of(parse, o) == want_out) out.insert({i, o, p, q});
          }
        }
      }
    }
  }
  return out;
}

std::set<Transition> realized_relation(const Role& role) {
  std::set<Transition> out;
  for (const auto& cell : role.realizations) out.insert(cell.begin(), cell.end());
  return out;
}

std::pair<TransitionRelation, TransitionRelation> split_exceptions(
    const TransitionRelation& delta,
    const std::map<std::pair<std::string, std::string>, std::pair<std::string, std::string>>&
        designated) {
  std::map<std::pair<std::string, std::string>, std::vector<Transition>> groups;
  std::vector<Transition> det, exc;
  for (const auto& t : delta.transitions()) {
    if (t.input == kEpsilon) {
      exc.push_back(t);
    } else {
      groups[{t.input, t.from}].push_back(t);
    }
  }
  for (auto& [key, group] : groups) {
    std::size_t chosen = 0;
    if (auto d = designated.find(key); d != designated.end()) {
      for (std::size_t k = 0; k < group.size(); ++k) {
        if (group[k].output == d->second.first && group[k].to == d->second.second) chosen = k;
      }
    }
    for (std::size_t k = 0; k < group.size(); ++k) {
      (k == chosen ? det : exc).push_back(group[k]);
    }
  }
  return {TransitionRelation(delta.inputs(), delta.outputs(), delta.states(), std::move(det)),
          TransitionRelation(delta.inputs(), delta.outputs(), delta.states(), std::move(exc))};
}

// --- Gegos -----------------------------------------------------------------

GegoDef::GegoDef(TransitionRelation delta, StateSplit split,
                 std::map<std::string, std::set<std::string>> enabled_ops)
    : delta_(std::move(delta)), split_(std::move(split)), enabled_(std::move(enabled_ops)) {
  if (!delta_.deterministic()) {
    throw Error(ErrorCode::kNondeterministicInput, "a gego needs a deterministic relation");
  }
  split_.validate(delta_.states());
  for (const auto& t : delta_.transitions()) {
    fn_[{t.input, t.from}] = {t.output, t.to};
  }
}

bool GegoDef::enabled(const std::string& mode, const std::string& op) const {
  auto it = enabled_.find(mode);
  return it != enabled_.end() && it->second.count(op);
}

GegoCall gego_call(const GegoDef& g, const std::string& state, const std::string& op,
                   const std::string& arg) {
  if (!g.delta_.states().count(state)) {
    throw Error(ErrorCode::kDomain, "unknown gego state " + state);
  }
  const std::string& mode = g.split_.mode(state);
  if (!g.enabled(mode, op)) {
    throw Error(ErrorCode::kOperationNotEnabled, op + " in mode " + mode);
  }
  std::string ch = arg.empty() ? op : op + "(" + arg + ")";
  auto it = g.fn_.find({ch, state});
  if (it == g.fn_.end()) {
    throw Error(ErrorCode::kDomain, "no transition for " + ch + " in state " + state);
  }
  GegoCall call;
  call.state = it->second.second;
  call.result = it->second.first == kEpsilon ? "" : it->second.first;
  const std::string& new_mode = g.split_.mode(call.state);
  if (new_mode != mode) call.event = ModeEvent{mode, new_mode};
  return call;
}

Gego::Gego(GegoDef def, std::string initial) : def_(std::move(def)), state_(std::move(initial)) {
  if (!def_.relation().states().count(state_)) {
    throw Error(ErrorCode::kDomain, "unknown gego state " + state_);
  }
}

std::size_t Gego::subscribe(Subscriber s) {
  subscribers_.emplace(next_id_, std::move(s));
  return next_id_++;
}

void Gego::unsubscribe(std::size_t id) { subscribers_.erase(id); }

GegoCall Gego::call(const std::string& op, const std::string& arg) {
  GegoCall result = gego_call(def_, state_, op, arg);
  state_ = result.state;
  if (result.event) {
    // Subscribers get a copy, so they cannot alter what the caller sees.
    for (const auto& [id, s] : subscribers_) {
      ModeEvent copy = *result.event;
      s(copy);
    }
  }
  return result;
}

TransitionRelation project_role(const TransitionRelation& delta,
                                const std::set<std::string>& partner_inputs,
                                const std::set<std::string>& partner_outputs) {
  for (const auto& i : partner_inputs) {
    if (!delta.inputs().count(i)) throw Error(ErrorCode::kDomain, "partner input " + i + " not declared");
  }
  for (const auto& o : partner_outputs) {
    if (!delta.outputs().count(o)) throw Error(ErrorCode::kDomain, "partner output " + o + " not declared");
  }
  std::vector<Transition> ts;
  for (const auto& t : delta.transitions()) {
    ts.push_back({partner_inputs.count(t.input) ? t.input : kEpsilon,
                  partner_outputs.count(t.output) ? t.output : kEpsilon, t.from, t.to});
  }
  return TransitionRelation(partner_inputs, partner_outputs, delta.states(), std::move(ts));
}

}  // namespace ioa::behavior

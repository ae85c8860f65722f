#include "ioa/process.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "ioa/error.hpp"

namespace ioa::process {

using behavior::format_valuation;

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::pair<std::string, std::string> assignment(const std::string& s) {
  auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::kDomain, "malformed assignment " + s);
  return {s.substr(0, eq), s.substr(eq + 1)};
}

}  // namespace

bool Selector::matches(const GuardedTransition& t) const {
  if (value == "*") return true;
  if (value.empty()) return false;
  switch (value[0]) {
    case '?': return t.in_doc && *t.in_doc == value.substr(1);
    case '!': return t.out_doc && *t.out_doc == value.substr(1);
    case '@': return t.to == value.substr(1);
    default: return t.label == value;
  }
}

std::string Effect::str() const {
  switch (kind) {
    case Kind::kForce: return "force " + target.str();
    case Kind::kEnable: return "enable " + target.str();
    case Kind::kDisable: return "disable " + target.str();
    case Kind::kSet: return "set " + target.value;
  }
  return {};
}

const RoleInstance* ProcessDef::instance(const std::string& n) const {
  for (const auto& i : instances) {
    if (i.name == n) return &i;
  }
  return nullptr;
}

void check_rules(const ProcessDef& def) {
  auto known = [&](const Selector& s, const std::string& where) {
    if (!def.instance(s.instance)) {
      throw Error(ErrorCode::kDomain, "process " + def.name + ": " + where + " references unknown instance " +
                                          s.instance);
    }
  };
  for (const auto& s : def.initially_disabled) known(s, "disable");
  for (const auto& r : def.rules) {
    known(r.trigger, "rule " + r.name);
    for (const auto& e : r.effects) {
      if (e.kind == Effect::Kind::kSet) {
        assignment(e.target.value);
      } else {
        known(e.target, "rule " + r.name);
      }
    }
  }
  // Effects contributed per (trigger, condition), with the contributing rule.
  std::map<std::pair<Selector, std::string>, std::vector<std::pair<Effect, std::string>>> groups;
  for (const auto& r : def.rules) {
    auto& g = groups[{r.trigger, r.when ? r.when->str() : ""}];
    for (const auto& e : r.effects) g.push_back({e, r.name});
  }
  for (const auto& [key, effects] : groups) {
    for (std::size_t i = 0; i < effects.size(); ++i) {
      for (std::size_t j = i + 1; j < effects.size(); ++j) {
        const auto& [a, ra] = effects[i];
        const auto& [b, rb] = effects[j];
        using K = Effect::Kind;
        bool clash = false;
        if (a.kind == K::kSet && b.kind == K::kSet) {
          auto [va, xa] = assignment(a.target.value);
          auto [vb, xb] = assignment(b.target.value);
          clash = va == vb && xa != xb;
        } else if (a.kind != K::kSet && b.kind != K::kSet) {
          bool same = a.target == b.target;
          auto is = [&](K x, K y) { return (a.kind == x && b.kind == y) || (a.kind == y && b.kind == x); };
          clash = (same && (is(K::kEnable, K::kDisable) || is(K::kForce, K::kDisable))) ||
                  (a.kind == K::kForce && b.kind == K::kForce && a.target.instance == b.target.instance &&
                   a.target.value != b.target.value);
        }
        if (clash) {
          throw Error(ErrorCode::kRuleConflict, "rules " + ra + " and " + rb + " on " + key.first.str() + ": " +
                                                    a.str() + " contradicts " + b.str());
        }
      }
    }
  }
}

namespace {

struct JState {
  std::vector<std::string> modes;
  std::deque<Selector> obligations;
  std::set<Selector> disabled;
  Valuation vars;
};

class Engine {
 public:
  explicit Engine(const ProcessDef& def) : def_(def) {}

  std::size_t index(const std::string& instance) const {
    for (std::size_t i = 0; i < def_.instances.size(); ++i) {
      if (def_.instances[i].name == instance) return i;
    }
    throw Error(ErrorCode::kDomain, "unknown instance " + instance);
  }

  std::string name(const JState& s) const {
    std::string out;
    bool bare = def_.instances.size() == 1 && s.obligations.empty() && s.disabled.empty() && s.vars.empty();
    if (bare) return s.modes[0];
    for (std::size_t i = 0; i < s.modes.size(); ++i) {
      out += (i ? "," : "") + def_.instances[i].name + "=" + s.modes[i];
    }
    if (!s.obligations.empty()) {
      std::vector<std::string> parts;
      for (const auto& o : s.obligations) parts.push_back(o.str());
      out += "|force:" + join(parts, ",");
    }
    if (!s.disabled.empty()) {
      std::vector<std::string> parts;
      for (const auto& o : s.disabled) parts.push_back(o.str());
      out += "|off:" + join(parts, ",");
    }
    if (!s.vars.empty()) out += "|" + format_valuation(s.vars);
    return out;
  }

  bool can_fire(const JState& s, const Selector& sel) const {
    std::size_t i = index(sel.instance);
    const auto& role = def_.instances[i].role;
    return std::any_of(role.transitions.begin(), role.transitions.end(), [&](const GuardedTransition& t) {
      return t.from == s.modes[i] && sel.matches(t);
    });
  }

  void normalize(JState& s) const {
    while (!s.obligations.empty() && !can_fire(s, s.obligations.front())) s.obligations.pop_front();
  }

  bool disabled(const JState& s, std::size_t i, const GuardedTransition& t) const {
    for (const auto& d : s.disabled) {
      if (d.instance == def_.instances[i].name && d.matches(t)) return true;
    }
    return false;
  }

  // (instance, transition) pairs enabled in `s`, in canonical order.
  std::vector<std::pair<std::size_t, std::size_t>> enabled(const JState& s) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (!s.obligations.empty()) {
      const auto& head = s.obligations.front();
      std::size_t i = index(head.instance);
      const auto& ts = def_.instances[i].role.transitions;
      for (std::size_t k = 0; k < ts.size(); ++k) {
        if (ts[k].from == s.modes[i] && head.matches(ts[k])) out.push_back({i, k});
      }
      return out;
    }
    for (std::size_t i = 0; i < def_.instances.size(); ++i) {
      const auto& ts = def_.instances[i].role.transitions;
      for (std::size_t k = 0; k < ts.size(); ++k) {
        if (ts[k].from == s.modes[i] && !disabled(s, i, ts[k])) out.push_back({i, k});
      }
    }
    return out;
  }

  JState fire(const JState& s, std::size_t i, std::size_t k) const {
    const auto& t = def_.instances[i].role.transitions[k];
    JState n = s;
    n.modes[i] = t.to;
    if (!n.obligations.empty()) n.obligations.pop_front();
    const Valuation vars = s.vars;
    for (const auto& r : def_.rules) {
      if (r.trigger.instance != def_.instances[i].name || !r.trigger.matches(t)) continue;
      if (r.when && !r.when->eval(std::nullopt, vars)) continue;
      for (const auto& e : r.effects) {
        switch (e.kind) {
          case Effect::Kind::kForce: n.obligations.push_back(e.target); break;
          case Effect::Kind::kEnable: n.disabled.erase(e.target); break;
          case Effect::Kind::kDisable: n.disabled.insert(e.target); break;
          case Effect::Kind::kSet: {
            auto [var, val] = assignment(e.target.value);
            n.vars[var] = val;
            break;
          }
        }
      }
    }
    normalize(n);
    return n;
  }

 private:
  const ProcessDef& def_;
};

}  // namespace

Coordinated coordinate(const ProcessDef& def, std::size_t bound) {
  if (def.instances.empty()) throw Error(ErrorCode::kDomain, "process " + def.name + " has no role instances");
  std::set<std::string> names;
  for (const auto& i : def.instances) {
    if (!names.insert(i.name).second) {
      throw Error(ErrorCode::kDomain, "process " + def.name + ": duplicate instance " + i.name);
    }
    i.role.validate();
  }
  check_rules(def);

  Coordinated c;
  c.def = def;
  Engine eng(c.def);
  Role& joint = c.joint;
  joint.name = def.name;
  for (const auto& inst : def.instances) {
    for (const auto& d : inst.role.docs) {
      const auto* have = joint.doc(d.name);
      if (!have) {
        joint.docs.push_back(d);
      } else if (!(*have == d)) {
        throw Error(ErrorCode::kDomain, "process " + def.name + ": instances disagree on document class " + d.name);
      }
    }
    for (const auto& r : inst.role.rest_domain) {
      if (std::find(joint.rest_domain.begin(), joint.rest_domain.end(), r) == joint.rest_domain.end()) {
        joint.rest_domain.push_back(r);
      }
    }
  }

  JState init;
  for (const auto& inst : def.instances) init.modes.push_back(inst.role.initial);
  init.disabled.insert(def.initially_disabled.begin(), def.initially_disabled.end());
  init.vars = def.vars;

  std::vector<JState> states{init};
  std::unordered_map<std::string, std::size_t> seen{{eng.name(init), 0}};
  joint.modes.push_back(eng.name(init));
  joint.initial = joint.modes[0];
  c.modes_of[joint.initial] = init.modes;
  for (std::size_t cur = 0; cur < states.size(); ++cur) {
    for (auto [i, k] : eng.enabled(states[cur])) {
      JState next = eng.fire(states[cur], i, k);
      auto key = eng.name(next);
      if (!seen.count(key)) {
        if (states.size() >= bound) {
          throw Error(ErrorCode::kBoundExceeded,
                      "process " + def.name + " exceeds " + std::to_string(bound) + " joint states");
        }
        seen[key] = states.size();
        joint.modes.push_back(key);
        c.modes_of[key] = next.modes;
        states.push_back(next);
      }
      GuardedTransition t = def.instances[i].role.transitions[k];
      t.from = joint.modes[cur];
      t.to = key;
      t.in_port = t.in_doc ? def.instances[i].name : "";
      t.out_port = t.out_doc ? def.instances[i].name : "";
      joint.transitions.push_back(std::move(t));
      c.origin.push_back({i, k});
    }
  }
  return c;
}

namespace {

std::size_t instance_index(const Coordinated& c, const std::string& instance) {
  for (std::size_t i = 0; i < c.def.instances.size(); ++i) {
    if (c.def.instances[i].name == instance) return i;
  }
  throw Error(ErrorCode::kDomain, "process " + c.def.name + " has no instance " + instance);
}

}  // namespace

Role project(const Coordinated& c, const std::string& instance) {
  std::size_t i = instance_index(c, instance);
  const auto& inst = c.def.instances[i];
  Role r;
  r.name = inst.slot.empty() ? inst.role.name : inst.slot;
  r.modes = c.joint.modes;
  r.initial = c.joint.initial;
  r.docs = inst.role.docs;
  r.rest_domain = inst.role.rest_domain;
  for (const auto& m : r.modes) r.base_mode[m] = c.modes_of.at(m)[i];
  std::set<std::pair<std::string, std::string>> silent;
  for (std::size_t k = 0; k < c.joint.transitions.size(); ++k) {
    const auto& jt = c.joint.transitions[k];
    auto [who, own] = c.origin[k];
    if (who == i) {
      GuardedTransition t = inst.role.transitions[own];
      t.from = jt.from;
      t.to = jt.to;
      r.transitions.push_back(std::move(t));
    } else if (silent.insert({jt.from, jt.to}).second) {
      GuardedTransition t;
      t.from = jt.from;
      t.to = jt.to;
      r.transitions.push_back(std::move(t));
    }
  }
  return r;
}

Role recover_role(const Coordinated& c, const std::string& instance) {
  std::size_t i = instance_index(c, instance);
  Role r = c.def.instances[i].role;
  std::set<std::size_t> used;
  for (auto [who, own] : c.origin) {
    if (who == i) used.insert(own);
  }
  std::vector<GuardedTransition> ts;
  for (std::size_t k = 0; k < r.transitions.size(); ++k) {
    if (used.count(k)) ts.push_back(r.transitions[k]);
  }
  r.transitions = std::move(ts);
  return r;
}

bool PreservationVerdict::preserved() const {
  return (!original.complete || coordinated.complete) &&
         (!original.deadlocks.empty() || coordinated.deadlocks.empty()) &&
         (!original.livelocks.empty() || coordinated.livelocks.empty()) &&
         (!original.goal_reachable || coordinated.goal_reachable) && !coordinated.bound_hit;
}

std::string PreservationVerdict::str() const {
  std::ostringstream os;
  auto yn = [](bool b) { return b ? "true" : "false"; };
  auto pair = [&](const char* key, bool a, bool b) { os << key << " " << yn(a) << " -> " << yn(b) << "\n"; };
  os << "protocol " << protocol << " instance " << instance << "\n";
  pair("complete", original.complete, coordinated.complete);
  pair("deadlock_free", original.deadlocks.empty(), coordinated.deadlocks.empty());
  pair("livelock_free", original.livelocks.empty(), coordinated.livelocks.empty());
  pair("goal_reachable", original.goal_reachable, coordinated.goal_reachable);
  for (const auto& f : coordinated.unspecified) {
    os << "unspecified " << f.state << " :: " << f.detail << " :: " << join(f.trace, "; ") << "\n";
  }
  for (const auto& f : coordinated.deadlocks) os << "deadlock " << f.state << " :: " << join(f.trace, "; ") << "\n";
  for (const auto& f : coordinated.livelocks) {
    os << "livelock " << f.state << " :: " << f.detail << " :: " << join(f.trace, "; ") << "\n";
  }
  os << "substitutable " << yn(substitution.holds);
  if (!substitution.holds) os << " :: " << substitution.reason << " :: " << join(substitution.trace, "; ");
  os << "\npreserved " << yn(preserved()) << "\n";
  return os.str();
}

bool CoordinationReport::ok() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const PreservationVerdict& v) { return v.preserved(); });
}

std::string CoordinationReport::str() const {
  std::string out = "process " + process + "\n";
  for (const auto& v : verdicts) out += v.str();
  out += std::string("result ") + (ok() ? "ok" : "fail") + "\n";
  return out;
}

CoordinationReport verify_coordination(const Coordinated& c, const std::vector<protocol::Protocol>& protocols,
                                       std::size_t bound) {
  CoordinationReport rep;
  rep.process = c.def.name;
  for (const auto& inst : c.def.instances) {
    if (inst.protocol.empty()) {
      throw Error(ErrorCode::kProtocolError, "process " + c.def.name + ": instance " + inst.name + " is unbound");
    }
    auto p = std::find_if(protocols.begin(), protocols.end(),
                          [&](const protocol::Protocol& x) { return x.name == inst.protocol; });
    if (p == protocols.end()) continue;
    auto slot = std::find_if(p->roles.begin(), p->roles.end(), [&](const Role& r) { return r.name == inst.slot; });
    if (slot == p->roles.end()) {
      throw Error(ErrorCode::kProtocolError, "protocol " + p->name + " has no role " + inst.slot);
    }
    PreservationVerdict v;
    v.protocol = p->name;
    v.instance = inst.name;
    v.original = protocol::verify(*p, bound);
    auto projected = project(c, inst.name);
    auto q = *p;
    q.roles[slot - p->roles.begin()] = projected;
    v.coordinated = protocol::verify(q, bound);
    v.substitution = protocol::check_substitutable(projected, *slot, bound);
    rep.verdicts.push_back(std::move(v));
  }
  return rep;
}

// --- Layering ----------------------------------------------------------------

std::string to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::kApiCall: return "api_call";
    case EdgeKind::kEventSubscription: return "event_subscription";
    case EdgeKind::kProtocolBinding: return "protocol_binding";
  }
  return {};
}

std::string LayerReport::str() const {
  std::ostringstream os;
  if (!acyclic) {
    os << "cycle " << join(cycle, " -> ") << "\n";
  } else {
    std::vector<std::pair<std::size_t, std::string>> order;
    for (const auto& [n, l] : layers) order.push_back({l, n});
    std::sort(order.begin(), order.end());
    for (const auto& [l, n] : order) os << "layer " << n << " " << l << "\n";
    for (const auto& v : violations) os << "violation " << v << "\n";
  }
  os << "result " << (ok() ? "ok" : "fail") << "\n";
  return os.str();
}

LayerReport check_layering(const ComponentGraph& g) {
  std::set<std::string> nodes(g.nodes.begin(), g.nodes.end());
  std::map<std::string, std::set<std::string>> calls;
  for (const auto& e : g.edges) {
    nodes.insert(e.from);
    nodes.insert(e.to);
    if (e.kind == EdgeKind::kApiCall) calls[e.from].insert(e.to);
  }
  LayerReport rep;
  // 0 unvisited, 1 on the stack, 2 done
  std::map<std::string, int> color;
  std::vector<std::string> stack;
  std::function<bool(const std::string&)> dfs = [&](const std::string& n) {
    color[n] = 1;
    stack.push_back(n);
    for (const auto& m : calls[n]) {
      if (color[m] == 1) {
        auto at = std::find(stack.begin(), stack.end(), m);
        rep.cycle.assign(at, stack.end());
        rep.cycle.push_back(m);
        return true;
      }
      if (color[m] == 0 && dfs(m)) return true;
    }
    stack.pop_back();
    color[n] = 2;
    rep.layers[n] = 0;
    for (const auto& m : calls[n]) rep.layers[n] = std::max(rep.layers[n], rep.layers[m] + 1);
    return false;
  };
  for (const auto& n : nodes) {
    if (color[n] == 0 && dfs(n)) {
      rep.acyclic = false;
      rep.layers.clear();
      return rep;
    }
  }
  for (const auto& e : g.edges) {
    if (e.kind != EdgeKind::kEventSubscription) continue;
    auto lf = rep.layers[e.from], lt = rep.layers[e.to];
    if (lf >= lt) {
      rep.violations.push_back(e.from + " -> " + e.to + " (event_subscription, layer " + std::to_string(lf) +
                               " -> " + std::to_string(lt) + ")");
    }
  }
  return rep;
}

}  // namespace ioa::process

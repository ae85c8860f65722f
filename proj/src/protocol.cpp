#include "ioa/protocol.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ioa/error.hpp"

namespace ioa::protocol {

using behavior::DocumentClass;
using behavior::format_valuation;
using behavior::GuardedTransition;
using behavior::kEpsilon;

std::string Message::str() const {
  if (params.empty()) return doc;
  return doc + "(" + format_valuation(params) + ")";
}

namespace {

bool port_matches(const std::string& port, const std::string& local, const std::string& remote) {
  return port.empty() || port == local || port == remote;
}

std::string endpoint(const std::string& agent, const std::string& port) {
  return port.empty() || port == agent ? agent : agent + "." + port;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

}  // namespace

// --- Ensemble ---------------------------------------------------------------

Ensemble::Ensemble(std::vector<Agent> agents, std::vector<Link> links,
                   std::vector<GoalPattern> goals, bool drop_unbound)
    : agents_(std::move(agents)), goals_(std::move(goals)) {
  std::set<std::string> names;
  for (const auto& a : agents_) {
    if (!names.insert(a.name).second) {
      throw Error(ErrorCode::kProtocolError, "duplicate agent " + a.name);
    }
    a.role.validate();
  }
  std::map<std::tuple<std::size_t, std::string, std::size_t, std::string>, std::size_t> index;
  std::vector<std::size_t> link_buffer;
  for (const auto& l : links) {
    if (l.from_agent >= agents_.size() || l.to_agent >= agents_.size()) {
      throw Error(ErrorCode::kProtocolError, "link for " + l.doc + " references a missing agent");
    }
    auto key = std::make_tuple(l.from_agent, l.from_port, l.to_agent, l.to_port);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, buffers_.size()).first;
      buffers_.push_back({l.from_agent, l.from_port, l.to_agent, l.to_port, l.capacity,
                          endpoint(agents_[l.from_agent].name, l.from_port) + "->" +
                              endpoint(agents_[l.to_agent].name, l.to_port)});
    }
    auto& b = buffers_[it->second];
    b.capacity = std::max(b.capacity, l.capacity);
    link_buffer.push_back(it->second);
  }
  for (const auto& b : buffers_) {
    if (b.capacity == 0) throw Error(ErrorCode::kProtocolError, "buffer " + b.name + " has capacity 0");
  }
  incoming_.resize(agents_.size());
  for (std::size_t b = 0; b < buffers_.size(); ++b) incoming_[buffers_[b].to_agent].push_back(b);

  for (std::size_t a = 0; a < agents_.size(); ++a) {
    const auto& role = agents_[a].role;
    for (std::size_t k = 0; k < role.transitions.size(); ++k) {
      const auto& t = role.transitions[k];
      if (!t.out_doc) continue;
      std::set<std::size_t> found;
      for (std::size_t li = 0; li < links.size(); ++li) {
        const auto& l = links[li];
        if (l.from_agent != a || l.doc != *t.out_doc) continue;
        if (!port_matches(t.out_port, l.from_port, agents_[l.to_agent].name)) continue;
        found.insert(link_buffer[li]);
      }
      std::string where = agents_[a].name + ": " + t.str();
      if (found.size() > 1) {
        throw Error(ErrorCode::kProtocolError, where + ": emission matches several channels");
      }
      if (found.empty()) {
        if (!drop_unbound) throw Error(ErrorCode::kProtocolError, where + ": no channel carries " + *t.out_doc);
        unbound_.push_back(where);
        continue;
      }
      send_buffer_[{a, k}] = *found.begin();
    }
  }
  for (const auto& g : goals_) {
    for (const auto& [agent, mode] : g) {
      auto ix = agent_index(agent);
      if (!ix) throw Error(ErrorCode::kProtocolError, "goal references unknown role " + agent);
      const auto& role = agents_[*ix].role;
      bool known = role.has_mode(mode);
      for (const auto& [joint, own] : role.base_mode) known = known || own == mode;
      if (!known) throw Error(ErrorCode::kProtocolError, "goal references unknown mode " + agent + "." + mode);
    }
  }
}

std::optional<std::size_t> Ensemble::agent_index(const std::string& name) const {
  for (std::size_t a = 0; a < agents_.size(); ++a) {
    if (agents_[a].name == name) return a;
  }
  return std::nullopt;
}

JointState Ensemble::initial() const {
  JointState s;
  for (const auto& a : agents_) s.modes.push_back(a.role.initial);
  s.buffers.resize(buffers_.size());
  return s;
}

std::vector<std::pair<Move, JointState>> Ensemble::moves(const JointState& s) const {
  std::vector<std::pair<Move, JointState>> out;
  std::set<std::string> seen;
  for (std::size_t a = 0; a < agents_.size(); ++a) {
    const auto& role = agents_[a].role;
    for (std::size_t k = 0; k < role.transitions.size(); ++k) {
      const auto& t = role.transitions[k];
      if (t.from != s.modes[a]) continue;

      std::vector<std::optional<std::size_t>> inputs;
      if (t.in_doc) {
        for (std::size_t b : incoming_[a]) {
          const auto& buf = s.buffers[b];
          if (buf.empty() || buf.front().doc != *t.in_doc) continue;
          if (!port_matches(t.in_port, buffers_[b].to_port, agents_[buffers_[b].from_agent].name)) continue;
          if (!role.accepts(t, buf.front().params)) continue;
          inputs.push_back(b);
        }
      } else {
        inputs.push_back(std::nullopt);
      }

      std::optional<std::size_t> ob;
      std::vector<Valuation> outs{{}};
      if (t.out_doc) {
        auto it = send_buffer_.find({a, k});
        if (it != send_buffer_.end()) ob = it->second;
        outs = role.doc(*t.out_doc)->valuations(t.out_params);
      }

      for (const auto& ib : inputs) {
        if (ob) {
          std::size_t fill = s.buffers[*ob].size() - (ib && *ib == *ob ? 1 : 0);
          if (fill >= buffers_[*ob].capacity) continue;
        }
        for (const auto& val : outs) {
          Move m;
          m.agent = a;
          m.transition = k;
          JointState next = s;
          next.modes[a] = t.to;
          std::string label = agents_[a].name + ": " + t.from + " --";
          if (ib) {
            m.in_buffer = ib;
            m.received = next.buffers[*ib].front();
            next.buffers[*ib].erase(next.buffers[*ib].begin());
            const auto& buf = buffers_[*ib];
            label += endpoint(agents_[buf.from_agent].name, buf.from_port) + "?" + m.received->str();
          }
          if (t.out_doc) {
            m.sent = Message{*t.out_doc, val};
            if (ib) label += "/";
            if (ob) {
              m.out_buffer = ob;
              next.buffers[*ob].push_back(*m.sent);
              const auto& buf = buffers_[*ob];
              label += endpoint(agents_[buf.to_agent].name, buf.to_port) + "!" + m.sent->str();
            } else {
              label += "!" + m.sent->str();
            }
          }
          label += "--> " + t.to;
          if (!seen.insert(label).second) continue;
          m.label = std::move(label);
          out.emplace_back(std::move(m), std::move(next));
        }
      }
    }
  }
  return out;
}

bool Ensemble::is_goal(const JointState& s) const {
  for (const auto& g : goals_) {
    bool all = true;
    for (const auto& [agent, mode] : g) {
      std::size_t a = *agent_index(agent);
      if (s.modes[a] != mode && agents_[a].role.own_mode(s.modes[a]) != mode) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

std::vector<Reception> Ensemble::unspecified(const JointState& s) const {
  std::vector<Reception> out;
  for (std::size_t b = 0; b < buffers_.size(); ++b) {
    if (s.buffers[b].empty()) continue;
    const auto& head = s.buffers[b].front();
    std::size_t a = buffers_[b].to_agent;
    const auto& role = agents_[a].role;
    bool can_wait = false, takes = false;
    for (const auto& t : role.transitions) {
      if (t.from != s.modes[a]) continue;
      if (!t.in_doc) {
        can_wait = true;
        continue;
      }
      if (*t.in_doc == head.doc &&
          port_matches(t.in_port, buffers_[b].to_port, agents_[buffers_[b].from_agent].name) &&
          role.accepts(t, head.params)) {
        takes = true;
      }
    }
    if (!takes && !can_wait) out.push_back({b, head});
  }
  return out;
}

std::string Ensemble::render(const JointState& s) const {
  std::string out = "<";
  for (std::size_t a = 0; a < agents_.size(); ++a) {
    out += (a ? "," : "") + agents_[a].name + "=" + s.modes[a];
  }
  out += ">";
  for (std::size_t b = 0; b < buffers_.size(); ++b) {
    if (s.buffers[b].empty()) continue;
    std::vector<std::string> msgs;
    for (const auto& m : s.buffers[b]) msgs.push_back(m.str());
    out += " " + buffers_[b].name + "[" + join(msgs, " ") + "]";
  }
  return out;
}

// --- Exploration -------------------------------------------------------------

std::vector<std::string> StateGraph::trace_to(std::size_t state) const {
  std::vector<std::string> out;
  while (parent[state]) {
    auto [pred, edge] = *parent[state];
    out.push_back(edges[pred][edge].move.label);
    state = pred;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

StateGraph explore(const Ensemble& ensemble, std::size_t bound) {
  if (bound < 1) throw Error(ErrorCode::kBoundExceeded, "bound must be at least 1");
  StateGraph g;
  std::unordered_map<std::string, std::size_t> index;
  auto add = [&](JointState s, std::optional<std::pair<std::size_t, std::size_t>> parent)
      -> std::optional<std::size_t> {
    auto key = ensemble.render(s);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    if (g.states.size() >= bound) return std::nullopt;
    index.emplace(std::move(key), g.states.size());
    g.states.push_back(std::move(s));
    g.edges.emplace_back();
    g.expanded.push_back(false);
    g.parent.push_back(parent);
    return g.states.size() - 1;
  };
  add(ensemble.initial(), std::nullopt);
  for (std::size_t cur = 0; cur < g.states.size(); ++cur) {
    bool complete = true;
    for (auto& [move, next] : ensemble.moves(g.states[cur])) {
      auto target = add(std::move(next), std::make_pair(cur, g.edges[cur].size()));
      if (!target) {
        complete = false;
        g.bound_hit = true;
        continue;
      }
      g.edges[cur].push_back({*target, std::move(move)});
    }
    g.expanded[cur] = complete;
  }
  return g;
}

// --- Protocols --------------------------------------------------------------

const Role* Protocol::role(const std::string& n) const {
  for (const auto& r : roles) {
    if (r.name == n) return &r;
  }
  return nullptr;
}

Ensemble make_ensemble(const Protocol& p) {
  if (p.roles.size() < 2) {
    throw Error(ErrorCode::kProtocolError, "protocol " + p.name + " needs at least two roles");
  }
  std::vector<Agent> agents;
  for (const auto& r : p.roles) agents.push_back({r.name, r});
  auto find = [&](const std::string& n) -> std::size_t {
    for (std::size_t a = 0; a < agents.size(); ++a) {
      if (agents[a].name == n) return a;
    }
    throw Error(ErrorCode::kProtocolError,
                "protocol " + p.name + ": channel references unknown role " + n);
  };
  std::vector<Link> links;
  for (const auto& c : p.channels) {
    std::size_t from = find(c.from), to = find(c.to);
    const auto* d = agents[from].role.doc(c.doc);
    if (!d) {
      throw Error(ErrorCode::kProtocolError, "protocol " + p.name + ": channel " + c.from + " -> " +
                                                 c.to + " carries " + c.doc + ", unknown to " + c.from);
    }
    const auto* d2 = agents[to].role.doc(c.doc);
    if (d2 && !(*d == *d2)) {
      throw Error(ErrorCode::kProtocolError,
                  "protocol " + p.name + ": roles disagree on document class " + c.doc);
    }
    links.push_back({from, "", to, "", c.doc, c.capacity ? c.capacity : p.capacity});
  }
  return Ensemble(std::move(agents), std::move(links), p.goals);
}

std::string VerificationReport::str() const {
  std::ostringstream os;
  auto yn = [](bool b) { return b ? "true" : "false"; };
  os << "protocol " << protocol << "\n";
  os << "explored_states " << explored_states << "\n";
  os << "transitions " << transitions << "\n";
  os << "bound_hit " << yn(bound_hit) << "\n";
  os << "complete " << yn(complete) << "\n";
  os << "deadlock_free " << yn(deadlocks.empty()) << "\n";
  os << "livelock_free " << yn(livelocks.empty()) << "\n";
  os << "goal_reachable " << yn(goal_reachable) << "\n";
  if (goal_reachable) os << "goal_trace " << join(goal_trace, "; ") << "\n";
  for (const auto& f : unspecified) {
    os << "unspecified " << f.state << " :: " << f.detail << " :: " << join(f.trace, "; ") << "\n";
  }
  for (const auto& f : deadlocks) os << "deadlock " << f.state << " :: " << join(f.trace, "; ") << "\n";
  for (const auto& f : livelocks) {
    os << "livelock " << f.state << " :: " << f.detail << " :: " << join(f.trace, "; ") << "\n";
  }
  os << "result " << (ok() ? "ok" : "fail") << "\n";
  return os.str();
}

namespace {

// Tarjan's algorithm without recursion; returns components in discovery
// order of their roots.
std::vector<std::vector<std::size_t>> strongly_connected(
    const StateGraph& g, const std::vector<bool>& keep) {
  const std::size_t n = g.states.size();
  const std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kNone), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> comps;
  std::size_t counter = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (!keep[root] || index[root] != kNone) continue;
    std::vector<std::pair<std::size_t, std::size_t>> work{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!work.empty()) {
      auto& [v, ei] = work.back();
      if (ei < g.edges[v].size()) {
        std::size_t w = g.edges[v][ei++].target;
        if (!keep[w]) continue;
        if (index[w] == kNone) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          work.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
      }
      std::size_t done = v;
      work.pop_back();
      if (!work.empty()) low[work.back().first] = std::min(low[work.back().first], low[done]);
    }
  }
  return comps;
}

}  // namespace

VerificationReport verify_ensemble(const Ensemble& e, std::size_t bound, std::string name) {
  StateGraph g = explore(e, bound);
  VerificationReport r;
  r.protocol = std::move(name);
  r.explored_states = g.states.size();
  r.bound_hit = g.bound_hit;
  const std::size_t n = g.states.size();
  std::vector<bool> goal(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    r.transitions += g.edges[s].size();
    goal[s] = e.is_goal(g.states[s]);
    if (goal[s] && !r.goal_reachable) {
      r.goal_reachable = true;
      r.goal_trace = g.trace_to(s);
    }
    for (const auto& rec : e.unspecified(g.states[s])) {
      const auto& buf = e.buffers()[rec.buffer];
      r.unspecified.push_back({e.render(g.states[s]), g.trace_to(s),
                               e.agents()[buf.to_agent].name + " cannot receive " +
                                   rec.message.str() + " from " + buf.name});
    }
    if (g.expanded[s] && g.edges[s].empty() && !goal[s]) {
      r.deadlocks.push_back({e.render(g.states[s]), g.trace_to(s), "no move enabled"});
    }
  }
  r.complete = r.unspecified.empty();

  // States that reach a goal, or may do so beyond the explored region.
  std::vector<std::vector<std::size_t>> preds(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& edge : g.edges[s]) preds[edge.target].push_back(s);
  }
  std::vector<bool> hopeful(n, false);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    if (goal[s] || !g.expanded[s]) {
      hopeful[s] = true;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    std::size_t s = queue.front();
    queue.pop_front();
    for (std::size_t p : preds[s]) {
      if (!hopeful[p]) {
        hopeful[p] = true;
        queue.push_back(p);
      }
    }
  }
  std::vector<bool> doomed(n);
  for (std::size_t s = 0; s < n; ++s) doomed[s] = !hopeful[s];
  auto comps = strongly_connected(g, doomed);
  std::sort(comps.begin(), comps.end());
  for (const auto& comp : comps) {
    bool cyclic = comp.size() > 1;
    if (!cyclic) {
      for (const auto& edge : g.edges[comp[0]]) cyclic = cyclic || edge.target == comp[0];
    }
    if (!cyclic) continue;
    std::vector<std::string> members;
    for (std::size_t s : comp) members.push_back(e.render(g.states[s]));
    r.livelocks.push_back({e.render(g.states[comp[0]]), g.trace_to(comp[0]),
                           "cycle over " + std::to_string(comp.size()) + " states: " + join(members, " | ")});
  }
  return r;
}

VerificationReport verify(const Protocol& p, std::size_t bound) {
  return verify_ensemble(make_ensemble(p), bound, p.name);
}

// --- Classification -----------------------------------------------------------

std::string InteractionProfile::str() const {
  return std::string(determinism == Determinism::kDeterministic ? "deterministic" : "nondeterministic") +
         "," + (statefulness == Statefulness::kStateful ? "stateful" : "stateless") + "," +
         (sender == Synchronicity::kSynchronous ? "synchronous" : "asynchronous");
}

namespace {

bool guards_overlap(const Role& role, const GuardedTransition& a, const GuardedTransition& b) {
  std::vector<Valuation> vals{{}};
  if (a.in_doc) {
    if (const auto* d = role.doc(*a.in_doc)) vals = d->valuations();
  }
  std::vector<std::optional<std::string>> rests;
  for (const auto& r : role.rest_domain) rests.emplace_back(r);
  if (rests.empty()) rests.emplace_back(std::nullopt);
  for (const auto& v : vals) {
    for (const auto& r : rests) {
      bool ea = !a.guard || a.guard->eval(r, v);
      bool eb = !b.guard || b.guard->eval(r, v);
      if (ea && eb) return true;
    }
  }
  return false;
}

}  // namespace

InteractionProfile derive_profile(const Role& role, Synchronicity sender) {
  InteractionProfile p;
  p.sender = sender;
  const auto& ts = role.transitions;
  for (std::size_t i = 0; i < ts.size() && p.determinism == Determinism::kDeterministic; ++i) {
    for (std::size_t j = i + 1; j < ts.size(); ++j) {
      if (ts[i].from != ts[j].from || ts[i].in_doc != ts[j].in_doc) continue;
      if (guards_overlap(role, ts[i], ts[j])) {
        p.determinism = Determinism::kNondeterministic;
        break;
      }
    }
  }
  bool reads_rest = false;
  for (const auto& t : ts) reads_rest = reads_rest || (t.guard && t.guard->reads_rest());
  p.statefulness = role.modes.size() > 1 || reads_rest ? Statefulness::kStateful : Statefulness::kStateless;
  return p;
}

std::string InteractionClass::str() const {
  std::string k = kind == InteractionKind::kMutualHinting    ? "mutual_hinting"
                  : kind == InteractionKind::kUseObservation ? "use_observation"
                                                             : "other";
  return k + (symmetric ? " symmetric" : " asymmetric") + " [" + a.str() + "] [" + b.str() + "]";
}

InteractionClass classify_interaction(const InteractionProfile& a, const InteractionProfile& b) {
  InteractionClass c{InteractionKind::kOther, a == b, a, b};
  auto hinting = [](const InteractionProfile& p) {
    return p.determinism == Determinism::kNondeterministic &&
           p.statefulness == Statefulness::kStateful && p.sender == Synchronicity::kAsynchronous;
  };
  auto uses = [](const InteractionProfile& user, const InteractionProfile& component) {
    return user.sender == Synchronicity::kSynchronous &&
           component.determinism == Determinism::kDeterministic;
  };
  if (hinting(a) && hinting(b)) {
    c.kind = InteractionKind::kMutualHinting;
  } else if (uses(a, b) || uses(b, a)) {
    c.kind = InteractionKind::kUseObservation;
  }
  return c;
}

// --- Substitutability ----------------------------------------------------------

namespace {

struct LabeledMove {
  std::string input;  // `?D(v)` or empty
  std::string label;  // empty for ε
  std::string to;
};

std::vector<LabeledMove> labeled_moves(const Role& role, const std::string& mode) {
  std::vector<LabeledMove> out;
  for (const auto& t : role.transitions) {
    if (t.from != mode) continue;
    std::vector<std::string> ins{""}, outs{""};
    if (t.in_doc) {
      ins.clear();
      for (const auto& v : role.doc(*t.in_doc)->valuations()) {
        if (role.accepts(t, v)) ins.push_back("?" + Message{*t.in_doc, v}.str());
      }
    }
    if (t.out_doc) {
      outs.clear();
      for (const auto& v : role.doc(*t.out_doc)->valuations(t.out_params)) {
        outs.push_back("!" + Message{*t.out_doc, v}.str());
      }
    }
    for (const auto& i : ins) {
      for (const auto& o : outs) {
        out.push_back({i, i.empty() || o.empty() ? i + o : i + "/" + o, t.to});
      }
    }
  }
  return out;
}

std::set<std::string> closure(const Role& role, std::set<std::string> modes) {
  std::vector<std::string> work(modes.begin(), modes.end());
  while (!work.empty()) {
    auto m = work.back();
    work.pop_back();
    for (const auto& mv : labeled_moves(role, m)) {
      if (mv.label.empty() && modes.insert(mv.to).second) work.push_back(mv.to);
    }
  }
  return modes;
}

bool quiescent(const Role& role, const std::string& mode) {
  for (const auto& mv : labeled_moves(role, mode)) {
    if (mv.input.empty()) return false;
  }
  return true;
}

std::set<std::string> post(const Role& role, const std::set<std::string>& from, const std::string& label) {
  std::set<std::string> out;
  if (label == kQuiescence) {
    for (const auto& m : from) {
      if (quiescent(role, m)) out.insert(m);
    }
    return out;
  }
  for (const auto& m : from) {
    for (const auto& mv : labeled_moves(role, m)) {
      if (mv.label == label) out.insert(mv.to);
    }
  }
  return closure(role, out);
}

}  // namespace

SubstitutionResult check_substitutable(const Role& candidate, const Role& spec, std::size_t bound) {
  for (const auto& d : candidate.docs) {
    const auto* s = spec.doc(d.name);
    if (s && !(*s == d)) {
      throw Error(ErrorCode::kVocabularyMismatch,
                  "document class " + d.name + " differs between " + candidate.name + " and " + spec.name);
    }
  }
  candidate.validate();
  spec.validate();

  struct Node {
    std::string c;
    std::set<std::string> s;
    std::optional<std::size_t> parent;
    std::string label;
  };
  std::vector<Node> nodes;
  std::set<std::pair<std::string, std::set<std::string>>> visited;
  auto trace_of = [&](std::size_t n) {
    std::vector<std::string> out;
    for (std::optional<std::size_t> k = n; k && nodes[*k].parent; k = nodes[*k].parent) {
      out.push_back(nodes[*k].label);
    }
    std::reverse(out.begin(), out.end());
    return out;
  };

  SubstitutionResult res;
  nodes.push_back({candidate.initial, closure(spec, {spec.initial}), std::nullopt, ""});
  visited.insert({nodes[0].c, nodes[0].s});
  for (std::size_t cur = 0; cur < nodes.size(); ++cur) {
    const auto cmodes = closure(candidate, {nodes[cur].c});
    const auto smodes = nodes[cur].s;
    std::vector<LabeledMove> cmoves, smoves;
    for (const auto& m : cmodes) {
      auto mv = labeled_moves(candidate, m);
      cmoves.insert(cmoves.end(), mv.begin(), mv.end());
    }
    for (const auto& m : smodes) {
      auto mv = labeled_moves(spec, m);
      smoves.insert(smoves.end(), mv.begin(), mv.end());
    }
    // Receptions every spec state guarantees must be available.
    std::set<std::string> offered;
    for (const auto& mv : smoves) {
      if (!mv.input.empty()) offered.insert(mv.input);
    }
    for (const auto& in : offered) {
      bool guaranteed = true;
      for (const auto& s : smodes) {
        bool weak = false;
        for (const auto& m : closure(spec, {s})) {
          for (const auto& mv : labeled_moves(spec, m)) weak = weak || mv.input == in;
        }
        guaranteed = guaranteed && weak;
      }
      if (!guaranteed) continue;
      bool has = std::any_of(cmoves.begin(), cmoves.end(), [&](const LabeledMove& m) { return m.input == in; });
      if (!has) {
        res.holds = false;
        res.trace = trace_of(cur);
        res.trace.push_back(in);
        res.reason = candidate.name + " cannot receive " + in.substr(1) + " that " + spec.name + " accepts";
        return res;
      }
    }
    // The candidate may only fall silent where the reference may.
    if (std::none_of(smodes.begin(), smodes.end(), [&](const std::string& m) { return quiescent(spec, m); })) {
      for (const auto& m : cmodes) {
        if (!quiescent(candidate, m)) continue;
        res.holds = false;
        res.trace = trace_of(cur);
        res.trace.push_back(kQuiescence);
        res.reason = candidate.name + " can stop in " + m + " where " + spec.name + " must continue";
        return res;
      }
    }
    // Every visible move the environment can provoke must be one the reference has.
    std::set<std::string> spec_labels;
    for (const auto& mv : smoves) {
      if (!mv.label.empty()) spec_labels.insert(mv.label);
    }
    std::vector<LabeledMove> ordered(cmoves.begin(), cmoves.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const LabeledMove& a, const LabeledMove& b) { return a.label < b.label; });
    for (const auto& mv : ordered) {
      if (mv.label.empty()) continue;
      if (!mv.input.empty() && !offered.count(mv.input)) continue;
      if (!spec_labels.count(mv.label)) {
        res.holds = false;
        res.trace = trace_of(cur);
        res.trace.push_back(mv.label);
        res.reason = candidate.name + " performs " + mv.label + " where " + spec.name + " cannot";
        return res;
      }
      auto next = post(spec, smodes, mv.label);
      if (visited.insert({mv.to, next}).second) {
        if (nodes.size() >= bound) {
          res.bound_hit = true;
          continue;
        }
        nodes.push_back({mv.to, std::move(next), cur, mv.label});
      }
    }
  }
  return res;
}

std::vector<std::string> replay_labels(const Role& role, const std::vector<std::string>& labels) {
  auto cur = closure(role, {role.initial});
  for (const auto& l : labels) {
    cur = post(role, cur, l);
    if (cur.empty()) return {};
  }
  return {cur.begin(), cur.end()};
}

std::vector<std::string> enabled_labels(const Role& role, const std::vector<std::string>& from) {
  std::set<std::string> out;
  for (const auto& m : closure(role, {from.begin(), from.end()})) {
    for (const auto& mv : labeled_moves(role, m)) {
      if (!mv.label.empty()) out.insert(mv.label);
    }
  }
  return {out.begin(), out.end()};
}

}  // namespace ioa::protocol

#include "ioa/netsim.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ioa/error.hpp"

namespace ioa::netsim {

using behavior::GuardedTransition;
using protocol::JointState;

Node Node::from_role(std::string name, Role role) {
  Node n{std::move(name), "role", std::move(role), {}};
  n.ports = {n.role.name};
  return n;
}

Node Node::from_process(std::string name, const process::Coordinated& c) {
  Node n{std::move(name), "process", c.joint, {}};
  for (const auto& i : c.def.instances) n.ports.push_back(i.name);
  return n;
}

Node Node::from_system(std::string name, const kernel::SystemDef& s) {
  Role r;
  r.name = s.name();
  for (const auto& q : s.states()) r.modes.push_back(q.str());
  r.initial = s.initial().str();
  std::set<std::string> docs;
  for (const auto& v : s.inputs()) docs.insert(v.str());
  for (const auto& v : s.outputs()) docs.insert(v.str());
  for (const auto& d : docs) r.docs.push_back({d, {}});
  for (std::size_t q = 0; q < s.states().size(); ++q) {
    for (std::size_t i = 0; i < s.inputs().size(); ++i) {
      const auto& e = s.entry(q, i);
      GuardedTransition t;
      t.from = s.states()[q].str();
      t.in_doc = s.inputs()[i].str();
      t.out_doc = s.outputs()[e.out].str();
      t.to = s.states()[e.next].str();
      r.transitions.push_back(std::move(t));
    }
  }
  return Node{std::move(name), "system", std::move(r), {"io"}};
}

namespace {

bool on_port(const std::string& tport, const std::string& port) { return tport.empty() || tport == port; }

std::set<std::string> sends(const Node& n, const std::string& port) {
  std::set<std::string> out;
  for (const auto& t : n.role.transitions) {
    if (t.out_doc && on_port(t.out_port, port)) out.insert(*t.out_doc);
  }
  return out;
}

std::set<std::string> receives(const Node& n, const std::string& port) {
  std::set<std::string> out;
  for (const auto& t : n.role.transitions) {
    if (t.in_doc && on_port(t.in_port, port)) out.insert(*t.in_doc);
  }
  return out;
}

}  // namespace

BoundNetwork bind(const Network& net) {
  std::vector<protocol::Agent> agents;
  std::map<std::string, std::size_t> index;
  for (const auto& n : net.nodes) {
    if (!index.emplace(n.name, agents.size()).second) {
      throw Error(ErrorCode::kDanglingBinding, "network " + net.name + ": duplicate node " + n.name);
    }
    agents.push_back({n.name, n.role});
  }
  auto node = [&](const std::string& name, const std::string& port) -> std::size_t {
    auto it = index.find(name);
    if (it == index.end()) {
      throw Error(ErrorCode::kDanglingBinding, "network " + net.name + ": unknown node " + name);
    }
    const auto& ports = net.nodes[it->second].ports;
    if (std::find(ports.begin(), ports.end(), port) == ports.end()) {
      throw Error(ErrorCode::kDanglingBinding, "network " + net.name + ": node " + name + " has no port " + port);
    }
    return it->second;
  };

  std::vector<protocol::Link> links;
  std::set<std::pair<std::size_t, std::string>> carried;  // (node, class) sent somewhere
  for (const auto& b : net.bindings) {
    std::size_t a = node(b.a_node, b.a_port), c = node(b.b_node, b.b_port);
    const Node& na = net.nodes[a];
    const Node& nc = net.nodes[c];
    auto a_out = sends(na, b.a_port), a_in = receives(na, b.a_port);
    auto c_out = sends(nc, b.b_port), c_in = receives(nc, b.b_port);
    std::vector<std::string> classes;
    const bool explicit_classes = !b.classes.empty();
    if (explicit_classes) {
      // named classes only need to be declared on the receiving side
      for (const auto& d : na.role.docs) a_in.insert(d.name);
      for (const auto& d : nc.role.docs) c_in.insert(d.name);
    }
    if (!explicit_classes) {
      std::set<std::string> all;
      for (const auto& d : a_out) {
        if (c_in.count(d)) all.insert(d);
      }
      for (const auto& d : c_out) {
        if (a_in.count(d)) all.insert(d);
      }
      classes.assign(all.begin(), all.end());
    } else {
      for (const auto& [x, y] : b.classes) {
        if (x != y) {
          throw Error(ErrorCode::kNameMismatch, "network " + net.name + ": binding " + b.a_node + "." + b.a_port +
                                                    " <-> " + b.b_node + "." + b.b_port + " couples " + x +
                                                    " with " + y);
        }
        bool forward = a_out.count(x) && c_in.count(x), backward = c_out.count(x) && a_in.count(x);
        if (!forward && !backward) {
          throw Error(ErrorCode::kDanglingBinding, "network " + net.name + ": class " + x +
                                                       " is not exchanged between " + b.a_node + "." + b.a_port +
                                                       " and " + b.b_node + "." + b.b_port);
        }
        classes.push_back(x);
      }
    }
    for (const auto& d : classes) {
      const auto* da = na.role.doc(d);
      const auto* dc = nc.role.doc(d);
      if (da && dc && !(*da == *dc)) {
        throw Error(ErrorCode::kNameMismatch,
                    "network " + net.name + ": " + b.a_node + " and " + b.b_node + " define " + d + " differently");
      }
      if (a_out.count(d) && c_in.count(d)) {
        links.push_back({a, b.a_port, c, b.b_port, d, b.capacity});
        carried.insert({a, d});
      }
      if (c_out.count(d) && a_in.count(d)) {
        links.push_back({c, b.b_port, a, b.a_port, d, b.capacity});
        carried.insert({c, d});
      }
    }
  }

  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    for (const auto& d : net.nodes[i].role.out_docs()) {
      if (!carried.count({i, d})) warnings.push_back(net.nodes[i].name + ": " + d + " has no receiver");
    }
  }
  protocol::Ensemble e(std::move(agents), std::move(links), net.goals, true);
  std::vector<std::string> channels;
  for (const auto& b : e.buffers()) channels.push_back(b.name);
  return BoundNetwork{net.name, std::move(e), std::move(channels), std::move(warnings)};
}

Network network_of(const protocol::Protocol& p) {
  Network n;
  n.name = p.name;
  for (const auto& r : p.roles) n.nodes.push_back(Node::from_role(r.name, r));
  for (const auto& c : p.channels) {
    const auto* from = p.role(c.from);
    if (!from || !from->out_docs().count(c.doc)) continue;
    n.bindings.push_back({c.from, c.from, c.to, c.to, {{c.doc, c.doc}}, c.capacity ? c.capacity : p.capacity});
  }
  n.goals = p.goals;
  return n;
}

std::vector<std::string> EventLog::fired() const {
  std::vector<std::string> out;
  for (const auto& r : records) {
    if (r.kind == "fire") out.push_back(r.payload);
  }
  return out;
}

std::string EventLog::str() const {
  std::ostringstream os;
  for (const auto& r : records) os << r.step << "\t" << r.node << "\t" << r.kind << "\t" << r.payload << "\n";
  return os.str();
}

namespace {

using Moves = std::vector<std::pair<protocol::Move, JointState>>;

// Chooses one of the enabled moves, or nothing to stop.
class Chooser {
 public:
  Chooser(const BoundNetwork& net, const Scheduler& s) : net_(net), s_(s), rng_(s.seed) {
    const auto& agents = net.ensemble.agents();
    for (std::size_t a = 0; a < agents.size(); ++a) {
      for (std::size_t k = 0; k < agents[a].role.transitions.size(); ++k) flat_.push_back({a, k});
    }
    if (s.kind == Scheduler::Kind::kExhaustive) plan_ = exhaustive_plan();
    if (s.kind == Scheduler::Kind::kReplay) plan_ = s.labels;
  }

  std::optional<std::size_t> choose(const Moves& moves) {
    if (moves.empty()) return std::nullopt;
    switch (s_.kind) {
      case Scheduler::Kind::kRoundRobin:
        for (std::size_t off = 0; off < flat_.size(); ++off) {
          std::size_t at = (next_ + off) % flat_.size();
          for (std::size_t m = 0; m < moves.size(); ++m) {
            if (moves[m].first.agent == flat_[at].first && moves[m].first.transition == flat_[at].second) {
              next_ = (at + 1) % flat_.size();
              return m;
            }
          }
        }
        return std::nullopt;
      case Scheduler::Kind::kSeededRandom:
        return static_cast<std::size_t>(rng_() % moves.size());
      case Scheduler::Kind::kExhaustive:
      case Scheduler::Kind::kReplay: {
        if (pos_ >= plan_.size()) return std::nullopt;
        for (std::size_t m = 0; m < moves.size(); ++m) {
          if (moves[m].first.label == plan_[pos_]) {
            ++pos_;
            return m;
          }
        }
        diverged_ = true;
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  bool diverged() const { return diverged_; }
  bool planned() const { return s_.kind == Scheduler::Kind::kExhaustive || s_.kind == Scheduler::Kind::kReplay; }
  bool plan_done() const { return pos_ >= plan_.size(); }

 private:
  // Shortest path to a goal, else to the first deadlock, else to the last
  // explored state.
  std::vector<std::string> exhaustive_plan() const {
    auto g = protocol::explore(net_.ensemble, s_.bound);
    for (std::size_t i = 1; i < g.states.size(); ++i) {
      if (net_.ensemble.is_goal(g.states[i])) return g.trace_to(i);
    }
    for (std::size_t i = 0; i < g.states.size(); ++i) {
      if (g.expanded[i] && g.edges[i].empty()) return g.trace_to(i);
    }
    return g.trace_to(g.states.size() - 1);
  }

  const BoundNetwork& net_;
  const Scheduler& s_;
  std::mt19937_64 rng_;
  std::vector<std::pair<std::size_t, std::size_t>> flat_;
  std::size_t next_ = 0;
  std::vector<std::string> plan_;
  std::size_t pos_ = 0;
  bool diverged_ = false;
};

}  // namespace

EventLog simulate(const BoundNetwork& net, const Scheduler& scheduler, std::size_t max_steps) {
  const auto& e = net.ensemble;
  Chooser chooser(net, scheduler);
  EventLog log;
  JointState s = e.initial();
  std::size_t step = 0;
  for (;;) {
    // a planned run goes on through goal states until its plan is used up
    if (step > 0 && e.is_goal(s) && (!chooser.planned() || chooser.plan_done())) {
      log.status = "goal";
      break;
    }
    auto moves = e.moves(s);
    if (moves.empty()) {
      log.status = "quiescent";
      break;
    }
    if (step >= max_steps) {
      log.status = "budget";
      break;
    }
    auto pick = chooser.choose(moves);
    if (!pick) {
      log.status = chooser.diverged() ? "diverged" : "budget";
      break;
    }
    auto& [m, next] = moves[*pick];
    ++step;
    const auto& node = e.agents()[m.agent].name;
    if (m.received) {
      log.records.push_back({step, node, "recv", e.buffers()[*m.in_buffer].name + " " + m.received->str()});
    }
    log.records.push_back({step, node, "fire", m.label});
    if (m.sent) {
      if (m.out_buffer) {
        log.records.push_back({step, node, "send", e.buffers()[*m.out_buffer].name + " " + m.sent->str()});
      } else {
        log.records.push_back({step, node, "drop", m.sent->str()});
      }
    }
    s = std::move(next);
  }
  log.final_state = s;
  log.records.push_back({step, "-", "end", log.status + " " + e.render(s)});
  return log;
}

EventLog replay(const BoundNetwork& net, const EventLog& log) {
  Scheduler s;
  s.kind = Scheduler::Kind::kReplay;
  s.labels = log.fired();
  return simulate(net, s, s.labels.size());
}

protocol::StateGraph explore(const BoundNetwork& net, std::size_t bound) {
  return protocol::explore(net.ensemble, bound);
}

}  // namespace ioa::netsim

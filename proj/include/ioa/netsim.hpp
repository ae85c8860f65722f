#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ioa/behavior.hpp"
#include "ioa/kernel.hpp"
#include "ioa/process.hpp"
#include "ioa/protocol.hpp"

namespace ioa::netsim {

using behavior::Role;

// A node hosts one behavior. Its ports are the names bindings refer to: the
// role name for a role, the instance names for a process, `io` for a system.
struct Node {
  std::string name;
  std::string kind;  // role | process | system
  Role role;
  std::vector<std::string> ports;

  static Node from_role(std::string name, Role role);
  static Node from_process(std::string name, const process::Coordinated& c);
  // Input and output values become parameterless document classes.
  static Node from_system(std::string name, const kernel::SystemDef& s);
};

struct Binding {
  std::string a_node, a_port, b_node, b_port;
  // Classes to couple as (a side, b side). Empty: every class one side sends
  // and the other receives.
  std::vector<std::pair<std::string, std::string>> classes;
  std::size_t capacity = 1;
  friend bool operator==(const Binding&, const Binding&) = default;
};

struct Network {
  std::string name;
  std::vector<Node> nodes;
  std::vector<Binding> bindings;
  std::vector<protocol::GoalPattern> goals;  // node -> mode
};

struct BoundNetwork {
  std::string name;
  protocol::Ensemble ensemble;
  std::vector<std::string> channels;  // buffer names
  std::vector<std::string> warnings;  // `node: Doc has no receiver`
};

// Throws NameMismatch when a binding couples differently named classes and
// DanglingBinding for unknown nodes, ports or classes.
BoundNetwork bind(const Network& n);

// Each channel of the protocol becomes a binding between role nodes.
Network network_of(const protocol::Protocol& p);

struct Scheduler {
  enum class Kind { kRoundRobin, kSeededRandom, kExhaustive, kReplay };
  Kind kind = Kind::kRoundRobin;
  std::uint64_t seed = 0;
  std::size_t bound = 100000;       // for kExhaustive
  std::vector<std::string> labels;  // for kReplay: fired move labels
};

struct Record {
  std::size_t step;
  std::string node;
  std::string kind;  // recv | fire | send | drop | end
  std::string payload;
  friend bool operator==(const Record&, const Record&) = default;
};

struct EventLog {
  std::vector<Record> records;
  std::string status;  // goal | quiescent | budget | diverged
  protocol::JointState final_state;

  std::vector<std::string> fired() const;
  // One `step<TAB>node<TAB>kind<TAB>payload` line per record.
  std::string str() const;
};

// Stops at a goal reached after the start, when nothing is enabled, or after
// max_steps moves. Replay schedules pass through goals until their labels are
// used up.
EventLog simulate(const BoundNetwork& net, const Scheduler& scheduler, std::size_t max_steps);

// Re-runs the fired labels of a log.
EventLog replay(const BoundNetwork& net, const EventLog& log);

protocol::StateGraph explore(const BoundNetwork& net, std::size_t bound);

}  // namespace ioa::netsim

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ioa/behavior.hpp"

namespace ioa::protocol {

using behavior::Role;
using behavior::Valuation;

struct Message {
  std::string doc;
  Valuation params;

  std::string str() const;
  friend bool operator==(const Message&, const Message&) = default;
};

// --- Joint execution of communicating roles --------------------------------

struct Agent {
  std::string name;
  Role role;
};

// A directed link for one document class. Ports narrow which transitions may
// use it: a transition with an empty port matches any port.
struct Link {
  std::size_t from_agent = 0;
  std::string from_port;
  std::size_t to_agent = 0;
  std::string to_port;
  std::string doc;
  std::size_t capacity = 1;
};

struct Buffer {
  std::size_t from_agent;
  std::string from_port;
  std::size_t to_agent;
  std::string to_port;
  std::size_t capacity;
  std::string name;  // `A->B` or `n1.p->n2.q`
};

struct JointState {
  std::vector<std::string> modes;
  std::vector<std::vector<Message>> buffers;

  friend bool operator==(const JointState&, const JointState&) = default;
};

struct Move {
  std::size_t agent = 0;
  std::size_t transition = 0;
  std::optional<std::size_t> in_buffer;
  std::optional<Message> received;
  std::optional<std::size_t> out_buffer;  // empty with `sent` set: dropped
  std::optional<Message> sent;
  std::string label;
};

struct Reception {
  std::size_t buffer;
  Message message;
};

// Goal patterns: each maps agent name to the required own mode; a state is a
// goal state when some pattern matches.
using GoalPattern = std::map<std::string, std::string>;

// The joint semantics shared by verification and simulation: each move is an
// atomic transition of one agent that consumes at most the head of one of its
// incoming buffers and appends at most one message to an outgoing buffer.
// Sends to a full buffer are disabled.
class Ensemble {
 public:
  // With `drop_unbound`, sends matching no link are allowed and discarded;
  // otherwise they are a ProtocolError.
  Ensemble(std::vector<Agent> agents, std::vector<Link> links, std::vector<GoalPattern> goals,
           bool drop_unbound = false);

  const std::vector<Agent>& agents() const { return agents_; }
  const std::vector<Buffer>& buffers() const { return buffers_; }
  const std::vector<GoalPattern>& goals() const { return goals_; }
  // Sends without a link, as `agent: transition` (only with drop_unbound).
  const std::vector<std::string>& unbound_sends() const { return unbound_; }

  JointState initial() const;
  // Enabled moves with their successors in canonical order.
  std::vector<std::pair<Move, JointState>> moves(const JointState& s) const;
  bool is_goal(const JointState& s) const;
  // Buffer heads the receiver can never take in its current mode.
  std::vector<Reception> unspecified(const JointState& s) const;
  std::string render(const JointState& s) const;
  std::optional<std::size_t> agent_index(const std::string& name) const;

 private:
  std::vector<Agent> agents_;
  std::vector<Buffer> buffers_;
  std::vector<GoalPattern> goals_;
  std::vector<std::string> unbound_;
  // (agent, transition) -> buffer for its emission, if any.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> send_buffer_;
  std::vector<std::vector<std::size_t>> incoming_;  // agent -> buffers
};

struct Edge {
  std::size_t target;
  Move move;
};

struct StateGraph {
  std::vector<JointState> states;
  std::vector<std::vector<Edge>> edges;
  std::vector<bool> expanded;
  // BFS tree: predecessor and the edge index used to reach each state.
  std::vector<std::optional<std::pair<std::size_t, std::size_t>>> parent;
  bool bound_hit = false;

  std::vector<std::string> trace_to(std::size_t state) const;
};

// Breadth-first reachable graph of at most `bound` states.
StateGraph explore(const Ensemble& ensemble, std::size_t bound);

// --- Protocols --------------------------------------------------------------

struct Channel {
  std::string from;
  std::string to;
  std::string doc;
  std::size_t capacity = 0;  // 0: the protocol default
  friend bool operator==(const Channel&, const Channel&) = default;
};

struct Protocol {
  std::string name;
  std::vector<Role> roles;
  std::vector<Channel> channels;
  std::vector<GoalPattern> goals;
  std::string execution_model = "exhaustive";
  std::size_t capacity = 1;

  const Role* role(const std::string& name) const;
  friend bool operator==(const Protocol&, const Protocol&) = default;
};

// Validates channel and goal references (ProtocolError) and builds the joint
// semantics. Transition ports name the partner role.
Ensemble make_ensemble(const Protocol& p);

struct Finding {
  std::string state;
  std::vector<std::string> trace;
  std::string detail;
};

struct VerificationReport {
  std::string protocol;
  bool complete = true;
  std::vector<Finding> unspecified;
  std::vector<Finding> deadlocks;
  std::vector<Finding> livelocks;
  bool goal_reachable = false;
  std::vector<std::string> goal_trace;
  std::size_t explored_states = 0;
  std::size_t transitions = 0;
  bool bound_hit = false;

  bool ok() const {
    return complete && deadlocks.empty() && livelocks.empty() && goal_reachable && !bound_hit;
  }
  // Line-delimited `key value` records.
  std::string str() const;
};

VerificationReport verify(const Protocol& p, std::size_t bound = 100000);
VerificationReport verify_ensemble(const Ensemble& e, std::size_t bound, std::string name);

// --- Interaction classification --------------------------------------------

enum class Determinism { kDeterministic, kNondeterministic };
enum class Statefulness { kStateful, kStateless };
enum class Synchronicity { kSynchronous, kAsynchronous };

struct InteractionProfile {
  Determinism determinism = Determinism::kDeterministic;
  Statefulness statefulness = Statefulness::kStateless;
  Synchronicity sender = Synchronicity::kAsynchronous;

  std::string str() const;
  friend bool operator==(const InteractionProfile&, const InteractionProfile&) = default;
};

// The receiver components are derived; the sender attribute is declared.
InteractionProfile derive_profile(const Role& role,
                                  Synchronicity sender = Synchronicity::kAsynchronous);

enum class InteractionKind { kMutualHinting, kUseObservation, kOther };

struct InteractionClass {
  InteractionKind kind = InteractionKind::kOther;
  bool symmetric = false;
  InteractionProfile a, b;

  std::string str() const;
};

InteractionClass classify_interaction(const InteractionProfile& a, const InteractionProfile& b);

// --- Substitutability -------------------------------------------------------

struct SubstitutionResult {
  bool holds = true;
  // Labels both roles can follow, then the distinguishing one.
  std::vector<std::string> trace;
  std::string reason;
  bool bound_hit = false;
};

// Marks a state with no move that needs no input.
inline const std::string kQuiescence = "δ";

// Visible labels are `?D(v)`, `!E(w)` or `?D(v)/!E(w)`, ports ignored. The
// candidate must take every reception the reference guarantees, emit only what the
// reference may emit, and fall silent only where the reference may; a failing trace
// ends in the offending label or kQuiescence.
SubstitutionResult check_substitutable(const Role& candidate, const Role& spec,
                                       std::size_t bound = 100000);

// Modes reachable by following `labels` (with ε-moves in between); empty when
// the sequence is not executable. kQuiescence keeps only silent modes.
std::vector<std::string> replay_labels(const Role& role, const std::vector<std::string>& labels);

// Labels enabled after the modes `from` (including ε-closure).
std::vector<std::string> enabled_labels(const Role& role, const std::vector<std::string>& from);

}  // namespace ioa::protocol

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ioa/behavior.hpp"
#include "ioa/protocol.hpp"

namespace ioa::process {

using behavior::GuardedTransition;
using behavior::Role;
using behavior::Valuation;

struct RoleInstance {
  std::string name;
  Role role;
  std::string protocol;  // empty when unbound
  std::string slot;      // role name inside that protocol
  friend bool operator==(const RoleInstance&, const RoleInstance&) = default;
};

// Selects transitions of one instance: `?Doc`, `!Doc`, `@mode` (entering a
// mode), `*`, or a transition label.
struct Selector {
  std::string instance;
  std::string value;

  bool matches(const GuardedTransition& t) const;
  std::string str() const { return instance + "." + value; }
  friend auto operator<=>(const Selector&, const Selector&) = default;
};

struct Effect {
  enum class Kind { kForce, kEnable, kDisable, kSet };
  Kind kind = Kind::kForce;
  Selector target;  // for kSet: instance empty, value `var=val`
  std::string str() const;
  friend bool operator==(const Effect&, const Effect&) = default;
};

struct CoordinationRule {
  std::string name;
  Selector trigger;
  std::optional<behavior::Guard> when;  // over the process variables
  std::vector<Effect> effects;
  friend bool operator==(const CoordinationRule&, const CoordinationRule&) = default;
};

struct ProcessDef {
  std::string name;
  std::vector<RoleInstance> instances;
  std::vector<CoordinationRule> rules;
  std::vector<Selector> initially_disabled;
  Valuation vars;  // initial values of the private rest

  const RoleInstance* instance(const std::string& n) const;
  friend bool operator==(const ProcessDef&, const ProcessDef&) = default;
};

// The coordinated process: its joint role (ports name the instance) and, for
// every joint transition, the instance and own transition it fires.
struct Coordinated {
  ProcessDef def;
  Role joint;
  std::vector<std::pair<std::size_t, std::size_t>> origin;
  // joint mode -> own mode per instance
  std::map<std::string, std::vector<std::string>> modes_of;
};

// Free interleaving of the instances. After an instance fires, every rule
// whose trigger matches it (and whose condition holds) applies its effects in
// order: kForce queues an obligation the next step must discharge (dropped
// when the target cannot fire), kEnable and kDisable switch transitions, kSet
// assigns a variable. Throws RuleConflict and Domain on unresolved names.
Coordinated coordinate(const ProcessDef& def, std::size_t bound = 100000);

// Static conflicts: two rules with the same trigger and condition but
// different effects, or one rule enabling and disabling the same target.
void check_rules(const ProcessDef& def);

// The process seen by one partner: other instances' moves become ε, modes stay
// joint with base_mode mapping them to the instance's own modes.
Role project(const Coordinated& c, const std::string& instance);

// Own transitions fired somewhere in the joint relation, over own modes.
Role recover_role(const Coordinated& c, const std::string& instance);

struct PreservationVerdict {
  std::string protocol;
  std::string instance;
  protocol::VerificationReport original;
  protocol::VerificationReport coordinated;
  protocol::SubstitutionResult substitution;

  // Every property the original protocol had still holds.
  bool preserved() const;
  std::string str() const;
};

struct CoordinationReport {
  std::string process;
  std::vector<PreservationVerdict> verdicts;

  bool ok() const;
  std::string str() const;
};

CoordinationReport verify_coordination(const Coordinated& c,
                                       const std::vector<protocol::Protocol>& protocols,
                                       std::size_t bound = 100000);

// --- Layering ----------------------------------------------------------------

enum class EdgeKind { kApiCall, kEventSubscription, kProtocolBinding };

struct ComponentEdge {
  std::string from;
  std::string to;
  EdgeKind kind = EdgeKind::kApiCall;
  friend bool operator==(const ComponentEdge&, const ComponentEdge&) = default;
};

struct ComponentGraph {
  std::vector<std::string> nodes;
  std::vector<ComponentEdge> edges;
  friend bool operator==(const ComponentGraph&, const ComponentGraph&) = default;
};

struct LayerReport {
  bool acyclic = true;
  std::vector<std::string> cycle;  // first node repeated at the end
  std::map<std::string, std::size_t> layers;
  std::vector<std::string> violations;  // `A -> B (event_subscription, layer 2 -> 0)`

  bool ok() const { return acyclic && violations.empty(); }
  std::string str() const;
};

std::string to_string(EdgeKind k);

// Layers are longest api_call paths to a sink. Event subscriptions must rise
// strictly; protocol bindings are unconstrained.
LayerReport check_layering(const ComponentGraph& g);

}  // namespace ioa::process

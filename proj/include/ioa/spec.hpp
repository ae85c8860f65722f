#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ioa/behavior.hpp"
#include "ioa/kernel.hpp"
#include "ioa/netsim.hpp"
#include "ioa/process.hpp"
#include "ioa/protocol.hpp"
#include "ioa/types.hpp"

namespace ioa::spec {

struct Pos {
  std::size_t line = 1;
  std::size_t col = 1;
  friend bool operator==(const Pos&, const Pos&) = default;
};

struct Diagnostic {
  enum class Severity { kError, kWarning, kLint };
  Severity severity = Severity::kError;
  Pos pos;
  std::string message;
  std::vector<Pos> related;

  // `file:line:col: error: message` plus one `note` line per related position.
  std::string str(std::string_view file = "<input>") const;
};

std::string_view to_string(Diagnostic::Severity s);

struct NodeDecl {
  std::string name;
  std::string target;
  std::string kind;  // role | process | system
  friend bool operator==(const NodeDecl&, const NodeDecl&) = default;
};

struct NetworkDecl {
  std::string name;
  std::vector<NodeDecl> nodes;
  std::vector<netsim::Binding> bindings;
  std::vector<protocol::GoalPattern> goals;
  friend bool operator==(const NetworkDecl&, const NetworkDecl&) = default;
};

struct ComponentsDecl {
  std::string name;
  process::ComponentGraph graph;
  friend bool operator==(const ComponentsDecl&, const ComponentsDecl&) = default;
};

struct DeclRef {
  std::string kind;  // TYPE, PROJECTION, RELATION, SYSTEM, DOC, ROLE, ...
  std::string name;
  Pos pos;
};

// Every declaration resolved, in source order. Roles inside protocols and
// processes are copies of the declared roles.
struct SpecModel {
  std::vector<DeclRef> order;
  std::vector<types::DataType> types;
  std::vector<types::Projection> projections;
  std::vector<types::RelationDecl> relations;
  std::vector<kernel::SystemDef> systems;
  std::vector<behavior::DocumentClass> docs;
  std::vector<behavior::Role> roles;
  std::vector<protocol::Protocol> protocols;
  std::vector<process::ProcessDef> processes;
  std::vector<NetworkDecl> networks;
  std::vector<ComponentsDecl> components;

  const types::DataType* type(const std::string& name) const;
  const kernel::SystemDef* system(const std::string& name) const;
  const behavior::Role* role(const std::string& name) const;
  const protocol::Protocol* protocol(const std::string& name) const;
  const process::ProcessDef* process(const std::string& name) const;
  const NetworkDecl* network(const std::string& name) const;

  // Positions are not compared.
  friend bool operator==(const SpecModel& a, const SpecModel& b);
};

struct ParseResult {
  SpecModel model;
  std::vector<Diagnostic> diagnostics;

  bool ok() const;
  std::size_t errors() const;
};

// Never throws. Independent errors are all reported.
ParseResult parse_spec(std::string_view text);

std::string serialize(const SpecModel& model);

types::TypeHierarchy hierarchy_of(const SpecModel& model);

process::Coordinated coordinate_process(const SpecModel& model, const std::string& name,
                                        std::size_t bound = 100000);

// Process nodes are coordinated with the given bound.
netsim::Network network_of(const SpecModel& model, const std::string& name, std::size_t bound = 100000);

// `a ; b` is sequential, `a || b` parallel (binding tighter), with parentheses.
kernel::SystemDef compose(const SpecModel& model, std::string_view expr);

// The command-line front end. Exit codes: 0 success, 1 spec errors,
// 2 property or cast failure, 3 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ioa::spec

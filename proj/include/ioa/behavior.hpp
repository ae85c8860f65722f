#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ioa::behavior {

// The empty character. Reserved: it may not be declared as a user character.
inline const std::string kEpsilon = "ε";

// (i, o, p, q): input, output, source state, target state.
struct Transition {
  std::string input;
  std::string output;
  std::string from;
  std::string to;

  auto operator<=>(const Transition&) const = default;
  std::string str() const;
};

class TransitionRelation {
 public:
  TransitionRelation() = default;
  TransitionRelation(std::set<std::string> inputs, std::set<std::string> outputs,
                     std::set<std::string> states, std::vector<Transition> transitions);

  const std::set<std::string>& inputs() const { return inputs_; }
  const std::set<std::string>& outputs() const { return outputs_; }
  const std::set<std::string>& states() const { return states_; }
  // Sorted and free of duplicates.
  const std::vector<Transition>& transitions() const { return transitions_; }

  // No ε-input transitions and no two transitions share (i, p) with a
  // different (o, q).
  bool deterministic() const;

 private:
  std::set<std::string> inputs_;
  std::set<std::string> outputs_;
  std::set<std::string> states_;
  std::vector<Transition> transitions_;
};

using CellKey = std::vector<std::string>;
using PartitionKey = std::function<CellKey(const Transition&)>;
using Partition = std::map<CellKey, std::vector<Transition>>;

Partition partition_relation(const TransitionRelation& delta, const PartitionKey& key);

// A deterministic cell as a partial function (i, p) -> (o, q).
struct TransitionFunction {
  CellKey key;
  std::map<std::pair<std::string, std::string>, std::pair<std::string, std::string>> table;
};

std::vector<TransitionFunction> deterministic_cells(const TransitionRelation& delta,
                                                    const PartitionKey& key);

// Q = Q_mode x Q_rest, given as the two coordinate maps.
struct StateSplit {
  std::map<std::string, std::string> mode_of;
  std::map<std::string, std::string> rest_of;

  // Both maps total over `states` and jointly injective.
  void validate(const std::set<std::string>& states) const;
  const std::string& mode(const std::string& state) const;
  const std::string& rest(const std::string& state) const;
};

using Valuation = std::map<std::string, std::string>;

std::string format_valuation(const Valuation& v);

struct Param {
  std::string name;
  std::vector<std::string> domain;
  friend bool operator==(const Param&, const Param&) = default;
};

struct DocumentClass {
  std::string name;
  std::vector<Param> params;

  const Param* param(std::string_view name) const;
  // Every full valuation of the parameters, in domain order.
  std::vector<Valuation> valuations() const;
  // Full valuations agreeing with `fixed` on its keys.
  std::vector<Valuation> valuations(const Valuation& fixed) const;

  friend bool operator==(const DocumentClass& a, const DocumentClass& b);
};

struct ParsedChar {
  std::string doc;
  Valuation params;
};

struct ParseSpec {
  std::vector<DocumentClass> classes;
  std::map<std::string, ParsedChar> table;

  const DocumentClass* doc(std::string_view name) const;
  const ParsedChar& parse(const std::string& character) const;
  // Total over the relation's I ∪ O, classes distinct, valuations in domain.
  void validate(const TransitionRelation& delta) const;
};

// A condition over the rest state and the incoming parameters. Either a
// disjunction of conjunctions of comparisons, or a finite decision table
// keyed by (rest, formatted valuation).
struct Comparison {
  enum class Op { kEq, kNe, kLt, kLe, kGt, kGe };
  std::string lhs;  // parameter name, or `rest`
  Op op = Op::kEq;
  std::string rhs;

  bool eval(const std::string& value) const;
  std::string str() const;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct Guard {
  std::string name;
  std::optional<std::string> doc;  // document class the guard applies to
  std::vector<std::vector<Comparison>> clauses;
  std::optional<std::map<std::pair<std::string, std::string>, bool>> table;

  bool reads_rest() const;
  // `rest` is empty when no rest component is known.
  bool eval(const std::optional<std::string>& rest, const Valuation& params) const;
  std::string str() const;
  friend bool operator==(const Guard&, const Guard&) = default;
};

// Parses `a>0 & b==x | rest!=busy`. `&` binds tighter than `|`.
Guard parse_guard(std::string_view text, std::string name = {});

struct GuardedTransition {
  std::string label;  // optional, used by coordination rules
  std::string from;
  std::optional<std::string> in_doc;
  std::string in_port;
  std::optional<Guard> guard;
  std::optional<std::string> out_doc;
  Valuation out_params;  // fixed parameters; the rest are chosen freely
  std::string out_port;
  std::string to;

  std::string str() const;
  friend bool operator==(const GuardedTransition&, const GuardedTransition&) = default;
};

// A nondeterministic extended I/O-automaton over document classes.
struct Role {
  std::string name;
  std::vector<std::string> modes;
  std::string initial;
  std::vector<std::string> rest_domain;
  std::vector<DocumentClass> docs;
  std::vector<GuardedTransition> transitions;
  // For roles obtained by projection: each mode's mode in the original role.
  std::map<std::string, std::string> base_mode;
  // For roles built from a relation: the concrete transitions per guarded one.
  std::vector<std::vector<Transition>> realizations;

  const DocumentClass* doc(std::string_view name) const;
  bool has_mode(std::string_view mode) const;
  const std::string& own_mode(const std::string& mode) const;
  std::set<std::string> in_docs() const;
  std::set<std::string> out_docs() const;
  // Guard verdict possible for some rest value (or none when no rest exists).
  bool accepts(const GuardedTransition& t, const Valuation& params) const;

  // Throws Domain on undeclared modes, classes or guard parameters.
  void validate() const;
  // Warnings for transitions never realized by a concrete relation.
  std::vector<std::string> lint() const;
  friend bool operator==(const Role&, const Role&) = default;
};

// Relation view of a role: characters are `port.Doc[guard]` / `port.Doc(p=v)`.
TransitionRelation relation_of(const Role& role);

// Guards are consulted in order; the first one applying to the input's
// document class and evaluating true names the cell. Input characters whose
// class has no guard fall into the unconditioned cell.
Role make_extended_automaton(const TransitionRelation& delta, const ParseSpec& parse,
                             const StateSplit& split, const std::vector<Guard>& guards,
                             std::optional<std::string> initial_state = {},
                             std::string name = "role");

// The cell key make_extended_automaton uses: (docCls_i, docCls_o, p_mode,
// q_mode, guard verdict).
PartitionKey extended_key(const ParseSpec& parse, const StateSplit& split,
                          const std::vector<Guard>& guards);

// Every (i, o, p, q) over the relation's alphabets and states that falls
// into one of the role's guarded transitions.
std::set<Transition> expand_role(const Role& role, const TransitionRelation& alphabets,
                                 const ParseSpec& parse, const StateSplit& split,
                                 const std::vector<Guard>& guards);

// Union of the recorded realizations.
std::set<Transition> realized_relation(const Role& role);

// ε-input transitions are exceptional. For every other (i, p) the designated
// outcome, or the lexicographically least (o, q), is the deterministic one.
std::pair<TransitionRelation, TransitionRelation> split_exceptions(
    const TransitionRelation& delta,
    const std::map<std::pair<std::string, std::string>, std::pair<std::string, std::string>>&
        designated = {});

struct ModeEvent {
  std::string old_mode;
  std::string new_mode;
  friend bool operator==(const ModeEvent&, const ModeEvent&) = default;
};

struct GegoCall {
  std::string state;
  std::string result;
  std::optional<ModeEvent> event;
  friend bool operator==(const GegoCall&, const GegoCall&) = default;
};

// A deterministic object with a state pattern. Input characters are `op` or
// `op(arg)`; the operations enabled at a state depend only on its mode.
class GegoDef {
 public:
  GegoDef(TransitionRelation delta, StateSplit split,
          std::map<std::string, std::set<std::string>> enabled_ops);

  const TransitionRelation& relation() const { return delta_; }
  const StateSplit& split() const { return split_; }
  bool enabled(const std::string& mode, const std::string& op) const;

 private:
  TransitionRelation delta_;
  StateSplit split_;
  std::map<std::string, std::set<std::string>> enabled_;
  std::map<std::pair<std::string, std::string>, std::pair<std::string, std::string>> fn_;

  friend GegoCall gego_call(const GegoDef&, const std::string&, const std::string&,
                            const std::string&);
};

GegoCall gego_call(const GegoDef& g, const std::string& state, const std::string& op,
                   const std::string& arg = {});

// A running gego. Subscribers see mode events but cannot influence the
// object's own trajectory.
class Gego {
 public:
  using Subscriber = std::function<void(const ModeEvent&)>;

  Gego(GegoDef def, std::string initial);

  std::size_t subscribe(Subscriber s);
  void unsubscribe(std::size_t id);
  std::size_t subscriber_count() const { return subscribers_.size(); }

  GegoCall call(const std::string& op, const std::string& arg = {});
  const std::string& state() const { return state_; }

 private:
  GegoDef def_;
  std::string state_;
  std::map<std::size_t, Subscriber> subscribers_;
  std::size_t next_id_ = 0;
};

// Characters outside the partner alphabets become ε; states are kept.
TransitionRelation project_role(const TransitionRelation& delta,
                                const std::set<std::string>& partner_inputs,
                                const std::set<std::string>& partner_outputs);

}  // namespace ioa::behavior

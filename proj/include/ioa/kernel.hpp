#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ioa::kernel {

// A signal value. Atoms are plain names; product constructions produce
// tuples, so the state of `a ; b` is the tuple (qa, qb).
class Value {
 public:
  Value() = default;
  Value(std::string atom) : rep_(std::move(atom)) {}  // NOLINT: implicit by intent
  Value(const char* atom) : rep_(std::string(atom)) {}  // NOLINT

  static Value tuple(std::vector<Value> items);

  bool is_atom() const { return std::holds_alternative<std::string>(rep_); }
  const std::string& atom() const { return std::get<std::string>(rep_); }
  const std::vector<Value>& items() const {
    return std::get<std::vector<Value>>(rep_);
  }

  // Number of positions: 1 for an atom, the arity for a tuple.
  std::size_t width() const { return is_atom() ? 1 : items().size(); }
  const Value& component(std::size_t pos) const;
  Value with_component(std::size_t pos, const Value& v) const;

  std::string str() const;

  friend int compare(const Value& a, const Value& b);
  friend bool operator==(const Value& a, const Value& b) {
    return compare(a, b) == 0;
  }
  friend bool operator<(const Value& a, const Value& b) {
    return compare(a, b) < 0;
  }

 private:
  std::variant<std::string, std::vector<Value>> rep_;
};

// Parses the textual form produced by Value::str(): `name` or `(a,(b,c))`.
Value parse_value(const std::string& text);

// A finite deterministic system (Q, I, O, f_int, f_ext) with an initial
// state. The transition table is stored densely, row-major over Q x I, so
// every (state, input) pair has exactly one image.
class SystemDef {
 public:
  struct Entry {
    std::size_t next;
    std::size_t out;
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  using Function =
      std::function<std::pair<Value, Value>(const Value&, const Value&)>;

  SystemDef(std::string name, std::vector<Value> states,
            std::vector<Value> inputs, std::vector<Value> outputs,
            std::vector<Entry> table, std::size_t initial);

  // Tabulates `f` over states x inputs. Images outside Q or O are rejected.
  static SystemDef from_function(std::string name, std::vector<Value> states,
                                 std::vector<Value> inputs,
                                 std::vector<Value> outputs, const Function& f,
                                 const Value& initial);

  const std::string& name() const { return name_; }
  const std::vector<Value>& states() const { return states_; }
  const std::vector<Value>& inputs() const { return inputs_; }
  const std::vector<Value>& outputs() const { return outputs_; }
  const Value& initial() const { return states_[initial_]; }
  std::size_t initial_index() const { return initial_; }

  std::optional<std::size_t> state_index(const Value& v) const;
  std::optional<std::size_t> input_index(const Value& v) const;
  std::optional<std::size_t> output_index(const Value& v) const;

  const Entry& entry(std::size_t state, std::size_t input) const {
    return table_[state * inputs_.size() + input];
  }

  SystemDef renamed(std::string name) const;
  friend bool operator==(const SystemDef&, const SystemDef&) = default;

 private:
  std::string name_;
  std::vector<Value> states_;
  std::vector<Value> inputs_;
  std::vector<Value> outputs_;
  std::vector<Entry> table_;
  std::size_t initial_;
  std::map<Value, std::size_t> state_ix_;
  std::map<Value, std::size_t> input_ix_;
  std::map<Value, std::size_t> output_ix_;
};

struct TraceRow {
  std::size_t t;
  Value state;
  std::optional<Value> input;   // empty on the last row
  std::optional<Value> output;  // empty on row 0
};

struct Trace {
  std::vector<TraceRow> rows;

  std::vector<std::optional<Value>> outputs() const;
  std::vector<Value> states() const;
};

// One application of the system equation. The returned output is the value
// observed at the next time step.
std::pair<Value, Value> step(const SystemDef& system, const Value& state,
                             const Value& input);

Trace run(const SystemDef& system, const std::vector<Value>& inputs);

// b consumes, within the same outer step, the output a computes for that step.
// Q = Qa x Qb, I = Ia, O = Ob.
SystemDef compose_sequential(const SystemDef& a, const SystemDef& b);

SystemDef compose_parallel(const SystemDef& a, const SystemDef& b);

// Output position -> input position. Atoms have the single position 0.
struct FeedbackEdge {
  std::size_t output_pos;
  std::size_t input_pos;
};
using Feedback = std::vector<FeedbackEdge>;

SystemDef compose_loop(const SystemDef& a, const Feedback& feedback,
                       std::size_t iterations);

using HaltPredicate = std::function<bool(const Value&)>;

// Throws DivergenceBound if some (state, input) pair does not halt within
// max_iter internal steps; the composed system is always total.
SystemDef compose_while(const SystemDef& a, const Feedback& feedback,
                        const HaltPredicate& halt, std::size_t max_iter);

// Unidirectional dataflow graph. Exactly one source stage receives the
// pipeline input and exactly one sink stage produces the pipeline output.
struct PipelineGraph {
  std::vector<SystemDef> stages;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::vector<std::size_t> forks() const;
  std::vector<std::size_t> joins() const;
};

// Each outer step runs the stages in topological order. A stage steps once
// per datum it receives; a fork duplicates its output burst to every
// successor and a join interleaves its predecessors' bursts round-robin.
// When the sink emits more than one datum per step the pipeline output is
// the tuple of that burst.
SystemDef build_pipeline(const PipelineGraph& graph);

// A total mapping over a finite domain.
struct Operation {
  std::string name;
  std::map<Value, Value> table;

  const Value& operator()(const Value& x) const;
  friend bool operator==(const Operation& a, const Operation& b) {
    return a.table == b.table;
  }
};

// Runs the pipeline from its initial state, feeding the same datum until
// state and output stop changing; the settled output is the image.
Operation pipe_to_operation(const SystemDef& pipeline,
                            std::optional<std::size_t> max_steps = {});

SystemDef operation_to_pipe(const Operation& op,
                            std::vector<Value> outputs = {});

// Transition table rendering used by the CLI: one `(q,i) -> (q',o)` per line.
std::string format_table(const SystemDef& system);

}  // namespace ioa::kernel

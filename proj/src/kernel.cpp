#include "ioa/kernel.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

#include "ioa/error.hpp"

namespace ioa::kernel {

Value Value::tuple(std::vector<Value> items) {
  Value v;
  v.rep_ = std::move(items);
  return v;
}

const Value& Value::component(std::size_t pos) const {
  if (is_atom()) {
    if (pos != 0) {
      throw Error(ErrorCode::kDomain,
                  "position " + std::to_string(pos) + " out of range for " + str());
    }
    return *this;
  }
  if (pos >= items().size()) {
    throw Error(ErrorCode::kDomain,
                "position " + std::to_string(pos) + " out of range for " + str());
  }
  return items()[pos];
}

Value Value::with_component(std::size_t pos, const Value& v) const {
  if (is_atom()) {
    component(pos);  // range check
    return v;
  }
  auto copy = items();
  if (pos >= copy.size()) component(pos);
  copy[pos] = v;
  return tuple(std::move(copy));
}

std::string Value::str() const {
  if (is_atom()) return atom();
  std::string out = "(";
  for (std::size_t i = 0; i < items().size(); ++i) {
    if (i) out += ',';
    out += items()[i].str();
  }
  return out + ")";
}

int compare(const Value& a, const Value& b) {
  if (a.is_atom() != b.is_atom()) return a.is_atom() ? -1 : 1;
  if (a.is_atom()) return a.atom().compare(b.atom());
  const auto& x = a.items();
  const auto& y = b.items();
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (int c = compare(x[i], y[i])) return c;
  }
  if (x.size() == y.size()) return 0;
  return x.size() < y.size() ? -1 : 1;
}

namespace {

Value parse_value_at(const std::string& s, std::size_t& pos) {
  auto skip = [&] {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  };
  skip();
  if (pos < s.size() && s[pos] == '(') {
    ++pos;
    std::vector<Value> items;
    skip();
    if (pos < s.size() && s[pos] == ')') {
      ++pos;
      return Value::tuple({});
    }
    while (true) {
      items.push_back(parse_value_at(s, pos));
      skip();
      if (pos >= s.size()) throw Error(ErrorCode::kDomain, "unterminated tuple: " + s);
      if (s[pos] == ',') {
        ++pos;
        continue;
      }
      if (s[pos] == ')') {
        ++pos;
        break;
      }
      throw Error(ErrorCode::kDomain, "malformed value: " + s);
    }
    return Value::tuple(std::move(items));
  }
  std::size_t start = pos;
  while (pos < s.size() && s[pos] != '(' && s[pos] != ')' && s[pos] != ',' &&
         s[pos] != ' ' && s[pos] != '\t') {
    ++pos;
  }
  if (start == pos) throw Error(ErrorCode::kDomain, "empty value in: " + s);
  return Value(s.substr(start, pos - start));
}

std::map<Value, std::size_t> index_of(const std::vector<Value>& values,
                                      const std::string& what,
                                      const std::string& system) {
  std::map<Value, std::size_t> ix;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!ix.emplace(values[i], i).second) {
      throw Error(ErrorCode::kDomain, "system " + system + ": duplicate " +
                                          what + " value " + values[i].str());
    }
  }
  return ix;
}

std::vector<Value> sorted(std::vector<Value> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::string alphabet_str(const std::vector<Value>& values) {
  std::string out = "{";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += values[i].str();
  }
  return out + "}";
}

std::vector<Value> product(const std::vector<Value>& a,
                           const std::vector<Value>& b) {
  std::vector<Value> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a) {
    for (const auto& y : b) out.push_back(Value::tuple({x, y}));
  }
  return out;
}

// The set of values appearing at `pos` across an alphabet.
std::vector<Value> position_alphabet(const std::vector<Value>& alphabet,
                                     std::size_t pos, const std::string& what) {
  std::set<Value> out;
  for (const auto& v : alphabet) {
    if (pos >= v.width()) {
      throw Error(ErrorCode::kComposition,
                  what + " position " + std::to_string(pos) +
                      " does not exist in value " + v.str());
    }
    out.insert(v.component(pos));
  }
  return {out.begin(), out.end()};
}

void check_feedback(const SystemDef& a, const Feedback& feedback) {
  for (const auto& edge : feedback) {
    auto outs = position_alphabet(a.outputs(), edge.output_pos, "output");
    auto ins = position_alphabet(a.inputs(), edge.input_pos, "input");
    if (outs != ins) {
      throw Error(ErrorCode::kComposition,
                  "feedback edge " + std::to_string(edge.output_pos) + "->" +
                      std::to_string(edge.input_pos) + " connects " +
                      alphabet_str(outs) + " to " + alphabet_str(ins));
    }
  }
}

Value feed_back(const Value& input, const Value& output,
                const Feedback& feedback) {
  Value next = input;
  for (const auto& edge : feedback) {
    next = next.with_component(edge.input_pos, output.component(edge.output_pos));
  }
  return next;
}

// Shared driver for loop and while: iterates internal steps per (q, i).
SystemDef iterate_internally(const SystemDef& a, const Feedback& feedback,
                             std::size_t max_iter, const HaltPredicate* halt,
                             const std::string& name) {
  const auto& Q = a.states();
  const auto& I = a.inputs();
  std::vector<SystemDef::Entry> table;
  table.reserve(Q.size() * I.size());
  for (std::size_t q = 0; q < Q.size(); ++q) {
    for (std::size_t i = 0; i < I.size(); ++i) {
      std::size_t state = q;
      std::size_t in = i;
      std::size_t out = 0;
      bool halted = false;
      for (std::size_t k = 1; k <= max_iter; ++k) {
        const auto& e = a.entry(state, in);
        state = e.next;
        out = e.out;
        if (halt && (*halt)(a.outputs()[out])) {
          halted = true;
          break;
        }
        if (k == max_iter) break;
        Value fed = feed_back(I[in], a.outputs()[out], feedback);
        auto idx = a.input_index(fed);
        if (!idx) {
          throw Error(ErrorCode::kComposition,
                      "fed-back input " + fed.str() + " is not in the input alphabet of " +
                          a.name());
        }
        in = *idx;
      }
      if (halt && !halted) {
        throw Error(ErrorCode::kDivergenceBound,
                    name + " does not halt within " + std::to_string(max_iter) +
                        " internal steps from (" + Q[q].str() + "," + I[i].str() + ")");
      }
      table.push_back({state, out});
    }
  }
  return SystemDef(name, Q, I, a.outputs(), std::move(table), a.initial_index());
}

}  // namespace

Value parse_value(const std::string& text) {
  std::size_t pos = 0;
  Value v = parse_value_at(text, pos);
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  if (pos != text.size()) throw Error(ErrorCode::kDomain, "trailing input in value: " + text);
  return v;
}

SystemDef::SystemDef(std::string name, std::vector<Value> states,
                     std::vector<Value> inputs, std::vector<Value> outputs,
                     std::vector<Entry> table, std::size_t initial)
    : name_(std::move(name)),
      states_(std::move(states)),
      inputs_(std::move(inputs)),
      outputs_(std::move(outputs)),
      table_(std::move(table)),
      initial_(initial) {
  if (states_.empty()) {
    throw Error(ErrorCode::kDomain, "system " + name_ + " has no states");
  }
  state_ix_ = index_of(states_, "state", name_);
  input_ix_ = index_of(inputs_, "input", name_);
  output_ix_ = index_of(outputs_, "output", name_);
  if (initial_ >= states_.size()) {
    throw Error(ErrorCode::kDomain, "system " + name_ + ": initial state out of range");
  }
  if (table_.size() != states_.size() * inputs_.size()) {
    throw Error(ErrorCode::kDomain, "system " + name_ + ": transition table is not total");
  }
  for (const auto& e : table_) {
    if (e.next >= states_.size() || e.out >= outputs_.size()) {
      throw Error(ErrorCode::kDomain,
                  "system " + name_ + ": transition image outside Q x O");
    }
  }
}

SystemDef SystemDef::from_function(std::string name, std::vector<Value> states,
                                   std::vector<Value> inputs,
                                   std::vector<Value> outputs, const Function& f,
                                   const Value& initial) {
  auto qix = index_of(states, "state", name);
  auto oix = index_of(outputs, "output", name);
  std::vector<Entry> table;
  table.reserve(states.size() * inputs.size());
  for (const auto& q : states) {
    for (const auto& i : inputs) {
      auto [next, out] = f(q, i);
      auto n = qix.find(next);
      auto o = oix.find(out);
      if (n == qix.end()) {
        throw Error(ErrorCode::kDomain, "system " + name + ": f_int(" + q.str() +
                                            "," + i.str() + ") = " + next.str() +
                                            " is not a state");
      }
      if (o == oix.end()) {
        throw Error(ErrorCode::kDomain, "system " + name + ": f_ext(" + q.str() +
                                            "," + i.str() + ") = " + out.str() +
                                            " is not an output");
      }
      table.push_back({n->second, o->second});
    }
  }
  auto init = qix.find(initial);
  if (init == qix.end()) {
    throw Error(ErrorCode::kDomain,
                "system " + name + ": initial " + initial.str() + " is not a state");
  }
  return SystemDef(std::move(name), std::move(states), std::move(inputs),
                   std::move(outputs), std::move(table), init->second);
}

std::optional<std::size_t> SystemDef::state_index(const Value& v) const {
  auto it = state_ix_.find(v);
  if (it == state_ix_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> SystemDef::input_index(const Value& v) const {
  auto it = input_ix_.find(v);
  if (it == input_ix_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> SystemDef::output_index(const Value& v) const {
  auto it = output_ix_.find(v);
  if (it == output_ix_.end()) return std::nullopt;
  return it->second;
}

SystemDef SystemDef::renamed(std::string name) const {
  SystemDef copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

std::vector<std::optional<Value>> Trace::outputs() const {
  std::vector<std::optional<Value>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.output);
  return out;
}

std::vector<Value> Trace::states() const {
  std::vector<Value> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.state);
  return out;
}

std::pair<Value, Value> step(const SystemDef& system, const Value& state,
                             const Value& input) {
  auto q = system.state_index(state);
  if (!q) {
    throw Error(ErrorCode::kDomain,
                "state " + state.str() + " is not a state of " + system.name());
  }
  auto i = system.input_index(input);
  if (!i) {
    throw Error(ErrorCode::kDomain,
                "input " + input.str() + " is not an input of " + system.name());
  }
  const auto& e = system.entry(*q, *i);
  return {system.states()[e.next], system.outputs()[e.out]};
}

Trace run(const SystemDef& system, const std::vector<Value>& inputs) {
  Trace trace;
  trace.rows.reserve(inputs.size() + 1);
  trace.rows.push_back({0, system.initial(), std::nullopt, std::nullopt});
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    std::pair<Value, Value> next;
    try {
      next = step(system, trace.rows.back().state, inputs[t]);
    } catch (const Error& e) {
      throw Error(e.code(), "at step " + std::to_string(t) + ": " + e.detail());
    }
    trace.rows.back().input = inputs[t];
    trace.rows.push_back({t + 1, std::move(next.first), std::nullopt,
                          std::move(next.second)});
  }
  return trace;
}

SystemDef compose_sequential(const SystemDef& a, const SystemDef& b) {
  if (sorted(a.outputs()) != sorted(b.inputs())) {
    throw Error(ErrorCode::kComposition,
                "cannot compose " + a.name() + " ; " + b.name() + ": outputs " +
                    alphabet_str(a.outputs()) + " != inputs " +
                    alphabet_str(b.inputs()));
  }
  const std::size_t nb = b.states().size();
  std::vector<SystemDef::Entry> table;
  table.reserve(a.states().size() * nb * a.inputs().size());
  for (std::size_t qa = 0; qa < a.states().size(); ++qa) {
    for (std::size_t qb = 0; qb < nb; ++qb) {
      for (std::size_t i = 0; i < a.inputs().size(); ++i) {
        const auto& ea = a.entry(qa, i);
        std::size_t ib = *b.input_index(a.outputs()[ea.out]);
        const auto& eb = b.entry(qb, ib);
        table.push_back({ea.next * nb + eb.next, eb.out});
      }
    }
  }
  return SystemDef("(" + a.name() + ";" + b.name() + ")",
                   product(a.states(), b.states()), a.inputs(), b.outputs(),
                   std::move(table), a.initial_index() * nb + b.initial_index());
}

SystemDef compose_parallel(const SystemDef& a, const SystemDef& b) {
  const std::size_t nb = b.states().size();
  const std::size_t ib_n = b.inputs().size();
  const std::size_t ob_n = b.outputs().size();
  std::vector<SystemDef::Entry> table;
  table.reserve(a.states().size() * nb * a.inputs().size() * ib_n);
  for (std::size_t qa = 0; qa < a.states().size(); ++qa) {
    for (std::size_t qb = 0; qb < nb; ++qb) {
      for (std::size_t ia = 0; ia < a.inputs().size(); ++ia) {
        for (std::size_t ib = 0; ib < ib_n; ++ib) {
          const auto& ea = a.entry(qa, ia);
          const auto& eb = b.entry(qb, ib);
          table.push_back({ea.next * nb + eb.next, ea.out * ob_n + eb.out});
        }
      }
    }
  }
  return SystemDef("(" + a.name() + "|" + b.name() + ")",
                   product(a.states(), b.states()), product(a.inputs(), b.inputs()),
                   product(a.outputs(), b.outputs()), std::move(table),
                   a.initial_index() * nb + b.initial_index());
}

SystemDef compose_loop(const SystemDef& a, const Feedback& feedback,
                       std::size_t iterations) {
  if (iterations == 0) {
    throw Error(ErrorCode::kComposition, "loop over " + a.name() + " needs at least one iteration");
  }
  check_feedback(a, feedback);
  return iterate_internally(a, feedback, iterations, nullptr,
                            "loop[" + std::to_string(iterations) + "](" + a.name() + ")");
}

SystemDef compose_while(const SystemDef& a, const Feedback& feedback,
                        const HaltPredicate& halt, std::size_t max_iter) {
  if (max_iter == 0) {
    throw Error(ErrorCode::kComposition, "while over " + a.name() + " needs max_iter >= 1");
  }
  check_feedback(a, feedback);
  return iterate_internally(a, feedback, max_iter, &halt, "while(" + a.name() + ")");
}

std::vector<std::size_t> PipelineGraph::forks() const {
  std::vector<std::size_t> degree(stages.size(), 0);
  for (const auto& [from, to] : edges) {
    if (from < degree.size()) ++degree[from];
  }
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < degree.size(); ++s) {
    if (degree[s] > 1) out.push_back(s);
  }
  return out;
}

std::vector<std::size_t> PipelineGraph::joins() const {
  std::vector<std::size_t> degree(stages.size(), 0);
  for (const auto& [from, to] : edges) {
    if (to < degree.size()) ++degree[to];
  }
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < degree.size(); ++s) {
    if (degree[s] > 1) out.push_back(s);
  }
  return out;
}

SystemDef build_pipeline(const PipelineGraph& graph) {
  const std::size_t n = graph.stages.size();
  if (n == 0) throw Error(ErrorCode::kComposition, "pipeline has no stages");
  std::vector<std::vector<std::size_t>> preds(n), succs(n);
  for (const auto& [from, to] : graph.edges) {
    if (from >= n || to >= n) {
      throw Error(ErrorCode::kComposition, "pipeline edge references a missing stage");
    }
    const auto& a = graph.stages[from];
    const auto& b = graph.stages[to];
    if (sorted(a.outputs()) != sorted(b.inputs())) {
      throw Error(ErrorCode::kComposition,
                  "pipeline edge " + a.name() + " -> " + b.name() + ": outputs " +
                      alphabet_str(a.outputs()) + " != inputs " +
                      alphabet_str(b.inputs()));
    }
    succs[from].push_back(to);
    preds[to].push_back(from);
  }

  // Kahn's algorithm, smallest index first so the order is canonical.
  std::vector<std::size_t> indeg(n), order;
  for (std::size_t s = 0; s < n; ++s) indeg[s] = preds[s].size();
  std::set<std::size_t> ready;
  for (std::size_t s = 0; s < n; ++s) {
    if (indeg[s] == 0) ready.insert(s);
  }
  while (!ready.empty()) {
    std::size_t s = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(s);
    for (std::size_t t : succs[s]) {
      if (--indeg[t] == 0) ready.insert(t);
    }
  }
  if (order.size() != n) throw Error(ErrorCode::kPipelineCycle, "pipeline graph contains a cycle");

  std::vector<std::size_t> sources, sinks;
  for (std::size_t s = 0; s < n; ++s) {
    if (preds[s].empty()) sources.push_back(s);
    if (succs[s].empty()) sinks.push_back(s);
  }
  if (sources.size() != 1 || sinks.size() != 1) {
    throw Error(ErrorCode::kComposition,
                "pipeline needs exactly one source and one sink stage");
  }
  const std::size_t source = sources[0];
  const std::size_t sink = sinks[0];

  std::vector<std::size_t> burst(n, 0);
  for (std::size_t s : order) {
    if (s == source) {
      burst[s] = 1;
    } else {
      for (std::size_t p : preds[s]) burst[s] += burst[p];
    }
  }

  const auto& sink_out = graph.stages[sink].outputs();
  std::vector<Value> outputs;
  if (burst[sink] == 1) {
    outputs = sink_out;
  } else {
    std::vector<std::vector<Value>> acc{{}};
    for (std::size_t k = 0; k < burst[sink]; ++k) {
      std::vector<std::vector<Value>> next;
      for (const auto& prefix : acc) {
        for (const auto& o : sink_out) {
          auto v = prefix;
          v.push_back(o);
          next.push_back(std::move(v));
        }
      }
      acc = std::move(next);
    }
    for (auto& items : acc) outputs.push_back(Value::tuple(std::move(items)));
  }
  std::map<Value, std::size_t> out_ix;
  for (std::size_t k = 0; k < outputs.size(); ++k) out_ix.emplace(outputs[k], k);

  // Joint state: mixed radix over the stages in index order.
  std::size_t nstates = 1;
  for (const auto& st : graph.stages) nstates *= st.states().size();
  auto decode = [&](std::size_t code) {
    std::vector<std::size_t> digits(n);
    for (std::size_t s = n; s-- > 0;) {
      std::size_t radix = graph.stages[s].states().size();
      digits[s] = code % radix;
      code /= radix;
    }
    return digits;
  };
  auto encode = [&](const std::vector<std::size_t>& digits) {
    std::size_t code = 0;
    for (std::size_t s = 0; s < n; ++s) {
      code = code * graph.stages[s].states().size() + digits[s];
    }
    return code;
  };

  std::vector<Value> states;
  states.reserve(nstates);
  for (std::size_t code = 0; code < nstates; ++code) {
    auto digits = decode(code);
    if (n == 1) {
      states.push_back(graph.stages[0].states()[digits[0]]);
    } else {
      std::vector<Value> items;
      for (std::size_t s = 0; s < n; ++s) items.push_back(graph.stages[s].states()[digits[s]]);
      states.push_back(Value::tuple(std::move(items)));
    }
  }

  const auto& inputs = graph.stages[source].inputs();
  std::vector<SystemDef::Entry> table;
  table.reserve(nstates * inputs.size());
  for (std::size_t code = 0; code < nstates; ++code) {
    for (const auto& input : inputs) {
      auto digits = decode(code);
      std::vector<std::vector<Value>> emitted(n);
      for (std::size_t s : order) {
        std::vector<Value> incoming;
        if (s == source) {
          incoming.push_back(input);
        } else {
          std::vector<std::size_t> cursor(preds[s].size(), 0);
          bool progressed = true;
          while (progressed) {
            progressed = false;
            for (std::size_t k = 0; k < preds[s].size(); ++k) {
              const auto& src = emitted[preds[s][k]];
              if (cursor[k] < src.size()) {
                incoming.push_back(src[cursor[k]++]);
                progressed = true;
              }
            }
          }
        }
        const auto& stage = graph.stages[s];
        for (const auto& datum : incoming) {
          const auto& e = stage.entry(digits[s], *stage.input_index(datum));
          digits[s] = e.next;
          emitted[s].push_back(stage.outputs()[e.out]);
        }
      }
      Value out = burst[sink] == 1 ? emitted[sink][0] : Value::tuple(emitted[sink]);
      table.push_back({encode(digits), out_ix.at(out)});
    }
  }

  std::vector<std::size_t> init(n);
  for (std::size_t s = 0; s < n; ++s) init[s] = graph.stages[s].initial_index();
  std::string name = "pipe(";
  for (std::size_t s = 0; s < n; ++s) name += (s ? "," : "") + graph.stages[s].name();
  name += ")";
  return SystemDef(n == 1 ? graph.stages[0].name() : name, std::move(states), inputs,
                   std::move(outputs), std::move(table), encode(init));
}

const Value& Operation::operator()(const Value& x) const {
  auto it = table.find(x);
  if (it == table.end()) {
    throw Error(ErrorCode::kDomain, "operation " + name + " is not defined on " + x.str());
  }
  return it->second;
}

Operation pipe_to_operation(const SystemDef& pipeline,
                            std::optional<std::size_t> max_steps) {
  const std::size_t limit = max_steps.value_or(pipeline.states().size() + 2);
  Operation op{pipeline.name(), {}};
  for (std::size_t i = 0; i < pipeline.inputs().size(); ++i) {
    std::size_t state = pipeline.initial_index();
    std::optional<std::size_t> prev_out;
    bool settled = false;
    for (std::size_t k = 0; k < limit; ++k) {
      const auto& e = pipeline.entry(state, i);
      if (e.next == state && prev_out == e.out) {
        settled = true;
        break;
      }
      state = e.next;
      prev_out = e.out;
    }
    if (!settled) {
      throw Error(ErrorCode::kDivergenceBound,
                  pipeline.name() + " does not quiesce on input " +
                      pipeline.inputs()[i].str() + " within " +
                      std::to_string(limit) + " steps");
    }
    op.table.emplace(pipeline.inputs()[i], pipeline.outputs()[*prev_out]);
  }
  return op;
}

SystemDef operation_to_pipe(const Operation& op, std::vector<Value> outputs) {
  if (outputs.empty()) {
    std::set<Value> images;
    for (const auto& [x, y] : op.table) images.insert(y);
    outputs.assign(images.begin(), images.end());
  }
  std::vector<Value> inputs;
  for (const auto& [x, y] : op.table) inputs.push_back(x);
  return SystemDef::from_function(
      op.name, {Value("_")}, std::move(inputs), std::move(outputs),
      [&](const Value& q, const Value& i) { return std::pair<Value, Value>{q, op(i)}; },
      Value("_"));
}

std::string format_table(const SystemDef& system) {
  std::ostringstream os;
  os << "system " << system.name() << "\n";
  os << "init " << system.initial().str() << "\n";
  for (std::size_t q = 0; q < system.states().size(); ++q) {
    for (std::size_t i = 0; i < system.inputs().size(); ++i) {
      const auto& e = system.entry(q, i);
      os << "(" << system.states()[q].str() << "," << system.inputs()[i].str()
         << ") -> (" << system.states()[e.next].str() << ","
         << system.outputs()[e.out].str() << ")\n";
    }
  }
  return os.str();
}

}  // namespace ioa::kernel

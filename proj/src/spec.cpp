#include "ioa/spec.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "ioa/error.hpp"

namespace ioa::spec {

using behavior::DocumentClass;
using behavior::GuardedTransition;
using behavior::Role;

std::string_view to_string(Diagnostic::Severity s) {
  switch (s) {
    case Diagnostic::Severity::kError: return "error";
    case Diagnostic::Severity::kWarning: return "warning";
    case Diagnostic::Severity::kLint: return "lint";
  }
  return "";
}

std::string Diagnostic::str(std::string_view file) const {
  auto at = [&](const Pos& p) {
    return std::string(file) + ":" + std::to_string(p.line) + ":" + std::to_string(p.col);
  };
  std::string out = at(pos) + ": " + std::string(to_string(severity)) + ": " + message;
  for (const auto& r : related) out += "\n" + at(r) + ": note: related declaration";
  return out;
}

namespace {

template <class T>
const T* find_named(const std::vector<T>& v, const std::string& name) {
  for (const auto& x : v) {
    if (x.name == name) return &x;
  }
  return nullptr;
}

}  // namespace

const types::DataType* SpecModel::type(const std::string& name) const {
  for (const auto& t : types) {
    if (t.name() == name) return &t;
  }
  return nullptr;
}

const kernel::SystemDef* SpecModel::system(const std::string& name) const {
  for (const auto& s : systems) {
    if (s.name() == name) return &s;
  }
  return nullptr;
}

const Role* SpecModel::role(const std::string& name) const { return find_named(roles, name); }
const protocol::Protocol* SpecModel::protocol(const std::string& name) const { return find_named(protocols, name); }
const process::ProcessDef* SpecModel::process(const std::string& name) const { return find_named(processes, name); }
const NetworkDecl* SpecModel::network(const std::string& name) const { return find_named(networks, name); }

bool operator==(const SpecModel& a, const SpecModel& b) {
  if (a.order.size() != b.order.size()) return false;
  for (std::size_t i = 0; i < a.order.size(); ++i) {
    if (a.order[i].kind != b.order[i].kind || a.order[i].name != b.order[i].name) return false;
  }
  return a.types == b.types && a.projections == b.projections && a.relations == b.relations &&
         a.systems == b.systems && a.docs == b.docs && a.roles == b.roles && a.protocols == b.protocols &&
         a.processes == b.processes && a.networks == b.networks && a.components == b.components;
}

bool ParseResult::ok() const { return errors() == 0; }

std::size_t ParseResult::errors() const {
  return static_cast<std::size_t>(std::count_if(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) {
    return d.severity == Diagnostic::Severity::kError;
  }));
}

// --- Lexer -------------------------------------------------------------------

namespace {

enum class Tok { kWord, kString, kPunct, kNewline, kEnd };

struct Token {
  Tok kind;
  std::string text;
  Pos pos;
  std::size_t offset = 0;
  std::size_t end = 0;
};

bool word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || u >= 0x80;
}

std::vector<Token> lex(std::string_view src, std::vector<Diagnostic>& diags) {
  static const char* const multi[] = {"<->", "-->", "--", "->", "==", "!=", "<=", ">=", "..", "||"};
  static const std::string_view single = "{}()[],:;=.?!@*/&|<>";
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    Pos pos{line, col};
    std::size_t start = i;
    if (c == '\n') {
      advance(1);
      out.push_back({Tok::kNewline, "\n", pos, start, i});
    } else if (c == ' ' || c == '\t' || c == '\r') {
      advance(1);
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
    } else if (c == '"') {
      advance(1);
      std::string text;
      bool closed = false;
      while (i < src.size() && src[i] != '\n') {
        if (src[i] == '\\' && i + 1 < src.size() && src[i + 1] != '\n') {
          text += src[i + 1];
          advance(2);
        } else if (src[i] == '"') {
          advance(1);
          closed = true;
          break;
        } else {
          text += src[i];
          advance(1);
        }
      }
      if (!closed) diags.push_back({Diagnostic::Severity::kError, pos, "unterminated string", {}});
      out.push_back({Tok::kString, text, pos, start, i});
    } else if (word_char(c)) {
      while (i < src.size() && word_char(src[i])) advance(1);
      out.push_back({Tok::kWord, std::string(src.substr(start, i - start)), pos, start, i});
    } else {
      std::string p;
      for (const char* m : multi) {
        if (src.substr(i, std::char_traits<char>::length(m)) == m) {
          p = m;
          break;
        }
      }
      if (p.empty() && single.find(c) != std::string_view::npos) p = std::string(1, c);
      if (p.empty()) {
        diags.push_back({Diagnostic::Severity::kError, pos,
                         "unexpected character '" + std::string(1, c) + "'", {}});
        advance(1);
        continue;
      }
      advance(p.size());
      out.push_back({Tok::kPunct, p, pos, start, i});
    }
  }
  out.push_back({Tok::kEnd, "", Pos{line, col}, src.size(), src.size()});
  return out;
}

// --- Syntax ------------------------------------------------------------------

struct SyntaxError {
  Pos pos;
  std::string message;
};

struct RawDesc {
  enum class Kind { kEnum, kString, kRecord, kRef };
  Kind kind = Kind::kEnum;
  Pos pos;
  std::vector<std::string> atoms;
  std::string charset;
  bool charset_literal = false;
  std::size_t maxlen = 0;
  std::vector<std::pair<std::string, RawDesc>> fields;
  std::string ref;
};

struct RawType {
  std::string name;
  Pos pos;
  RawDesc desc;
};

struct RawOp {
  std::string name, type;
  Pos pos;
  RawDesc desc;
};

struct RawProjection {
  types::Projection value;
  Pos pos;
};

struct RawRelation {
  types::RelationDecl value;
  Pos pos;
};

struct RawEntry {
  std::string q, i, q2, o;
  Pos pos;
};

struct RawSystem {
  std::string name;
  Pos pos;
  std::vector<std::string> states, inputs, outputs;
  std::optional<std::pair<std::string, Pos>> init;
  std::vector<RawEntry> entries;
};

struct RawParam {
  std::string name;
  Pos pos;
  std::vector<std::string> values;
  std::string ref;  // enumerated type
};

struct RawDoc {
  std::string name;
  Pos pos;
  std::vector<RawParam> params;
};

struct Named {
  std::string name;
  Pos pos;
};

struct RawRole {
  std::string name;
  Pos pos;
  std::vector<Named> modes;
  std::optional<Named> init;
  std::vector<std::string> rest;
  std::vector<Named> docs;
  std::vector<std::pair<GuardedTransition, Pos>> transitions;
};

struct RawProtocol {
  std::string name;
  Pos pos;
  std::vector<Named> roles;
  std::vector<std::pair<protocol::Channel, Pos>> channels;
  std::vector<std::pair<protocol::GoalPattern, Pos>> goals;
  std::size_t capacity = 1;
  std::string model = "exhaustive";
};

struct RawInstance {
  std::string name, role, protocol, slot;
  Pos pos;
};

struct RawProcess {
  std::string name;
  Pos pos;
  std::vector<RawInstance> instances;
  std::vector<std::pair<std::pair<std::string, std::string>, Pos>> vars;
  std::vector<std::pair<process::Selector, Pos>> disables;
  std::vector<std::pair<process::CoordinationRule, Pos>> rules;
};

struct RawNode {
  std::string name, target;
  Pos pos;
};

struct RawNetwork {
  std::string name;
  Pos pos;
  std::vector<RawNode> nodes;
  std::vector<std::pair<netsim::Binding, Pos>> bindings;
  std::vector<std::pair<protocol::GoalPattern, Pos>> goals;
};

struct RawComponents {
  std::string name;
  Pos pos;
  std::vector<Named> nodes;
  std::vector<std::pair<process::ComponentEdge, Pos>> edges;
};

struct RawSpec {
  std::vector<DeclRef> order;
  std::vector<RawType> types;
  std::vector<RawOp> ops;
  std::vector<RawProjection> projections;
  std::vector<RawRelation> relations;
  std::vector<RawSystem> systems;
  std::vector<RawDoc> docs;
  std::vector<RawRole> roles;
  std::vector<RawProtocol> protocols;
  std::vector<RawProcess> processes;
  std::vector<RawNetwork> networks;
  std::vector<RawComponents> components;
};

constexpr std::size_t kMaxDepth = 64;
constexpr std::size_t kMaxRange = 10000;

class Parser {
 public:
  Parser(std::string_view src, std::vector<Token> toks, std::vector<Diagnostic>& diags)
      : src_(src), toks_(std::move(toks)), diags_(diags) {}

  RawSpec parse() {
    for (;;) {
      skip_separators();
      if (at_end()) break;
      const Token& t = peek();
      try {
        if (t.kind != Tok::kWord) fail(t.pos, "expected a declaration, found " + describe(t));
        if (t.text == "TYPE") type_decl();
        else if (t.text == "OPERATION") op_decl();
        else if (t.text == "PROJECTION") projection_decl();
        else if (t.text == "RELATION") relation_decl();
        else if (t.text == "DOC") doc_decl();
        else if (t.text == "SYSTEM") block(t.text, [&](const std::string& n, Pos p) { out_.systems.push_back({n, p, {}, {}, {}, std::nullopt, {}}); }, [&] { system_stmt(); });
        else if (t.text == "ROLE") block(t.text, [&](const std::string& n, Pos p) { out_.roles.push_back({n, p, {}, std::nullopt, {}, {}, {}}); }, [&] { role_stmt(); });
        else if (t.text == "PROTOCOL") block(t.text, [&](const std::string& n, Pos p) { out_.protocols.push_back({n, p, {}, {}, {}, 1, "exhaustive"}); }, [&] { protocol_stmt(); });
        else if (t.text == "PROCESS") block(t.text, [&](const std::string& n, Pos p) { out_.processes.push_back({n, p, {}, {}, {}, {}}); }, [&] { process_stmt(); });
        else if (t.text == "NETWORK") block(t.text, [&](const std::string& n, Pos p) { out_.networks.push_back({n, p, {}, {}, {}}); }, [&] { network_stmt(); });
        else if (t.text == "COMPONENTS") block(t.text, [&](const std::string& n, Pos p) { out_.components.push_back({n, p, {}, {}}); }, [&] { components_stmt(); });
        else fail(t.pos, "unknown declaration '" + t.text + "'");
      } catch (const SyntaxError& e) {
        error(e.pos, e.message);
        recover_statement(true);
      }
    }
    return std::move(out_);
  }

 private:
  // --- token helpers

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(i_ + k, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Tok::kEnd; }
  bool at_punct(std::string_view p, std::size_t k = 0) const {
    return peek(k).kind == Tok::kPunct && peek(k).text == p;
  }
  bool at_word(std::string_view w) const { return peek().kind == Tok::kWord && peek().text == w; }
  const Token& next() {
    const Token& t = peek();
    if (i_ < toks_.size() - 1) ++i_;
    return t;
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::kNewline: return "end of line";
      case Tok::kEnd: return "end of input";
      case Tok::kString: return "string \"" + t.text + "\"";
      default: return "'" + t.text + "'";
    }
  }

  [[noreturn]] static void fail(Pos pos, std::string msg) { throw SyntaxError{pos, std::move(msg)}; }

  void error(Pos pos, std::string msg) {
    diags_.push_back({Diagnostic::Severity::kError, pos, std::move(msg), {}});
  }

  void expect(std::string_view p) {
    if (!at_punct(p)) fail(peek().pos, "expected '" + std::string(p) + "', found " + describe(peek()));
    next();
  }

  bool accept(std::string_view p) {
    if (!at_punct(p)) return false;
    next();
    return true;
  }

  std::string word(std::string_view what) {
    if (peek().kind != Tok::kWord) fail(peek().pos, "expected " + std::string(what) + ", found " + describe(peek()));
    return next().text;
  }

  // A word or a quoted string.
  std::string atom(std::string_view what) {
    if (peek().kind == Tok::kString) return next().text;
    return word(what);
  }

  std::size_t number(std::string_view what) {
    const Token& t = peek();
    std::size_t v = 0;
    auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (t.kind != Tok::kWord || r.ec != std::errc() || r.ptr != t.text.data() + t.text.size()) {
      fail(t.pos, "expected " + std::string(what) + ", found " + describe(t));
    }
    next();
    return v;
  }

  void keyword(std::string_view w) {
    if (!at_word(w)) fail(peek().pos, "expected '" + std::string(w) + "', found " + describe(peek()));
    next();
  }

  void skip_newlines() {
    while (peek().kind == Tok::kNewline) next();
  }

  void skip_separators() {
    while (peek().kind == Tok::kNewline || at_punct(";")) next();
  }

  bool at_statement_end() const {
    return peek().kind == Tok::kNewline || peek().kind == Tok::kEnd || at_punct(";") || at_punct("}");
  }

  void end_statement() {
    if (!at_statement_end()) fail(peek().pos, "unexpected " + describe(peek()) + " at end of statement");
    if (!at_punct("}")) next();
  }

  // Skips to the end of the current statement. At top level a brace opened on
  // the way is skipped up to its match, so a broken block header drops the
  // whole block.
  void recover_statement(bool top) {
    int depth = 0;
    while (!at_end()) {
      const Token& t = peek();
      if (depth == 0 && (t.kind == Tok::kNewline || (t.kind == Tok::kPunct && t.text == ";"))) {
        next();
        return;
      }
      if (t.kind == Tok::kPunct && t.text == "{") ++depth;
      if (t.kind == Tok::kPunct && t.text == "}") {
        if (depth == 0) {
          if (top) next();
          return;
        }
        if (--depth == 0 && top) {
          next();
          return;
        }
      }
      next();
    }
  }

  // `{ a, b, c }` with optional commas and line breaks.
  std::vector<Named> name_set(std::string_view what) {
    expect("{");
    std::vector<Named> out;
    for (;;) {
      skip_newlines();
      if (accept("}")) break;
      Pos p = peek().pos;
      out.push_back({atom(what), p});
      skip_newlines();
      if (!accept(",")) {
        skip_newlines();
        if (!at_punct("}") && peek().kind != Tok::kWord && peek().kind != Tok::kString) {
          fail(peek().pos, "expected ',' or '}', found " + describe(peek()));
        }
      }
    }
    return out;
  }

  static std::vector<std::string> names(const std::vector<Named>& v) {
    std::vector<std::string> out;
    for (const auto& n : v) out.push_back(n.name);
    return out;
  }

  // Raw text between `[` and the matching `]`.
  std::string bracket_text() {
    const Token& open = peek();
    expect("[");
    int depth = 1;
    for (;;) {
      const Token& t = peek();
      if (t.kind == Tok::kNewline || t.kind == Tok::kEnd) fail(t.pos, "unterminated guard");
      if (t.kind == Tok::kPunct && t.text == "[") ++depth;
      if (t.kind == Tok::kPunct && t.text == "]" && --depth == 0) {
        std::string text(src_.substr(open.end, t.offset - open.end));
        next();
        return text;
      }
      next();
    }
  }

  behavior::Guard guard_from(const std::string& text, Pos pos) {
    try {
      return behavior::parse_guard(text);
    } catch (const Error& e) {
      fail(pos, e.detail());
    }
  }

  // Reads `NAME` after the keyword; also records the declaration.
  std::pair<std::string, Pos> header(const std::string& kind) {
    Pos pos = next().pos;
    std::string name = word("a name");
    out_.order.push_back({kind, name, pos});
    return {name, pos};
  }

  template <class Start, class Stmt>
  void block(const std::string& kind, Start start, Stmt stmt) {
    auto [name, pos] = header(kind);
    start(name, pos);
    expect("{");
    for (;;) {
      skip_separators();
      if (accept("}")) break;
      if (at_end()) {
        error(peek().pos, "unterminated " + kind + " " + name);
        return;
      }
      try {
        stmt();
      } catch (const SyntaxError& e) {
        error(e.pos, e.message);
        recover_statement(false);
      }
    }
    end_statement();
  }

  // --- types

  RawDesc desc(std::size_t depth) {
    if (depth > kMaxDepth) fail(peek().pos, "type nesting too deep");
    RawDesc d;
    d.pos = peek().pos;
    std::string head = word("a value set");
    if (head == "enum" && at_punct("{")) {
      d.kind = RawDesc::Kind::kEnum;
      d.atoms = names(name_set("an enumeration atom"));
    } else if (head == "string" && at_punct("(")) {
      d.kind = RawDesc::Kind::kString;
      next();
      bool have_charset = false, have_len = false;
      for (;;) {
        Pos kp = peek().pos;
        std::string key = word("charset or maxlen");
        expect("=");
        if (key == "charset") {
          d.charset_literal = peek().kind == Tok::kString;
          d.charset = atom("a charset");
          have_charset = true;
        } else if (key == "maxlen") {
          d.maxlen = number("a length");
          have_len = true;
        } else {
          fail(kp, "unknown string attribute '" + key + "'");
        }
        if (!accept(",")) break;
      }
      expect(")");
      if (!have_charset || !have_len) fail(d.pos, "string needs charset and maxlen");
    } else if (head == "record" && at_punct("{")) {
      d.kind = RawDesc::Kind::kRecord;
      next();
      for (;;) {
        skip_newlines();
        if (accept("}")) break;
        std::string f = word("a field name");
        expect(":");
        d.fields.emplace_back(f, desc(depth + 1));
        skip_newlines();
        if (!accept(",")) {
          skip_newlines();
          expect("}");
          break;
        }
      }
    } else {
      d.kind = RawDesc::Kind::kRef;
      d.ref = head;
    }
    return d;
  }

  void type_decl() {
    auto [name, pos] = header("TYPE");
    expect("=");
    RawType t{name, pos, desc(0)};
    end_statement();
    out_.types.push_back(std::move(t));
  }

  void op_decl() {
    Pos pos = next().pos;
    RawOp op;
    op.pos = pos;
    op.name = word("an operation name");
    expect(":");
    op.type = word("a type name");
    expect("=");
    op.desc = desc(0);
    end_statement();
    out_.ops.push_back(std::move(op));
  }

  types::ProjectionRule projection_rule() {
    Pos pos = peek().pos;
    std::string kind = word("a projection rule");
    expect("(");
    types::ProjectionRule r;
    if (kind == "truncate") {
      r = types::ProjectionRule::truncate(number("a length"));
    } else if (kind == "filter") {
      bool literal = peek().kind == Tok::kString;
      std::string cs = atom("a charset");
      try {
        r = types::ProjectionRule::filter(literal ? types::Charset::literal(cs) : types::Charset::named(cs));
      } catch (const Error& e) {
        fail(pos, e.detail());
      }
    } else if (kind == "select") {
      std::vector<std::string> fields;
      do {
        fields.push_back(word("a field name"));
      } while (accept(","));
      r = types::ProjectionRule::select(std::move(fields));
    } else if (kind == "table") {
      std::map<std::string, std::string> table;
      do {
        Pos kp = peek().pos;
        std::string k = atom("a value");
        if (!accept("->")) expect("=");
        if (!table.emplace(k, atom("a value")).second) fail(kp, "duplicate table key '" + k + "'");
      } while (accept(","));
      r = types::ProjectionRule::mapping(std::move(table));
    } else {
      fail(pos, "unknown projection rule '" + kind + "'");
    }
    expect(")");
    return r;
  }

  void projection_decl() {
    auto [name, pos] = header("PROJECTION");
    types::Projection p;
    p.name = name;
    expect(":");
    p.source = word("a type name");
    expect("->");
    p.target = word("a type name");
    expect("=");
    if (at_word("identity") && (peek(1).kind == Tok::kNewline || peek(1).kind == Tok::kEnd || at_punct(";", 1))) {
      next();
    } else {
      do {
        p.rules.push_back(projection_rule());
      } while (accept(","));
    }
    end_statement();
    out_.projections.push_back({std::move(p), pos});
  }

  void relation_decl() {
    Pos pos = next().pos;
    types::RelationDecl r;
    r.from = word("a type name");
    Pos kp = peek().pos;
    std::string kind = word("a relation");
    if (kind == "restricts") r.kind = types::RelationKind::kRestricts;
    else if (kind == "expands") r.kind = types::RelationKind::kExpands;
    else if (kind == "extends") r.kind = types::RelationKind::kExtends;
    else if (kind == "truncates") r.kind = types::RelationKind::kTruncates;
    else fail(kp, "unknown relation '" + kind + "'");
    r.to = word("a type name");
    if (at_word("via")) {
      next();
      r.projection = word("a projection name");
    }
    out_.order.push_back({"RELATION", r.from + " " + kind + " " + r.to, pos});
    end_statement();
    out_.relations.push_back({std::move(r), pos});
  }

  // --- documents

  void doc_decl() {
    auto [name, pos] = header("DOC");
    RawDoc d{name, pos, {}};
    if (accept("(")) {
      if (!accept(")")) {
        do {
          RawParam p;
          p.pos = peek().pos;
          p.name = word("a parameter name");
          expect(":");
          if (at_punct("{")) {
            p.values = names(name_set("a parameter value"));
          } else if (peek().kind == Tok::kWord && at_punct("..", 1)) {
            Pos rp = peek().pos;
            std::size_t lo = number("a bound");
            expect("..");
            std::size_t hi = number("a bound");
            if (hi < lo || hi - lo >= kMaxRange) fail(rp, "range must be ascending and hold at most 10000 values");
            for (std::size_t v = lo; v <= hi; ++v) p.values.push_back(std::to_string(v));
          } else {
            p.ref = word("a parameter domain");
          }
          d.params.push_back(std::move(p));
        } while (accept(","));
        expect(")");
      }
    }
    end_statement();
    out_.docs.push_back(std::move(d));
  }

  // --- systems

  void system_stmt() {
    auto& s = out_.systems.back();
    Pos p = peek().pos;
    if (at_word("states") && at_punct("{", 1)) {
      next();
      auto v = names(name_set("a state"));
      s.states.insert(s.states.end(), v.begin(), v.end());
    } else if (at_word("inputs") && at_punct("{", 1)) {
      next();
      auto v = names(name_set("an input"));
      s.inputs.insert(s.inputs.end(), v.begin(), v.end());
    } else if (at_word("outputs") && at_punct("{", 1)) {
      next();
      auto v = names(name_set("an output"));
      s.outputs.insert(s.outputs.end(), v.begin(), v.end());
    } else if (at_word("init") && peek(1).kind == Tok::kWord) {
      next();
      if (s.init) fail(p, "initial state given twice");
      s.init = {{word("a state"), p}};
    } else {
      if (peek().kind == Tok::kWord && at_punct(":", 1)) {
        next();
        next();
      }
      RawEntry e;
      e.pos = p;
      expect("(");
      e.q = word("a state");
      expect(",");
      e.i = word("an input");
      expect(")");
      expect("->");
      expect("(");
      e.q2 = word("a state");
      expect(",");
      e.o = word("an output");
      expect(")");
      s.entries.push_back(std::move(e));
    }
    end_statement();
  }

  // --- roles

  void role_stmt() {
    auto& r = out_.roles.back();
    Pos p = peek().pos;
    if (at_word("modes") && at_punct("{", 1)) {
      next();
      auto v = name_set("a mode");
      r.modes.insert(r.modes.end(), v.begin(), v.end());
    } else if (at_word("rest") && at_punct("{", 1)) {
      next();
      auto v = names(name_set("a rest value"));
      r.rest.insert(r.rest.end(), v.begin(), v.end());
    } else if (at_word("docs") && at_punct("{", 1)) {
      next();
      auto v = name_set("a document class");
      r.docs.insert(r.docs.end(), v.begin(), v.end());
    } else if (at_word("init") && peek(1).kind == Tok::kWord) {
      next();
      if (r.init) fail(p, "initial mode given twice");
      Pos mp = peek().pos;
      r.init = Named{word("a mode"), mp};
    } else {
      r.transitions.emplace_back(transition(), p);
    }
    end_statement();
  }

  // `[port.]Doc`
  std::pair<std::string, std::string> port_doc() {
    std::string first = word("a document class");
    if (accept(".")) return {first, word("a document class")};
    return {"", first};
  }

  GuardedTransition transition() {
    GuardedTransition t;
    if (peek().kind == Tok::kWord && at_punct(":", 1)) {
      t.label = next().text;
      next();
    }
    t.from = word("a mode");
    if (!accept("-->")) {
      expect("--");
      bool any = false;
      if (accept("?")) {
        auto [port, doc] = port_doc();
        t.in_port = port;
        t.in_doc = doc;
        if (at_punct("[")) {
          Pos gp = peek().pos;
          t.guard = guard_from(bracket_text(), gp);
        }
        any = true;
      }
      if (accept("/")) {
        if (!at_punct("!")) fail(peek().pos, "expected '!' after '/', found " + describe(peek()));
      }
      if (accept("!")) {
        auto [port, doc] = port_doc();
        t.out_port = port;
        t.out_doc = doc;
        if (accept("(")) {
          if (!accept(")")) {
            do {
              Pos kp = peek().pos;
              std::string k = word("a parameter name");
              expect("=");
              if (!t.out_params.emplace(k, atom("a parameter value")).second) {
                fail(kp, "parameter '" + k + "' given twice");
              }
            } while (accept(","));
            expect(")");
          }
        }
        any = true;
      }
      if (!any && !at_punct("-->")) fail(peek().pos, "expected '?', '!' or '-->', found " + describe(peek()));
      expect("-->");
    }
    t.to = word("a mode");
    return t;
  }

  // --- protocols

  protocol::GoalPattern goal_pattern() {
    protocol::GoalPattern g;
    do {
      Pos p = peek().pos;
      std::string agent = word("a role or node");
      expect(".");
      if (!g.emplace(agent, word("a mode")).second) fail(p, "'" + agent + "' appears twice in one goal");
    } while (accept("&"));
    return g;
  }

  void goals(std::vector<std::pair<protocol::GoalPattern, Pos>>& out) {
    do {
      Pos p = peek().pos;
      out.emplace_back(goal_pattern(), p);
    } while (accept("|"));
  }

  void protocol_stmt() {
    auto& pr = out_.protocols.back();
    Pos p = peek().pos;
    std::string kw = word("a protocol statement");
    if (kw == "roles") {
      do {
        Pos rp = peek().pos;
        pr.roles.push_back({word("a role name"), rp});
      } while (accept(","));
    } else if (kw == "channel") {
      std::string from = word("a role name");
      expect("->");
      std::string to = word("a role name");
      expect(":");
      std::vector<std::string> docs;
      do {
        docs.push_back(word("a document class"));
      } while (accept(","));
      std::size_t cap = 0;
      if (at_word("cap")) {
        next();
        cap = number("a capacity");
        if (cap == 0) fail(p, "capacity must be positive");
      }
      for (auto& d : docs) pr.channels.push_back({{from, to, d, cap}, p});
    } else if (kw == "goal") {
      goals(pr.goals);
    } else if (kw == "capacity") {
      pr.capacity = number("a capacity");
      if (pr.capacity == 0) fail(p, "capacity must be positive");
    } else if (kw == "model") {
      pr.model = word("an execution model");
    } else {
      fail(p, "unknown protocol statement '" + kw + "'");
    }
    end_statement();
  }

  // --- processes

  process::Selector selector() {
    process::Selector s;
    s.instance = word("a role instance");
    expect(".");
    if (accept("*")) {
      s.value = "*";
    } else if (at_punct("?") || at_punct("!") || at_punct("@")) {
      s.value = next().text;
      s.value += word("a name");
    } else {
      s.value = word("a selector");
    }
    return s;
  }

  process::Effect effect() {
    process::Effect e;
    if (at_word("set") && peek(1).kind == Tok::kWord && at_punct("=", 2)) {
      next();
      e.kind = process::Effect::Kind::kSet;
      std::string var = word("a variable");
      expect("=");
      e.target = {"", var + "=" + atom("a value")};
      return e;
    }
    if (peek().kind == Tok::kWord && peek(1).kind == Tok::kWord) {
      Pos p = peek().pos;
      std::string kind = next().text;
      if (kind == "force") e.kind = process::Effect::Kind::kForce;
      else if (kind == "enable") e.kind = process::Effect::Kind::kEnable;
      else if (kind == "disable") e.kind = process::Effect::Kind::kDisable;
      else fail(p, "unknown effect '" + kind + "'");
    }
    e.target = selector();
    return e;
  }

  void process_stmt() {
    auto& pr = out_.processes.back();
    Pos p = peek().pos;
    std::string kw = word("a process statement");
    if (kw == "role") {
      RawInstance i;
      i.pos = p;
      i.name = word("an instance name");
      expect(":");
      i.role = word("a role name");
      if (at_word("of")) {
        next();
        i.protocol = word("a protocol name");
        i.slot = i.role;
        if (at_word("as")) {
          next();
          i.slot = word("a role name");
        }
      }
      pr.instances.push_back(std::move(i));
    } else if (kw == "var") {
      std::string v = word("a variable");
      expect("=");
      pr.vars.push_back({{v, atom("a value")}, p});
    } else if (kw == "disable") {
      pr.disables.emplace_back(selector(), p);
    } else if (kw == "rule") {
      process::CoordinationRule r;
      if (peek().kind == Tok::kWord && at_punct(":", 1)) {
        r.name = next().text;
        next();
      } else {
        r.name = "rule" + std::to_string(pr.rules.size() + 1);
      }
      keyword("on");
      r.trigger = selector();
      if (at_word("when")) {
        const Token& w = next();
        Pos gp = peek().pos;
        while (!at_word("do") && !at_statement_end()) next();
        std::string text(src_.substr(w.end, peek().offset - w.end));
        r.when = guard_from(text, gp);
      }
      keyword("do");
      do {
        r.effects.push_back(effect());
      } while (accept(","));
      pr.rules.emplace_back(std::move(r), p);
    } else {
      fail(p, "unknown process statement '" + kw + "'");
    }
    end_statement();
  }

  // --- networks

  void network_stmt() {
    auto& n = out_.networks.back();
    Pos p = peek().pos;
    std::string kw = word("a network statement");
    if (kw == "node") {
      RawNode node;
      node.pos = p;
      node.name = word("a node name");
      expect(":");
      node.target = word("a role, process or system");
      n.nodes.push_back(std::move(node));
    } else if (kw == "bind") {
      netsim::Binding b;
      b.a_node = word("a node name");
      if (accept(".")) b.a_port = word("a port");
      expect("<->");
      b.b_node = word("a node name");
      if (accept(".")) b.b_port = word("a port");
      if (accept(":")) {
        do {
          std::string x = word("a document class");
          std::string y = x;
          if (accept("=")) y = word("a document class");
          b.classes.emplace_back(x, y);
        } while (accept(","));
      }
      if (at_word("cap")) {
        next();
        b.capacity = number("a capacity");
        if (b.capacity == 0) fail(p, "capacity must be positive");
      }
      n.bindings.emplace_back(std::move(b), p);
    } else if (kw == "goal") {
      goals(n.goals);
    } else {
      fail(p, "unknown network statement '" + kw + "'");
    }
    end_statement();
  }

  void components_stmt() {
    auto& c = out_.components.back();
    Pos p = peek().pos;
    if (at_word("node")) {
      next();
      do {
        Pos np = peek().pos;
        c.nodes.push_back({word("a component name"), np});
      } while (accept(","));
    } else {
      if (at_word("edge")) next();
      process::ComponentEdge e;
      e.from = word("a component name");
      expect("->");
      e.to = word("a component name");
      expect(":");
      Pos kp = peek().pos;
      std::string kind = word("an edge kind");
      if (kind == "api_call") e.kind = process::EdgeKind::kApiCall;
      else if (kind == "event_subscription") e.kind = process::EdgeKind::kEventSubscription;
      else if (kind == "protocol_binding") e.kind = process::EdgeKind::kProtocolBinding;
      else fail(kp, "unknown edge kind '" + kind + "'");
      c.edges.emplace_back(std::move(e), p);
    }
    end_statement();
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t i_ = 0;
  std::vector<Diagnostic>& diags_;
  RawSpec out_;
};

// --- Resolution --------------------------------------------------------------

class Resolver {
 public:
  Resolver(RawSpec raw, std::vector<Diagnostic>& diags) : raw_(std::move(raw)), diags_(diags) {}

  SpecModel run() {
    resolve_types();
    resolve_projections();
    resolve_systems();
    resolve_docs();
    resolve_roles();
    resolve_protocols();
    resolve_processes();
    resolve_networks();
    resolve_components();
    resolve_relations();
    for (const auto& d : raw_.order) {
      if (accepted_.count({d.kind, d.name, d.pos.line, d.pos.col})) m_.order.push_back(d);
    }
    return std::move(m_);
  }

 private:
  using Key = std::tuple<std::string, std::string, std::size_t, std::size_t>;

  void error(Pos pos, std::string msg, std::vector<Pos> related = {}) {
    diags_.push_back({Diagnostic::Severity::kError, pos, std::move(msg), std::move(related)});
  }
  void lint(Pos pos, std::string msg) { diags_.push_back({Diagnostic::Severity::kLint, pos, std::move(msg), {}}); }
  void warn(Pos pos, std::string msg) { diags_.push_back({Diagnostic::Severity::kWarning, pos, std::move(msg), {}}); }

  // Registers a declaration name; false for a duplicate.
  bool declare(const std::string& kind, const std::string& name, Pos pos) {
    auto [it, fresh] = seen_[kind].emplace(name, pos);
    if (!fresh) {
      error(pos, "duplicate " + lower(kind) + " '" + name + "'", {it->second});
      return false;
    }
    return true;
  }

  void accept(const std::string& kind, const std::string& name, Pos pos) {
    accepted_.insert({kind, name, pos.line, pos.col});
  }

  static std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

  template <class T>
  static bool has(const std::vector<T>& v, const T& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  }

  // --- types

  std::optional<types::ValueSetDesc> build_desc(const RawDesc& d, std::set<std::string>& visiting) {
    try {
      switch (d.kind) {
        case RawDesc::Kind::kEnum: {
          std::set<std::string> uniq(d.atoms.begin(), d.atoms.end());
          if (uniq.size() != d.atoms.size()) {
            error(d.pos, "duplicate enumeration atom");
            return std::nullopt;
          }
          return types::ValueSetDesc::enumerated(d.atoms);
        }
        case RawDesc::Kind::kString:
          return types::ValueSetDesc::string(
              d.charset_literal ? types::Charset::literal(d.charset) : types::Charset::named(d.charset), d.maxlen);
        case RawDesc::Kind::kRecord: {
          std::vector<types::Field> fields;
          std::set<std::string> names;
          for (const auto& [n, fd] : d.fields) {
            if (!names.insert(n).second) {
              error(fd.pos, "duplicate field '" + n + "'");
              return std::nullopt;
            }
            auto sub = build_desc(fd, visiting);
            if (!sub) return std::nullopt;
            fields.push_back({n, *sub});
          }
          return types::ValueSetDesc::record(std::move(fields));
        }
        case RawDesc::Kind::kRef:
          return type_desc(d.ref, d.pos, visiting);
      }
    } catch (const Error& e) {
      error(d.pos, e.detail());
    }
    return std::nullopt;
  }

  std::optional<types::ValueSetDesc> type_desc(const std::string& name, Pos pos, std::set<std::string>& visiting) {
    if (auto it = descs_.find(name); it != descs_.end()) return it->second;
    auto raw = std::find_if(raw_.types.begin(), raw_.types.end(), [&](const RawType& t) { return t.name == name; });
    if (raw == raw_.types.end()) {
      error(pos, "unknown type '" + name + "'");
      return std::nullopt;
    }
    if (!visiting.insert(name).second) {
      error(pos, "type '" + name + "' is defined in terms of itself", {raw->pos});
      return std::nullopt;
    }
    auto d = build_desc(raw->desc, visiting);
    visiting.erase(name);
    if (d) descs_.emplace(name, *d);
    return d;
  }

  void resolve_types() {
    for (const auto& t : raw_.types) {
      if (!declare("TYPE", t.name, t.pos)) continue;
      std::set<std::string> visiting{t.name};
      auto d = descs_.count(t.name) ? std::optional(descs_.at(t.name)) : build_desc(t.desc, visiting);
      if (!d) continue;
      descs_.emplace(t.name, *d);
      m_.types.emplace_back(t.name, *d);
      accept("TYPE", t.name, t.pos);
    }
    for (const auto& op : raw_.ops) {
      auto it = std::find_if(m_.types.begin(), m_.types.end(), [&](const auto& t) { return t.name() == op.type; });
      if (it == m_.types.end()) {
        error(op.pos, "unknown type '" + op.type + "'");
        continue;
      }
      std::set<std::string> visiting;
      auto d = build_desc(op.desc, visiting);
      if (!d) continue;
      if (it->find_op(op.name)) {
        error(op.pos, "duplicate operation '" + op.name + "' on " + op.type);
        continue;
      }
      try {
        it->register_op({op.name, *d});
      } catch (const Error& e) {
        error(op.pos, e.detail());
      }
    }
  }

  void resolve_projections() {
    for (const auto& p : raw_.projections) {
      if (!declare("PROJECTION", p.value.name, p.pos)) continue;
      bool ok = true;
      for (const auto& t : {p.value.source, p.value.target}) {
        if (!m_.type(t)) {
          error(p.pos, "unknown type '" + t + "'");
          ok = false;
        }
      }
      if (!ok) continue;
      try {
        p.value.image(m_.type(p.value.source)->values());
      } catch (const Error& e) {
        error(p.pos, e.detail());
        continue;
      }
      m_.projections.push_back(p.value);
      accept("PROJECTION", p.value.name, p.pos);
    }
  }

  void resolve_relations() {
    for (const auto& r : raw_.relations) {
      bool ok = true;
      for (const auto& t : {r.value.from, r.value.to}) {
        if (!m_.type(t)) {
          error(r.pos, "unknown type '" + t + "'");
          ok = false;
        }
      }
      if (r.value.projection && !find_named(m_.projections, *r.value.projection)) {
        error(r.pos, "unknown projection '" + *r.value.projection + "'");
        ok = false;
      }
      if (!ok) continue;
      m_.relations.push_back(r.value);
      accept("RELATION", r.value.from + " " + std::string(types::to_string(r.value.kind)) + " " + r.value.to, r.pos);
    }
    if (m_.relations.empty()) return;
    try {
      types::build_hierarchy({m_.types, m_.projections, m_.relations});
    } catch (const Error& e) {
      // blame the first relation naming a type from the message
      Pos pos = raw_.relations.front().pos;
      for (const auto& r : raw_.relations) {
        if (e.detail().find(r.value.from) != std::string::npos && e.detail().find(r.value.to) != std::string::npos) {
          pos = r.pos;
          break;
        }
      }
      error(pos, e.what());
    }
  }

  // --- systems

  void resolve_systems() {
    for (const auto& s : raw_.systems) {
      if (!declare("SYSTEM", s.name, s.pos)) continue;
      bool ok = true;
      auto check_set = [&](const std::vector<std::string>& v, const char* what) {
        if (v.empty()) {
          error(s.pos, "system " + s.name + " declares no " + what);
          ok = false;
        }
        if (std::set<std::string>(v.begin(), v.end()).size() != v.size()) {
          error(s.pos, "system " + s.name + " repeats one of its " + what);
          ok = false;
        }
      };
      check_set(s.states, "states");
      check_set(s.inputs, "inputs");
      check_set(s.outputs, "outputs");
      if (!ok) continue;
      auto index = [](const std::vector<std::string>& v, const std::string& x) -> std::optional<std::size_t> {
        auto it = std::find(v.begin(), v.end(), x);
        if (it == v.end()) return std::nullopt;
        return static_cast<std::size_t>(it - v.begin());
      };
      std::size_t init = 0;
      if (s.init) {
        auto i = index(s.states, s.init->first);
        if (!i) {
          error(s.init->second, "undeclared state '" + s.init->first + "'");
          ok = false;
        } else {
          init = *i;
        }
      }
      std::vector<std::optional<kernel::SystemDef::Entry>> table(s.states.size() * s.inputs.size());
      std::vector<Pos> where(table.size());
      for (const auto& e : s.entries) {
        auto q = index(s.states, e.q), i = index(s.inputs, e.i), q2 = index(s.states, e.q2),
             o = index(s.outputs, e.o);
        if (!q || !q2) {
          error(e.pos, "undeclared state '" + (!q ? e.q : e.q2) + "'");
          ok = false;
          continue;
        }
        if (!i) {
          error(e.pos, "undeclared input '" + e.i + "'");
          ok = false;
          continue;
        }
        if (!o) {
          error(e.pos, "undeclared output '" + e.o + "'");
          ok = false;
          continue;
        }
        auto& slot = table[*q * s.inputs.size() + *i];
        if (slot) {
          error(e.pos, "second transition for (" + e.q + ", " + e.i + ")", {where[*q * s.inputs.size() + *i]});
          ok = false;
          continue;
        }
        slot = kernel::SystemDef::Entry{*q2, *o};
        where[*q * s.inputs.size() + *i] = e.pos;
      }
      if (!ok) continue;
      std::vector<kernel::SystemDef::Entry> dense;
      for (std::size_t k = 0; k < table.size(); ++k) {
        if (!table[k]) {
          error(s.pos, "system " + s.name + " has no transition for (" + s.states[k / s.inputs.size()] + ", " +
                           s.inputs[k % s.inputs.size()] + ")");
          ok = false;
          break;
        }
        dense.push_back(*table[k]);
      }
      if (!ok) continue;
      auto values = [](const std::vector<std::string>& v) { return std::vector<kernel::Value>(v.begin(), v.end()); };
      try {
        m_.systems.emplace_back(s.name, values(s.states), values(s.inputs), values(s.outputs), dense, init);
        accept("SYSTEM", s.name, s.pos);
      } catch (const Error& e) {
        error(s.pos, e.detail());
      }
    }
  }

  // --- documents and roles

  void resolve_docs() {
    for (const auto& d : raw_.docs) {
      if (!declare("DOC", d.name, d.pos)) continue;
      DocumentClass doc{d.name, {}};
      bool ok = true;
      std::size_t combos = 1;
      for (const auto& p : d.params) {
        if (doc.param(p.name)) {
          error(p.pos, "duplicate parameter '" + p.name + "'");
          ok = false;
          continue;
        }
        std::vector<std::string> values = p.values;
        if (!p.ref.empty()) {
          const auto* t = m_.type(p.ref);
          if (!t || !t->values().is_enum()) {
            error(p.pos, t ? "type '" + p.ref + "' is not enumerated" : "unknown type '" + p.ref + "'");
            ok = false;
            continue;
          }
          values = std::get<types::EnumSet>(t->values().rep).atoms;
        }
        if (values.empty()) {
          error(p.pos, "parameter '" + p.name + "' has an empty domain");
          ok = false;
          continue;
        }
        if (std::set<std::string>(values.begin(), values.end()).size() != values.size()) {
          error(p.pos, "parameter '" + p.name + "' repeats a value");
          ok = false;
          continue;
        }
        combos *= values.size();
        if (combos > kMaxRange) {
          error(p.pos, "document " + d.name + " has more than 10000 valuations");
          ok = false;
          break;
        }
        doc.params.push_back({p.name, std::move(values)});
      }
      if (!ok) continue;
      m_.docs.push_back(std::move(doc));
      accept("DOC", d.name, d.pos);
    }
  }

  void resolve_roles() {
    for (const auto& r : raw_.roles) {
      if (!declare("ROLE", r.name, r.pos)) continue;
      Role role;
      role.name = r.name;
      bool ok = true;
      std::map<std::string, Pos> modes;
      for (const auto& m : r.modes) {
        if (!modes.emplace(m.name, m.pos).second) {
          error(m.pos, "duplicate mode '" + m.name + "'", {modes.at(m.name)});
          ok = false;
        } else {
          role.modes.push_back(m.name);
        }
      }
      if (role.modes.empty()) {
        error(r.pos, "role " + r.name + " declares no modes");
        continue;
      }
      role.initial = role.modes.front();
      if (r.init) {
        if (!modes.count(r.init->name)) {
          error(r.init->pos, "undeclared mode '" + r.init->name + "'");
          ok = false;
        }
        role.initial = r.init->name;
      }
      role.rest_domain = r.rest;
      auto add_doc = [&](const std::string& name, Pos pos) {
        if (role.doc(name)) return;
        const auto* d = find_named(m_.docs, name);
        if (!d) {
          error(pos, "unknown document class '" + name + "'");
          ok = false;
          return;
        }
        role.docs.push_back(*d);
      };
      for (const auto& d : r.docs) add_doc(d.name, d.pos);
      for (const auto& [t, pos] : r.transitions) {
        for (const auto& m : {t.from, t.to}) {
          if (!modes.count(m)) {
            error(pos, "undeclared mode '" + m + "'");
            ok = false;
          }
        }
        if (t.in_doc) add_doc(*t.in_doc, pos);
        if (t.out_doc) add_doc(*t.out_doc, pos);
        role.transitions.push_back(t);
      }
      if (!ok) continue;
      try {
        role.validate();
      } catch (const Error& e) {
        Pos pos = r.pos;
        for (const auto& [t, tp] : r.transitions) {
          if (e.detail().find(t.str()) != std::string::npos) pos = tp;
        }
        error(pos, e.detail());
        continue;
      }
      unreachable_lint(role, r);
      m_.roles.push_back(std::move(role));
      accept("ROLE", r.name, r.pos);
    }
  }

  void unreachable_lint(const Role& role, const RawRole& r) {
    std::set<std::string> seen{role.initial};
    std::vector<std::string> stack{role.initial};
    while (!stack.empty()) {
      auto m = stack.back();
      stack.pop_back();
      for (const auto& t : role.transitions) {
        if (t.from == m && seen.insert(t.to).second) stack.push_back(t.to);
      }
    }
    for (const auto& m : r.modes) {
      if (!seen.count(m.name)) lint(m.pos, "mode '" + m.name + "' of role " + r.name + " is unreachable");
    }
  }

  // --- protocols

  void resolve_protocols() {
    for (const auto& p : raw_.protocols) {
      if (!declare("PROTOCOL", p.name, p.pos)) continue;
      protocol::Protocol pr;
      pr.name = p.name;
      pr.capacity = p.capacity;
      pr.execution_model = p.model;
      bool ok = true;
      for (const auto& r : p.roles) {
        const auto* role = m_.role(r.name);
        if (!role) {
          error(r.pos, "unknown role '" + r.name + "'");
          ok = false;
        } else if (pr.role(r.name)) {
          error(r.pos, "role '" + r.name + "' listed twice");
          ok = false;
        } else {
          pr.roles.push_back(*role);
        }
      }
      if (p.roles.empty()) {
        error(p.pos, "protocol " + p.name + " lists no roles");
        ok = false;
      }
      if (!ok) continue;
      for (const auto& [c, pos] : p.channels) {
        for (const auto& n : {c.from, c.to}) {
          if (!pr.role(n)) {
            error(pos, "role '" + n + "' is not part of protocol " + p.name);
            ok = false;
          }
        }
        if (!find_named(m_.docs, c.doc)) {
          error(pos, "unknown document class '" + c.doc + "'");
          ok = false;
        }
        pr.channels.push_back(c);
      }
      for (const auto& [g, pos] : p.goals) {
        for (const auto& [agent, mode] : g) {
          const auto* r = pr.role(agent);
          if (!r) {
            error(pos, "role '" + agent + "' is not part of protocol " + p.name);
            ok = false;
          } else if (!r->has_mode(mode)) {
            error(pos, "undeclared mode '" + mode + "' of role " + agent);
            ok = false;
          }
        }
        pr.goals.push_back(g);
      }
      if (!ok) continue;
      if (pr.goals.empty()) warn(p.pos, "protocol " + p.name + " has no goal");
      try {
        protocol::make_ensemble(pr);
      } catch (const Error& e) {
        error(p.pos, e.detail());
        continue;
      }
      m_.protocols.push_back(std::move(pr));
      accept("PROTOCOL", p.name, p.pos);
    }
  }

  // --- processes

  void resolve_processes() {
    for (const auto& p : raw_.processes) {
      if (!declare("PROCESS", p.name, p.pos)) continue;
      process::ProcessDef def;
      def.name = p.name;
      bool ok = true;
      for (const auto& i : p.instances) {
        if (def.instance(i.name)) {
          error(i.pos, "duplicate role instance '" + i.name + "'");
          ok = false;
          continue;
        }
        const auto* role = m_.role(i.role);
        if (!role) {
          error(i.pos, "unknown role '" + i.role + "'");
          ok = false;
          continue;
        }
        if (!i.protocol.empty()) {
          const auto* pr = m_.protocol(i.protocol);
          if (!pr) {
            error(i.pos, "unknown protocol '" + i.protocol + "'");
            ok = false;
            continue;
          }
          if (!pr->role(i.slot)) {
            error(i.pos, "protocol " + i.protocol + " has no role " + i.slot);
            ok = false;
            continue;
          }
        }
        def.instances.push_back({i.name, *role, i.protocol, i.slot});
      }
      if (def.instances.empty()) {
        error(p.pos, "process " + p.name + " has no role instances");
        ok = false;
      }
      for (const auto& [v, pos] : p.vars) {
        if (!def.vars.emplace(v.first, v.second).second) {
          error(pos, "duplicate variable '" + v.first + "'");
          ok = false;
        }
      }
      auto check_selector = [&](const process::Selector& s, Pos pos) {
        if (!def.instance(s.instance)) {
          error(pos, "unknown role instance '" + s.instance + "'");
          ok = false;
        }
      };
      for (const auto& [s, pos] : p.disables) {
        check_selector(s, pos);
        def.initially_disabled.push_back(s);
      }
      std::map<std::string, Pos> rule_names;
      for (const auto& [r, pos] : p.rules) {
        if (!rule_names.emplace(r.name, pos).second) {
          error(pos, "duplicate rule '" + r.name + "'", {rule_names.at(r.name)});
          ok = false;
        }
        check_selector(r.trigger, pos);
        for (const auto& e : r.effects) {
          if (e.kind == process::Effect::Kind::kSet) {
            auto var = e.target.value.substr(0, e.target.value.find('='));
            if (!def.vars.count(var)) {
              error(pos, "undeclared variable '" + var + "'");
              ok = false;
            }
          } else {
            check_selector(e.target, pos);
          }
        }
        def.rules.push_back(r);
      }
      if (!ok) continue;
      try {
        process::check_rules(def);
      } catch (const Error& e) {
        Pos pos = p.pos;
        std::vector<Pos> related;
        for (const auto& [r, rp] : p.rules) {
          if (e.detail().find(" " + r.name + " ") != std::string::npos ||
              e.detail().find(" " + r.name + ":") != std::string::npos) {
            if (pos == p.pos) pos = rp;
            else related.push_back(rp);
          }
        }
        error(pos, e.what(), related);
        continue;
      }
      m_.processes.push_back(std::move(def));
      accept("PROCESS", p.name, p.pos);
    }
  }

  // --- networks

  void resolve_networks() {
    for (const auto& n : raw_.networks) {
      if (!declare("NETWORK", n.name, n.pos)) continue;
      NetworkDecl net;
      net.name = n.name;
      bool ok = true;
      std::map<std::string, std::vector<std::string>> ports;
      for (const auto& node : n.nodes) {
        if (ports.count(node.name)) {
          error(node.pos, "duplicate node '" + node.name + "'");
          ok = false;
          continue;
        }
        std::vector<std::string> kinds;
        if (const auto* pr = m_.process(node.target)) {
          kinds.push_back("process");
          for (const auto& i : pr->instances) ports[node.name].push_back(i.name);
        }
        if (m_.role(node.target)) {
          kinds.push_back("role");
          ports[node.name].push_back(node.target);
        }
        if (m_.system(node.target)) {
          kinds.push_back("system");
          ports[node.name].push_back("io");
        }
        if (kinds.empty()) {
          error(node.pos, "unknown role, process or system '" + node.target + "'");
          ok = false;
          ports[node.name];
          continue;
        }
        if (kinds.size() > 1) {
          error(node.pos, "'" + node.target + "' names more than one kind of declaration");
          ok = false;
          continue;
        }
        net.nodes.push_back({node.name, node.target, kinds.front()});
      }
      auto port_of = [&](const std::string& node, std::string port, Pos pos) -> std::optional<std::string> {
        auto it = ports.find(node);
        if (it == ports.end()) {
          error(pos, "unknown node '" + node + "'");
          return std::nullopt;
        }
        if (it->second.empty()) return std::nullopt;
        if (port.empty()) {
          if (it->second.size() != 1) {
            error(pos, "node " + node + " has several ports; name one");
            return std::nullopt;
          }
          return it->second.front();
        }
        if (!has(it->second, port)) {
          error(pos, "node " + node + " has no port '" + port + "'");
          return std::nullopt;
        }
        return port;
      };
      for (auto [b, pos] : n.bindings) {
        auto pa = port_of(b.a_node, b.a_port, pos);
        auto pb = port_of(b.b_node, b.b_port, pos);
        if (!pa || !pb) {
          ok = false;
          continue;
        }
        b.a_port = *pa;
        b.b_port = *pb;
        for (const auto& [x, y] : b.classes) {
          if (x != y) {
            error(pos, "binding couples " + x + " with " + y + "; coupled classes must have the same name");
            ok = false;
          }
        }
        net.bindings.push_back(std::move(b));
      }
      for (const auto& [g, pos] : n.goals) {
        for (const auto& [node, mode] : g) {
          if (!ports.count(node)) {
            error(pos, "unknown node '" + node + "'");
            ok = false;
          }
        }
        net.goals.push_back(g);
      }
      if (!ok) continue;
      m_.networks.push_back(std::move(net));
      accept("NETWORK", n.name, n.pos);
    }
  }

  void resolve_components() {
    for (const auto& c : raw_.components) {
      if (!declare("COMPONENTS", c.name, c.pos)) continue;
      ComponentsDecl decl;
      decl.name = c.name;
      bool ok = true;
      for (const auto& n : c.nodes) {
        if (has(decl.graph.nodes, n.name)) {
          error(n.pos, "duplicate component '" + n.name + "'");
          ok = false;
        } else {
          decl.graph.nodes.push_back(n.name);
        }
      }
      for (const auto& [e, pos] : c.edges) {
        for (const auto& n : {e.from, e.to}) {
          if (!has(decl.graph.nodes, n)) decl.graph.nodes.push_back(n);
        }
        decl.graph.edges.push_back(e);
      }
      if (!ok) continue;
      m_.components.push_back(std::move(decl));
      accept("COMPONENTS", c.name, c.pos);
    }
  }

  RawSpec raw_;
  std::vector<Diagnostic>& diags_;
  SpecModel m_;
  std::map<std::string, types::ValueSetDesc> descs_;
  std::map<std::string, std::map<std::string, Pos>> seen_;
  std::set<Key> accepted_;
};

}  // namespace

ParseResult parse_spec(std::string_view text) {
  ParseResult r;
  try {
    auto toks = lex(text, r.diagnostics);
    Parser p(text, std::move(toks), r.diagnostics);
    RawSpec raw = p.parse();
    r.model = Resolver(std::move(raw), r.diagnostics).run();
  } catch (const std::exception& e) {
    r.diagnostics.push_back({Diagnostic::Severity::kError, Pos{}, std::string("internal: ") + e.what(), {}});
  }
  std::stable_sort(r.diagnostics.begin(), r.diagnostics.end(), [](const Diagnostic& a, const Diagnostic& b) {
    return std::tie(a.pos.line, a.pos.col) < std::tie(b.pos.line, b.pos.col);
  });
  return r;
}

// --- Serialization -----------------------------------------------------------

namespace {

bool plain_word(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), word_char);
}

std::string quoted(const std::string& s) {
  if (plain_word(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& v, const std::string& sep, bool quote = false) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + (quote ? quoted(v[i]) : v[i]);
  return out;
}

std::string charset_text(const types::Charset& c) { return c.spelling(); }

std::string desc_text(const types::ValueSetDesc& d) {
  if (const auto* e = std::get_if<types::EnumSet>(&d.rep)) return "enum{" + join(e->atoms, ", ", true) + "}";
  if (const auto* s = std::get_if<types::StringSet>(&d.rep)) {
    return "string(charset=" + charset_text(s->charset) + ", maxlen=" + std::to_string(s->max_len) + ")";
  }
  std::string out = "record{";
  const auto& fields = std::get<types::RecordSet>(d.rep).fields;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    out += (i ? ", " : "") + fields[i].name + ": " + desc_text(fields[i].desc);
  }
  return out + "}";
}

std::string rule_text(const types::ProjectionRule& r) {
  switch (r.kind) {
    case types::ProjectionRule::Kind::kTruncate: return "truncate(" + std::to_string(r.length) + ")";
    case types::ProjectionRule::Kind::kFilter: return "filter(" + charset_text(*r.charset) + ")";
    case types::ProjectionRule::Kind::kSelect: return "select(" + join(r.fields, ", ") + ")";
    case types::ProjectionRule::Kind::kTable: {
      std::vector<std::string> items;
      for (const auto& [k, v] : r.table) items.push_back(quoted(k) + " -> " + quoted(v));
      return "table(" + join(items, ", ") + ")";
    }
  }
  return "";
}

std::string transition_text(const GuardedTransition& t) {
  std::string out = t.label.empty() ? "" : t.label + ": ";
  if (!t.in_doc && !t.out_doc) return out + t.from + " --> " + t.to;
  out += t.from + " --";
  bool any = false;
  if (t.in_doc) {
    out += "?" + (t.in_port.empty() ? "" : t.in_port + ".") + *t.in_doc;
    if (t.guard) out += "[" + t.guard->str() + "]";
    any = true;
  }
  if (t.out_doc) {
    if (any) out += " / ";
    out += "!" + (t.out_port.empty() ? "" : t.out_port + ".") + *t.out_doc;
    if (!t.out_params.empty()) {
      std::vector<std::string> ps;
      for (const auto& [k, v] : t.out_params) ps.push_back(k + "=" + quoted(v));
      out += "(" + join(ps, ", ") + ")";
    }
  }
  return out + "--> " + t.to;
}

std::string goal_text(const protocol::GoalPattern& g) {
  std::vector<std::string> parts;
  for (const auto& [a, m] : g) parts.push_back(a + "." + m);
  return join(parts, " & ");
}

std::string effect_text(const process::Effect& e) {
  switch (e.kind) {
    case process::Effect::Kind::kForce: return "force " + e.target.str();
    case process::Effect::Kind::kEnable: return "enable " + e.target.str();
    case process::Effect::Kind::kDisable: return "disable " + e.target.str();
    case process::Effect::Kind::kSet: {
      auto eq = e.target.value.find('=');
      return "set " + e.target.value.substr(0, eq) + "=" + quoted(e.target.value.substr(eq + 1));
    }
  }
  return "";
}

}  // namespace

std::string serialize(const SpecModel& m) {
  std::ostringstream os;
  bool first = true;
  auto gap = [&](bool block) {
    if (!first && block) os << "\n";
    first = false;
  };
  bool prev_block = false;
  for (const auto& d : m.order) {
    const std::string& k = d.kind;
    bool is_block = k == "SYSTEM" || k == "ROLE" || k == "PROTOCOL" || k == "PROCESS" || k == "NETWORK" ||
                    k == "COMPONENTS";
    gap(is_block || prev_block);
    prev_block = is_block;
    if (k == "TYPE") {
      const auto* t = m.type(d.name);
      os << "TYPE " << t->name() << " = " << desc_text(t->values()) << "\n";
      for (const auto& op : t->ops()) {
        os << "OPERATION " << op.name << ": " << t->name() << " = " << desc_text(op.domain) << "\n";
      }
    } else if (k == "PROJECTION") {
      const auto* p = find_named(m.projections, d.name);
      std::vector<std::string> rules;
      for (const auto& r : p->rules) rules.push_back(rule_text(r));
      os << "PROJECTION " << p->name << ": " << p->source << " -> " << p->target << " = "
         << (rules.empty() ? "identity" : join(rules, ", ")) << "\n";
    } else if (k == "RELATION") {
      for (const auto& r : m.relations) {
        if (r.from + " " + std::string(types::to_string(r.kind)) + " " + r.to != d.name) continue;
        os << "RELATION " << r.from << " " << types::to_string(r.kind) << " " << r.to;
        if (r.projection) os << " via " << *r.projection;
        os << "\n";
      }
    } else if (k == "SYSTEM") {
      const auto* s = m.system(d.name);
      auto strs = [](const std::vector<kernel::Value>& v) {
        std::vector<std::string> out;
        for (const auto& x : v) out.push_back(x.str());
        return out;
      };
      os << "SYSTEM " << s->name() << " {\n";
      os << "  states{" << join(strs(s->states()), ", ") << "}\n";
      os << "  inputs{" << join(strs(s->inputs()), ", ") << "}\n";
      os << "  outputs{" << join(strs(s->outputs()), ", ") << "}\n";
      os << "  init " << s->initial().str() << "\n";
      for (std::size_t q = 0; q < s->states().size(); ++q) {
        for (std::size_t i = 0; i < s->inputs().size(); ++i) {
          const auto& e = s->entry(q, i);
          os << "  (" << s->states()[q].str() << ", " << s->inputs()[i].str() << ") -> ("
             << s->states()[e.next].str() << ", " << s->outputs()[e.out].str() << ")\n";
        }
      }
      os << "}\n";
    } else if (k == "DOC") {
      const auto* doc = find_named(m.docs, d.name);
      os << "DOC " << doc->name;
      if (!doc->params.empty()) {
        std::vector<std::string> ps;
        for (const auto& p : doc->params) ps.push_back(p.name + ": {" + join(p.domain, ", ", true) + "}");
        os << "(" << join(ps, ", ") << ")";
      }
      os << "\n";
    } else if (k == "ROLE") {
      const auto* r = m.role(d.name);
      os << "ROLE " << r->name << " {\n";
      os << "  modes{" << join(r->modes, ", ", true) << "}\n";
      os << "  init " << r->initial << "\n";
      if (!r->rest_domain.empty()) os << "  rest{" << join(r->rest_domain, ", ", true) << "}\n";
      std::vector<std::string> docs;
      for (const auto& doc : r->docs) docs.push_back(doc.name);
      if (!docs.empty()) os << "  docs{" << join(docs, ", ") << "}\n";
      for (const auto& t : r->transitions) os << "  " << transition_text(t) << "\n";
      os << "}\n";
    } else if (k == "PROTOCOL") {
      const auto* p = m.protocol(d.name);
      std::vector<std::string> roles;
      for (const auto& r : p->roles) roles.push_back(r.name);
      os << "PROTOCOL " << p->name << " {\n";
      os << "  roles " << join(roles, ", ") << "\n";
      for (const auto& c : p->channels) {
        os << "  channel " << c.from << " -> " << c.to << " : " << c.doc;
        if (c.capacity) os << " cap " << c.capacity;
        os << "\n";
      }
      for (const auto& g : p->goals) os << "  goal " << goal_text(g) << "\n";
      if (p->capacity != 1) os << "  capacity " << p->capacity << "\n";
      if (p->execution_model != "exhaustive") os << "  model " << p->execution_model << "\n";
      os << "}\n";
    } else if (k == "PROCESS") {
      const auto* p = m.process(d.name);
      os << "PROCESS " << p->name << " {\n";
      for (const auto& i : p->instances) {
        os << "  role " << i.name << ": " << i.role.name;
        if (!i.protocol.empty()) {
          os << " of " << i.protocol;
          if (i.slot != i.role.name) os << " as " << i.slot;
        }
        os << "\n";
      }
      for (const auto& [v, x] : p->vars) os << "  var " << v << " = " << quoted(x) << "\n";
      for (const auto& s : p->initially_disabled) os << "  disable " << s.str() << "\n";
      for (const auto& r : p->rules) {
        os << "  rule " << r.name << ": on " << r.trigger.str();
        if (r.when) os << " when " << r.when->str();
        std::vector<std::string> effects;
        for (const auto& e : r.effects) effects.push_back(effect_text(e));
        os << " do " << join(effects, ", ") << "\n";
      }
      os << "}\n";
    } else if (k == "NETWORK") {
      const auto* n = m.network(d.name);
      os << "NETWORK " << n->name << " {\n";
      for (const auto& node : n->nodes) os << "  node " << node.name << ": " << node.target << "\n";
      for (const auto& b : n->bindings) {
        os << "  bind " << b.a_node << "." << b.a_port << " <-> " << b.b_node << "." << b.b_port;
        if (!b.classes.empty()) {
          std::vector<std::string> cs;
          for (const auto& [x, y] : b.classes) cs.push_back(x == y ? x : x + "=" + y);
          os << " : " << join(cs, ", ");
        }
        if (b.capacity != 1) os << " cap " << b.capacity;
        os << "\n";
      }
      for (const auto& g : n->goals) os << "  goal " << goal_text(g) << "\n";
      os << "}\n";
    } else if (k == "COMPONENTS") {
      const auto* c = find_named(m.components, d.name);
      os << "COMPONENTS " << c->name << " {\n";
      if (!c->graph.nodes.empty()) os << "  node " << join(c->graph.nodes, ", ") << "\n";
      for (const auto& e : c->graph.edges) {
        os << "  edge " << e.from << " -> " << e.to << " : " << process::to_string(e.kind) << "\n";
      }
      os << "}\n";
    }
  }
  return os.str();
}

// --- Materialization ---------------------------------------------------------

types::TypeHierarchy hierarchy_of(const SpecModel& m) {
  return types::build_hierarchy({m.types, m.projections, m.relations});
}

process::Coordinated coordinate_process(const SpecModel& m, const std::string& name, std::size_t bound) {
  const auto* p = m.process(name);
  if (!p) throw Error(ErrorCode::kSpec, "unknown process " + name);
  return process::coordinate(*p, bound);
}

netsim::Network network_of(const SpecModel& m, const std::string& name, std::size_t bound) {
  const auto* decl = m.network(name);
  if (!decl) throw Error(ErrorCode::kSpec, "unknown network " + name);
  netsim::Network n;
  n.name = decl->name;
  for (const auto& node : decl->nodes) {
    if (node.kind == "role") {
      n.nodes.push_back(netsim::Node::from_role(node.name, *m.role(node.target)));
    } else if (node.kind == "process") {
      n.nodes.push_back(netsim::Node::from_process(node.name, coordinate_process(m, node.target, bound)));
    } else {
      n.nodes.push_back(netsim::Node::from_system(node.name, *m.system(node.target)));
    }
  }
  n.bindings = decl->bindings;
  n.goals = decl->goals;
  return n;
}

namespace {

class ComposeParser {
 public:
  ComposeParser(const SpecModel& m, std::string_view expr) : m_(m), s_(expr) {}

  kernel::SystemDef parse() {
    auto r = sequence();
    skip();
    if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::kSpec, "expression column " + std::to_string(i_ + 1) + ": " + msg);
  }
  void skip() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }
  bool eat(std::string_view tok) {
    skip();
    if (s_.substr(i_, tok.size()) != tok) return false;
    i_ += tok.size();
    return true;
  }

  kernel::SystemDef sequence() {
    auto a = parallel();
    while (eat(";")) a = kernel::compose_sequential(a, parallel());
    return a;
  }
  kernel::SystemDef parallel() {
    auto a = primary();
    while (eat("||")) a = kernel::compose_parallel(a, primary());
    return a;
  }
  kernel::SystemDef primary() {
    if (eat("(")) {
      auto a = sequence();
      if (!eat(")")) fail("expected ')'");
      return a;
    }
    skip();
    std::size_t start = i_;
    while (i_ < s_.size() && word_char(s_[i_])) ++i_;
    if (start == i_) fail(i_ < s_.size() ? "unexpected '" + std::string(1, s_[i_]) + "'" : "expected a system");
    std::string name(s_.substr(start, i_ - start));
    const auto* s = m_.system(name);
    if (!s) throw Error(ErrorCode::kSpec, "unknown system " + name);
    return *s;
  }

  const SpecModel& m_;
  std::string_view s_;
  std::size_t i_ = 0;
};

}  // namespace

kernel::SystemDef compose(const SpecModel& m, std::string_view expr) { return ComposeParser(m, expr).parse(); }

}  // namespace ioa::spec

#include "ioa/types.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <set>

#include "ioa/error.hpp"

namespace ioa::types {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kSaturated / b) return kSaturated;
  return a * b;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > kSaturated - b ? kSaturated : a + b;
}

const Field* find_field(const RecordSet& r, const std::string& name) {
  for (const auto& f : r.fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const DatumField* find_field(const Datum& d, const std::string& name) {
  for (const auto& f : d.fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::vector<std::string> field_names(const RecordSet& r) {
  std::vector<std::string> out;
  for (const auto& f : r.fields) out.push_back(f.name);
  return out;
}

// Strings over `chars` with length <= max_len in canonical order.
std::vector<Datum> enumerate_strings(const std::string& chars, std::size_t max_len,
                                     std::size_t limit) {
  std::vector<Datum> out;
  if (limit == 0) return out;
  out.push_back(Datum::atom(""));
  std::vector<std::string> layer{""};
  for (std::size_t len = 1; len <= max_len && out.size() < limit && !chars.empty(); ++len) {
    std::vector<std::string> next;
    for (const auto& prefix : layer) {
      for (char c : chars) {
        next.push_back(prefix + c);
        out.push_back(Datum::atom(next.back()));
        if (out.size() >= limit) return out;
      }
    }
    layer = std::move(next);
  }
  return out;
}

std::string quote_chars(const std::string& chars) {
  std::string out = "\"";
  for (char c : chars) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

// --- Charset ---------------------------------------------------------------

Charset Charset::named(std::string_view name) {
  Charset c;
  c.name_ = std::string(name);
  for (int ch = 0; ch < 128; ++ch) {
    bool graph = ch >= 0x21 && ch <= 0x7e;
    bool digit = ch >= '0' && ch <= '9';
    bool lower = ch >= 'a' && ch <= 'z';
    bool upper = ch >= 'A' && ch <= 'Z';
    bool in = false;
    if (name == "any") in = graph;
    else if (name == "print") in = graph || ch == ' ';
    else if (name == "alnum") in = digit || lower || upper;
    else if (name == "alpha") in = lower || upper;
    else if (name == "digit") in = digit;
    else if (name == "lower") in = lower;
    else if (name == "upper") in = upper;
    else throw Error(ErrorCode::kDomain, "unknown charset " + std::string(name));
    c.bits_[static_cast<std::size_t>(ch)] = in;
  }
  return c;
}

Charset Charset::literal(std::string_view chars) {
  Charset c;
  for (char ch : chars) {
    auto u = static_cast<unsigned char>(ch);
    if (u < 0x20 || u > 0x7e) {
      throw Error(ErrorCode::kDomain, "charset characters must be printable ASCII");
    }
    c.bits_[u] = true;
  }
  return c;
}

bool Charset::contains(char c) const {
  auto u = static_cast<unsigned char>(c);
  return u < 128 && bits_[u];
}

Charset Charset::intersect(const Charset& other) const {
  Charset c;
  c.bits_ = bits_ & other.bits_;
  if (c.bits_ == bits_) c.name_ = name_;
  else if (c.bits_ == other.bits_) c.name_ = other.name_;
  return c;
}

std::string Charset::chars() const {
  std::string out;
  for (std::size_t i = 0; i < 128; ++i) {
    if (bits_[i]) out += static_cast<char>(i);
  }
  return out;
}

std::string Charset::spelling() const {
  if (!name_.empty()) return name_;
  return quote_chars(chars());
}

// --- Datum -----------------------------------------------------------------

Datum Datum::atom(std::string s) {
  Datum d;
  d.text = std::move(s);
  return d;
}

Datum Datum::make_record(std::vector<DatumField> fields) {
  std::sort(fields.begin(), fields.end(),
            [](const DatumField& a, const DatumField& b) { return a.name < b.name; });
  Datum d;
  d.record = true;
  d.fields = std::move(fields);
  return d;
}

std::string Datum::str() const {
  if (!record) return text;
  std::string out = "{";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i].name + "=" + fields[i].value.str();
  }
  return out + "}";
}

bool operator==(const Datum& a, const Datum& b) {
  if (a.record != b.record) return false;
  if (!a.record) return a.text == b.text;
  return a.fields == b.fields;
}

namespace {

Datum parse_datum_at(std::string_view s, std::size_t& pos) {
  if (pos < s.size() && s[pos] == '{') {
    ++pos;
    std::vector<DatumField> fields;
    if (pos < s.size() && s[pos] == '}') {
      ++pos;
      return Datum::make_record({});
    }
    while (true) {
      std::size_t eq = s.find('=', pos);
      if (eq == std::string_view::npos) {
        throw Error(ErrorCode::kDomain, "malformed record value: " + std::string(s));
      }
      std::string name(s.substr(pos, eq - pos));
      pos = eq + 1;
      fields.push_back({name, parse_datum_at(s, pos)});
      if (pos >= s.size()) throw Error(ErrorCode::kDomain, "unterminated record: " + std::string(s));
      if (s[pos] == ',') {
        ++pos;
        continue;
      }
      if (s[pos] == '}') {
        ++pos;
        break;
      }
      throw Error(ErrorCode::kDomain, "malformed record value: " + std::string(s));
    }
    return Datum::make_record(std::move(fields));
  }
  std::size_t start = pos;
  while (pos < s.size() && s[pos] != ',' && s[pos] != '}') ++pos;
  return Datum::atom(std::string(s.substr(start, pos - start)));
}

}  // namespace

Datum parse_datum(std::string_view text) {
  if (text.empty() || text.front() != '{') return Datum::atom(std::string(text));
  std::size_t pos = 0;
  Datum d = parse_datum_at(text, pos);
  if (pos != text.size()) throw Error(ErrorCode::kDomain, "trailing input in value: " + std::string(text));
  return d;
}

// --- ValueSetDesc ----------------------------------------------------------

ValueSetDesc ValueSetDesc::enumerated(std::vector<std::string> atoms) {
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  return {EnumSet{std::move(atoms)}};
}

ValueSetDesc ValueSetDesc::string(Charset charset, std::size_t max_len) {
  return {StringSet{std::move(charset), max_len}};
}

ValueSetDesc ValueSetDesc::record(std::vector<Field> fields) {
  std::sort(fields.begin(), fields.end(),
            [](const Field& a, const Field& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < fields.size(); ++i) {
    if (fields[i].name == fields[i - 1].name) {
      throw Error(ErrorCode::kDomain, "duplicate record field " + fields[i].name);
    }
  }
  return {RecordSet{std::move(fields)}};
}

std::string ValueSetDesc::str() const {
  if (const auto* e = std::get_if<EnumSet>(&rep)) {
    std::string out = "enum{";
    for (std::size_t i = 0; i < e->atoms.size(); ++i) {
      out += (i ? ", " : "") + e->atoms[i];
    }
    return out + "}";
  }
  if (const auto* s = std::get_if<StringSet>(&rep)) {
    return "string(charset=" + s->charset.spelling() +
           ", maxlen=" + std::to_string(s->max_len) + ")";
  }
  const auto& r = std::get<RecordSet>(rep);
  std::string out = "record{";
  for (std::size_t i = 0; i < r.fields.size(); ++i) {
    out += (i ? ", " : "") + r.fields[i].name + ": " + r.fields[i].desc.str();
  }
  return out + "}";
}

bool operator==(const ValueSetDesc& a, const ValueSetDesc& b) {
  if (a.rep.index() != b.rep.index()) return false;
  if (const auto* e = std::get_if<EnumSet>(&a.rep)) {
    return e->atoms == std::get<EnumSet>(b.rep).atoms;
  }
  if (const auto* s = std::get_if<StringSet>(&a.rep)) {
    const auto& t = std::get<StringSet>(b.rep);
    return s->charset == t.charset && s->max_len == t.max_len;
  }
  const auto& x = std::get<RecordSet>(a.rep).fields;
  const auto& y = std::get<RecordSet>(b.rep).fields;
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].name != y[i].name || !(x[i].desc == y[i].desc)) return false;
  }
  return true;
}

bool contains(const ValueSetDesc& set, const Datum& value) {
  if (const auto* e = std::get_if<EnumSet>(&set.rep)) {
    return !value.record &&
           std::binary_search(e->atoms.begin(), e->atoms.end(), value.text);
  }
  if (const auto* s = std::get_if<StringSet>(&set.rep)) {
    if (value.record || value.text.size() > s->max_len) return false;
    return std::all_of(value.text.begin(), value.text.end(),
                       [&](char c) { return s->charset.contains(c); });
  }
  const auto& r = std::get<RecordSet>(set.rep);
  if (!value.record || value.fields.size() != r.fields.size()) return false;
  for (std::size_t i = 0; i < r.fields.size(); ++i) {
    if (value.fields[i].name != r.fields[i].name) return false;
    if (!contains(r.fields[i].desc, value.fields[i].value)) return false;
  }
  return true;
}

std::uint64_t cardinality(const ValueSetDesc& set) {
  if (const auto* e = std::get_if<EnumSet>(&set.rep)) return e->atoms.size();
  if (const auto* s = std::get_if<StringSet>(&set.rep)) {
    std::uint64_t total = 1, layer = 1;
    for (std::size_t len = 1; len <= s->max_len; ++len) {
      layer = sat_mul(layer, s->charset.size());
      if (layer == 0) break;
      total = sat_add(total, layer);
      if (total == kSaturated) break;
    }
    return total;
  }
  std::uint64_t total = 1;
  for (const auto& f : std::get<RecordSet>(set.rep).fields) {
    total = sat_mul(total, cardinality(f.desc));
  }
  return total;
}

std::vector<Datum> enumerate(const ValueSetDesc& set, std::size_t limit) {
  if (const auto* e = std::get_if<EnumSet>(&set.rep)) {
    std::vector<Datum> out;
    for (const auto& a : e->atoms) {
      if (out.size() >= limit) break;
      out.push_back(Datum::atom(a));
    }
    return out;
  }
  if (const auto* s = std::get_if<StringSet>(&set.rep)) {
    return enumerate_strings(s->charset.chars(), s->max_len, limit);
  }
  const auto& r = std::get<RecordSet>(set.rep);
  std::vector<std::vector<DatumField>> acc{{}};
  for (const auto& f : r.fields) {
    auto values = enumerate(f.desc, limit);
    std::vector<std::vector<DatumField>> next;
    for (const auto& prefix : acc) {
      for (const auto& v : values) {
        auto row = prefix;
        row.push_back({f.name, v});
        next.push_back(std::move(row));
        if (next.size() >= limit) break;
      }
      if (next.size() >= limit) break;
    }
    acc = std::move(next);
  }
  std::vector<Datum> out;
  for (auto& row : acc) out.push_back(Datum::make_record(std::move(row)));
  return out;
}

std::optional<Datum> any_element(const ValueSetDesc& set) {
  auto v = enumerate(set, 1);
  if (v.empty()) return std::nullopt;
  return v.front();
}

SubsetResult subset(const ValueSetDesc& a, const ValueSetDesc& b) {
  if (a.is_record() != b.is_record()) {
    throw Error(ErrorCode::kIncomparableTypes, a.str() + " vs " + b.str());
  }
  if (const auto* ea = std::get_if<EnumSet>(&a.rep)) {
    for (const auto& atom : ea->atoms) {
      Datum d = Datum::atom(atom);
      if (!contains(b, d)) return {false, d};
    }
    return {true, std::nullopt};
  }
  if (const auto* sa = std::get_if<StringSet>(&a.rep)) {
    if (const auto* sb = std::get_if<StringSet>(&b.rep)) {
      if (sa->max_len == 0 || sa->charset.size() == 0) return {true, std::nullopt};
      if (!sa->charset.subset_of(sb->charset)) {
        for (char c : sa->charset.chars()) {
          if (!sb->charset.contains(c)) return {false, Datum::atom(std::string(1, c))};
        }
      }
      if (sa->max_len > sb->max_len) {
        return {false, Datum::atom(std::string(sb->max_len + 1, sa->charset.chars()[0]))};
      }
      return {true, std::nullopt};
    }
    // String set against a finite enumeration: if the string set is larger,
    // one of its first |E|+1 elements must fall outside.
    const auto& eb = std::get<EnumSet>(b.rep);
    std::uint64_t card = cardinality(a);
    std::size_t limit = card <= eb.atoms.size() ? static_cast<std::size_t>(card)
                                                : eb.atoms.size() + 1;
    for (const auto& d : enumerate(a, limit)) {
      if (!contains(b, d)) return {false, d};
    }
    return {true, std::nullopt};
  }
  const auto& ra = std::get<RecordSet>(a.rep);
  const auto& rb = std::get<RecordSet>(b.rep);
  if (cardinality(a) == 0) return {true, std::nullopt};
  auto filler = *any_element(a);
  if (field_names(ra) != field_names(rb)) return {false, filler};
  for (std::size_t i = 0; i < ra.fields.size(); ++i) {
    auto r = subset(ra.fields[i].desc, rb.fields[i].desc);
    if (!r.holds) {
      filler.fields[i].value = *r.witness;
      return {false, filler};
    }
  }
  return {true, std::nullopt};
}

// --- DataType --------------------------------------------------------------

DataType::DataType(std::string name, ValueSetDesc values)
    : name_(std::move(name)), values_(std::move(values)) {}

void DataType::register_op(OperationSig op) {
  SubsetResult r;
  try {
    r = subset(values_, op.domain);
  } catch (const Error&) {
    r.holds = false;
  }
  if (!r.holds) {
    throw Error(ErrorCode::kDomain,
                "operation " + op.name + " cannot process every value of " + name_ +
                    (r.witness ? " (e.g. " + r.witness->str() + ")" : ""));
  }
  if (find_op(op.name)) {
    throw Error(ErrorCode::kDomain, "operation " + op.name + " already registered on " + name_);
  }
  ops_.push_back(std::move(op));
}

const OperationSig* DataType::find_op(std::string_view name) const {
  for (const auto& op : ops_) {
    if (op.name == name) return &op;
  }
  return nullptr;
}

// --- Projection ------------------------------------------------------------

ProjectionRule ProjectionRule::truncate(std::size_t n) {
  ProjectionRule r;
  r.kind = Kind::kTruncate;
  r.length = n;
  return r;
}

ProjectionRule ProjectionRule::filter(Charset c) {
  ProjectionRule r;
  r.kind = Kind::kFilter;
  r.charset = std::move(c);
  return r;
}

ProjectionRule ProjectionRule::select(std::vector<std::string> fields) {
  ProjectionRule r;
  r.kind = Kind::kSelect;
  std::sort(fields.begin(), fields.end());
  r.fields = std::move(fields);
  return r;
}

ProjectionRule ProjectionRule::mapping(std::map<std::string, std::string> table) {
  ProjectionRule r;
  r.kind = Kind::kTable;
  r.table = std::move(table);
  return r;
}

std::string ProjectionRule::str() const {
  switch (kind) {
    case Kind::kTruncate:
      return "truncate(" + std::to_string(length) + ")";
    case Kind::kFilter:
      return "filter(" + charset->spelling() + ")";
    case Kind::kSelect: {
      std::string out = "select(";
      for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? ", " : "") + fields[i];
      return out + ")";
    }
    case Kind::kTable: {
      std::string out = "table(";
      bool first = true;
      for (const auto& [k, v] : table) {
        out += (first ? "" : ", ") + k + "->" + v;
        first = false;
      }
      return out + ")";
    }
  }
  return "";
}

namespace {

Datum apply_rule(const ProjectionRule& rule, const Datum& v) {
  using Kind = ProjectionRule::Kind;
  switch (rule.kind) {
    case Kind::kTruncate:
      if (v.record) throw Error(ErrorCode::kProjectionMismatch, "truncate applied to record " + v.str());
      return Datum::atom(v.text.substr(0, rule.length));
    case Kind::kFilter: {
      if (v.record) throw Error(ErrorCode::kProjectionMismatch, "filter applied to record " + v.str());
      std::string out;
      for (char c : v.text) {
        if (rule.charset->contains(c)) out += c;
      }
      return Datum::atom(out);
    }
    case Kind::kSelect: {
      if (!v.record) throw Error(ErrorCode::kProjectionMismatch, "select applied to " + v.str());
      std::vector<DatumField> kept;
      for (const auto& name : rule.fields) {
        const auto* f = find_field(v, name);
        if (!f) throw Error(ErrorCode::kProjectionMismatch, "value " + v.str() + " has no field " + name);
        kept.push_back(*f);
      }
      return Datum::make_record(std::move(kept));
    }
    case Kind::kTable: {
      if (v.record) throw Error(ErrorCode::kProjectionMismatch, "table applied to record " + v.str());
      auto it = rule.table.find(v.text);
      if (it == rule.table.end()) {
        throw Error(ErrorCode::kProjectionMismatch, "table has no entry for " + v.text);
      }
      return Datum::atom(it->second);
    }
  }
  return v;
}

ValueSetDesc image_rule(const ProjectionRule& rule, const ValueSetDesc& set) {
  using Kind = ProjectionRule::Kind;
  if (const auto* e = std::get_if<EnumSet>(&set.rep)) {
    if (rule.kind == Kind::kSelect) {
      throw Error(ErrorCode::kProjectionMismatch, rule.str() + " does not apply to " + set.str());
    }
    std::vector<std::string> out;
    for (const auto& a : e->atoms) out.push_back(apply_rule(rule, Datum::atom(a)).text);
    return ValueSetDesc::enumerated(std::move(out));
  }
  if (const auto* s = std::get_if<StringSet>(&set.rep)) {
    switch (rule.kind) {
      case Kind::kTruncate:
        return ValueSetDesc::string(s->charset, std::min(s->max_len, rule.length));
      case Kind::kFilter:
        return ValueSetDesc::string(s->charset.intersect(*rule.charset), s->max_len);
      default:
        throw Error(ErrorCode::kProjectionMismatch, rule.str() + " does not apply to " + set.str());
    }
  }
  const auto& r = std::get<RecordSet>(set.rep);
  if (rule.kind != Kind::kSelect) {
    throw Error(ErrorCode::kProjectionMismatch, rule.str() + " does not apply to " + set.str());
  }
  std::vector<Field> kept;
  for (const auto& name : rule.fields) {
    const auto* f = find_field(r, name);
    if (!f) throw Error(ErrorCode::kProjectionMismatch, set.str() + " has no field " + name);
    kept.push_back(*f);
  }
  return ValueSetDesc::record(std::move(kept));
}

}  // namespace

Datum Projection::apply(const Datum& value) const {
  Datum v = value;
  for (const auto& rule : rules) v = apply_rule(rule, v);
  return v;
}

ValueSetDesc Projection::image(const ValueSetDesc& set) const {
  ValueSetDesc d = set;
  for (const auto& rule : rules) d = image_rule(rule, d);
  return d;
}

std::string Projection::str() const {
  if (rules.empty()) return "id";
  std::string out;
  for (std::size_t i = 0; i < rules.size(); ++i) out += (i ? " . " : "") + rules[i].str();
  return out;
}

Projection identity_projection(const std::string& type_name) {
  return Projection{"id", type_name, type_name, {}};
}

// --- Relations and casts ---------------------------------------------------

namespace {

// Operations of `t2` must be declared on `t1` or able to process all of
// `values1` (the projected values for extends).
void check_registry(const ValueSetDesc& values1, const DataType& t1, const DataType& t2,
                    RelationVerdict& v) {
  v.ops_admissible = true;
  for (const auto& op : t2.ops()) {
    if (t1.find_op(op.name)) continue;
    bool ok = false;
    try {
      ok = subset(values1, op.domain).holds;
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) {
      v.ops_admissible = false;
      v.missing_op = op.name;
      return;
    }
  }
}

// A value of `set` whose projection escapes `target`, found by checking the
// image witness itself, a record padded around it, then bounded enumeration.
std::optional<Datum> preimage_witness(const Projection& pi, const ValueSetDesc& set,
                                      const ValueSetDesc& target, const Datum& image_witness) {
  auto escapes = [&](const Datum& d) {
    if (!contains(set, d)) return false;
    try {
      return !contains(target, pi.apply(d));
    } catch (const Error&) {
      return false;
    }
  };
  if (escapes(image_witness)) return image_witness;
  if (image_witness.record && set.is_record()) {
    if (auto filler = any_element(set)) {
      Datum padded = *filler;
      for (auto& f : padded.fields) {
        if (const auto* w = find_field(image_witness, f.name)) f.value = w->value;
      }
      if (escapes(padded)) return padded;
    }
  }
  for (const auto& d : enumerate(set, 200000)) {
    if (escapes(d)) return d;
  }
  return std::nullopt;
}

}  // namespace

RelationVerdict check_restricts(const DataType& t1, const DataType& t2) {
  RelationVerdict v;
  auto r = subset(t1.values(), t2.values());
  v.values_subset = r.holds;
  v.witness = r.witness;
  check_registry(t1.values(), t1, t2, v);
  v.holds = v.values_subset && v.ops_admissible;
  return v;
}

RelationVerdict check_extends(const DataType& t1, const DataType& t2, const Projection& pi) {
  if (pi.source != t1.name()) {
    throw Error(ErrorCode::kProjectionMismatch,
                "projection " + pi.name + " maps from " + pi.source + ", not " + t1.name());
  }
  ValueSetDesc image = pi.image(t1.values());
  RelationVerdict v;
  auto r = subset(image, t2.values());
  v.values_subset = r.holds;
  if (!r.holds) {
    v.witness = preimage_witness(pi, t1.values(), t2.values(), *r.witness);
    if (!v.witness) v.witness = r.witness;
  }
  check_registry(image, t1, t2, v);
  v.holds = v.values_subset && v.ops_admissible;
  return v;
}

Datum cast_expand(const Datum& value, const DataType& from, const DataType& to) {
  RelationVerdict v;
  try {
    v = check_restricts(from, to);
  } catch (const Error& e) {
    throw Error(ErrorCode::kUnsafeCast, from.name() + " -> " + to.name() + ": " + e.what());
  }
  if (!v.holds) {
    throw Error(ErrorCode::kUnsafeCast,
                from.name() + " does not restrict " + to.name() +
                    (v.witness ? " (witness " + v.witness->str() + ")" : "") +
                    (v.missing_op ? " (operation " + *v.missing_op + ")" : ""));
  }
  if (!contains(from.values(), value)) {
    throw Error(ErrorCode::kValueOutsideType, value.str() + " is not a value of " + from.name());
  }
  return value;
}

Datum cast_truncate(const Datum& value, const DataType& from, const DataType& to,
                    const Projection& pi) {
  if (pi.source != from.name() || pi.target != to.name()) {
    throw Error(ErrorCode::kUnsafeCast, "projection " + pi.name + " does not map " +
                                            from.name() + " to " + to.name());
  }
  RelationVerdict v;
  try {
    v = check_extends(from, to, pi);
  } catch (const Error& e) {
    throw Error(ErrorCode::kUnsafeCast, from.name() + " -> " + to.name() + ": " + e.what());
  }
  if (!v.holds) {
    throw Error(ErrorCode::kUnsafeCast,
                from.name() + " does not extend " + to.name() + " under " + pi.name +
                    (v.witness ? " (witness " + v.witness->str() + ")" : ""));
  }
  if (!contains(from.values(), value)) {
    throw Error(ErrorCode::kValueOutsideType, value.str() + " is not a value of " + from.name());
  }
  return pi.apply(value);
}

std::string_view to_string(RelationKind kind) {
  switch (kind) {
    case RelationKind::kRestricts: return "restricts";
    case RelationKind::kExpands: return "expands";
    case RelationKind::kExtends: return "extends";
    case RelationKind::kTruncates: return "truncates";
  }
  return "";
}

// --- Hierarchy -------------------------------------------------------------

const DataType& TypeHierarchy::type(const std::string& name) const {
  auto it = nodes_.find(name);
  if (it == nodes_.end()) throw Error(ErrorCode::kHierarchyError, "unknown type " + name);
  return it->second;
}

Datum TypeHierarchy::cast(const Datum& value, const std::string& from,
                          const std::string& to) const {
  const auto& src = type(from);
  type(to);
  if (from == to) {
    if (!contains(src.values(), value)) {
      throw Error(ErrorCode::kValueOutsideType, value.str() + " is not a value of " + from);
    }
    return value;
  }
  // Breadth-first over safe casts, so the shortest chain is used.
  std::map<std::string, std::size_t> via;
  std::deque<std::string> queue{from};
  via[from] = casts_.size();
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    if (cur == to) break;
    for (std::size_t k = 0; k < casts_.size(); ++k) {
      if (casts_[k].from == cur && !via.count(casts_[k].to)) {
        via[casts_[k].to] = k;
        queue.push_back(casts_[k].to);
      }
    }
  }
  if (!via.count(to)) {
    throw Error(ErrorCode::kUnsafeCast, "no safe cast from " + from + " to " + to);
  }
  std::vector<std::size_t> chain;
  for (std::string cur = to; cur != from; cur = casts_[via[cur]].from) chain.push_back(via[cur]);
  std::reverse(chain.begin(), chain.end());
  Datum v = value;
  for (std::size_t k : chain) {
    const auto& c = casts_[k];
    if (c.kind == CastKind::kExpansion) {
      v = cast_expand(v, type(c.from), type(c.to));
    } else {
      v = cast_truncate(v, type(c.from), type(c.to), *c.projection);
    }
  }
  return v;
}

namespace {

bool has_cycle(const std::vector<std::pair<std::string, std::string>>& edges,
               std::vector<std::string>& cycle) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [a, b] : edges) adj[a].push_back(b);
  std::map<std::string, int> color;
  std::vector<std::string> stack;
  std::function<bool(const std::string&)> dfs = [&](const std::string& n) {
    color[n] = 1;
    stack.push_back(n);
    for (const auto& m : adj[n]) {
      if (color[m] == 1) {
        auto it = std::find(stack.begin(), stack.end(), m);
        cycle.assign(it, stack.end());
        cycle.push_back(m);
        return true;
      }
      if (color[m] == 0 && dfs(m)) return true;
    }
    stack.pop_back();
    color[n] = 2;
    return false;
  };
  for (const auto& [n, _] : adj) {
    if (color[n] == 0 && dfs(n)) return true;
  }
  return false;
}

std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) out += (i ? " -> " : "") + path[i];
  return out;
}

}  // namespace

TypeHierarchy build_hierarchy(const TypeDeclarations& decls) {
  TypeHierarchy h;
  for (const auto& t : decls.types) {
    if (!h.nodes_.emplace(t.name(), t).second) {
      throw Error(ErrorCode::kHierarchyError, "duplicate type " + t.name());
    }
  }
  std::map<std::string, const Projection*> projections;
  for (const auto& p : decls.projections) projections[p.name] = &p;

  std::vector<std::pair<std::string, std::string>> restricts_edges, extends_edges;
  for (const auto& rel : decls.relations) {
    std::string label = rel.from + " " + std::string(to_string(rel.kind)) + " " + rel.to;
    if (!h.nodes_.count(rel.from) || !h.nodes_.count(rel.to)) {
      throw Error(ErrorCode::kHierarchyError, label + ": unknown type");
    }
    HierarchyEdge edge{rel.from, rel.to, rel.kind, std::nullopt};
    bool by_projection =
        rel.kind == RelationKind::kExtends || rel.kind == RelationKind::kTruncates;
    // The narrow side is the one that restricts / extends.
    const std::string& lower =
        (rel.kind == RelationKind::kRestricts || rel.kind == RelationKind::kExtends) ? rel.from
                                                                                      : rel.to;
    const std::string& upper = lower == rel.from ? rel.to : rel.from;
    if (!by_projection) {
      auto v = check_restricts(h.nodes_.at(lower), h.nodes_.at(upper));
      if (!v.holds) {
        throw Error(ErrorCode::kHierarchyError,
                    label + " fails" + (v.witness ? ": witness " + v.witness->str() : "") +
                        (v.missing_op ? ": operation " + *v.missing_op : ""));
      }
      restricts_edges.emplace_back(lower, upper);
      h.casts_.push_back({lower, upper, CastKind::kExpansion, std::nullopt});
    } else {
      if (!rel.projection || !projections.count(*rel.projection)) {
        throw Error(ErrorCode::kHierarchyError, label + ": missing projection");
      }
      const Projection& pi = *projections.at(*rel.projection);
      RelationVerdict v;
      try {
        v = check_extends(h.nodes_.at(lower), h.nodes_.at(upper), pi);
      } catch (const Error& e) {
        throw Error(ErrorCode::kHierarchyError, label + ": " + e.what());
      }
      if (!v.holds) {
        throw Error(ErrorCode::kHierarchyError,
                    label + " fails" + (v.witness ? ": witness " + v.witness->str() : ""));
      }
      edge.projection = pi;
      extends_edges.emplace_back(lower, upper);
      h.casts_.push_back({lower, upper, CastKind::kTruncation, pi});
    }
    h.edges_.push_back(std::move(edge));
  }
  std::vector<std::string> cycle;
  if (has_cycle(restricts_edges, cycle)) {
    throw Error(ErrorCode::kHierarchyCycle, "restricts cycle " + join_path(cycle));
  }
  if (has_cycle(extends_edges, cycle)) {
    throw Error(ErrorCode::kHierarchyCycle, "extends cycle " + join_path(cycle));
  }
  return h;
}

}  // namespace ioa::types

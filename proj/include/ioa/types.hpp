#pragma once

#include <bitset>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ioa::types {

// A finite character class over 7-bit ASCII. Named classes: any (graphic
// characters 0x21-0x7e), print (any plus space), alnum, alpha, digit, lower,
// upper. Literal classes list their characters explicitly.
class Charset {
 public:
  static Charset named(std::string_view name);
  static Charset literal(std::string_view chars);

  bool contains(char c) const;
  bool subset_of(const Charset& other) const { return (bits_ & ~other.bits_).none(); }
  Charset intersect(const Charset& other) const;
  std::size_t size() const { return bits_.count(); }
  // Characters in ascending code order.
  std::string chars() const;
  // `alnum` for named classes, `"xyz"` for literal ones.
  std::string spelling() const;

  friend bool operator==(const Charset& a, const Charset& b) { return a.bits_ == b.bits_; }

 private:
  std::bitset<128> bits_;
  std::string name_;
};

struct Datum;
struct DatumField;

// A data value: a plain string (atoms of enumerated types are strings too) or
// a record of named fields, kept sorted by field name.
struct Datum {
  std::string text;
  std::vector<DatumField> fields;
  bool record = false;

  static Datum atom(std::string s);
  static Datum make_record(std::vector<DatumField> fields);
  std::string str() const;
};

struct DatumField {
  std::string name;
  Datum value;
};

bool operator==(const Datum& a, const Datum& b);
inline bool operator==(const DatumField& a, const DatumField& b) {
  return a.name == b.name && a.value == b.value;
}

// Parses `abc` or `{a=x,b={c=y}}`.
Datum parse_datum(std::string_view text);

struct ValueSetDesc;
struct Field;

struct EnumSet {
  std::vector<std::string> atoms;  // sorted, unique
};

struct StringSet {
  Charset charset;
  std::size_t max_len = 0;
};

struct RecordSet {
  std::vector<Field> fields;  // sorted by name
};

struct ValueSetDesc {
  std::variant<EnumSet, StringSet, RecordSet> rep;

  static ValueSetDesc enumerated(std::vector<std::string> atoms);
  static ValueSetDesc string(Charset charset, std::size_t max_len);
  static ValueSetDesc record(std::vector<Field> fields);

  bool is_enum() const { return std::holds_alternative<EnumSet>(rep); }
  bool is_string() const { return std::holds_alternative<StringSet>(rep); }
  bool is_record() const { return std::holds_alternative<RecordSet>(rep); }

  std::string str() const;
};

struct Field {
  std::string name;
  ValueSetDesc desc;
};

bool operator==(const ValueSetDesc& a, const ValueSetDesc& b);

bool contains(const ValueSetDesc& set, const Datum& value);

// Saturates at UINT64_MAX.
std::uint64_t cardinality(const ValueSetDesc& set);

// The first `limit` elements in canonical order (shorter strings first).
std::vector<Datum> enumerate(const ValueSetDesc& set, std::size_t limit);

std::optional<Datum> any_element(const ValueSetDesc& set);

struct SubsetResult {
  bool holds = false;
  std::optional<Datum> witness;  // element of the left set outside the right
};

// Decides a ⊆ b. Records compare only with records; throws IncomparableTypes
// otherwise. Strings are compared by charset and length, never enumerated,
// except against an enumerated set where the finite side bounds the search.
SubsetResult subset(const ValueSetDesc& a, const ValueSetDesc& b);

struct OperationSig {
  std::string name;
  ValueSetDesc domain;
  friend bool operator==(const OperationSig&, const OperationSig&) = default;
};

class DataType {
 public:
  DataType(std::string name, ValueSetDesc values);

  const std::string& name() const { return name_; }
  const ValueSetDesc& values() const { return values_; }
  const std::vector<OperationSig>& ops() const { return ops_; }

  // Rejects an operation whose domain does not contain every value.
  void register_op(OperationSig op);
  const OperationSig* find_op(std::string_view name) const;
  friend bool operator==(const DataType&, const DataType&) = default;

 private:
  std::string name_;
  ValueSetDesc values_;
  std::vector<OperationSig> ops_;
};

struct ProjectionRule {
  enum class Kind { kTruncate, kFilter, kSelect, kTable };
  Kind kind = Kind::kTruncate;
  std::size_t length = 0;                     // kTruncate
  std::optional<Charset> charset;             // kFilter
  std::vector<std::string> fields;            // kSelect
  std::map<std::string, std::string> table;   // kTable

  static ProjectionRule truncate(std::size_t n);
  static ProjectionRule filter(Charset c);
  static ProjectionRule select(std::vector<std::string> fields);
  static ProjectionRule mapping(std::map<std::string, std::string> table);
  std::string str() const;
  friend bool operator==(const ProjectionRule&, const ProjectionRule&) = default;
};

// Rules apply left to right; no rules is the identity.
struct Projection {
  std::string name;
  std::string source;
  std::string target;
  std::vector<ProjectionRule> rules;

  Datum apply(const Datum& value) const;
  // Intensional image of a value set; throws ProjectionMismatch if a rule
  // does not apply to the set's constructor.
  ValueSetDesc image(const ValueSetDesc& set) const;
  std::string str() const;
  friend bool operator==(const Projection&, const Projection&) = default;
};

Projection identity_projection(const std::string& type_name);

// Both conjuncts of a relation are reported separately. `values_subset` is
// the verdict under the maximal operation set, where F1 ⊇ F2 reduces to the
// value-set condition; `ops_admissible` checks the explicit registry.
struct RelationVerdict {
  bool holds = false;
  bool values_subset = false;
  bool ops_admissible = false;
  std::optional<Datum> witness;
  std::optional<std::string> missing_op;

  bool verdicts_differ() const { return values_subset != ops_admissible; }
};

RelationVerdict check_restricts(const DataType& t1, const DataType& t2);
RelationVerdict check_extends(const DataType& t1, const DataType& t2,
                              const Projection& pi);

Datum cast_expand(const Datum& value, const DataType& from, const DataType& to);
Datum cast_truncate(const Datum& value, const DataType& from, const DataType& to,
                    const Projection& pi);

enum class RelationKind { kRestricts, kExpands, kExtends, kTruncates };
std::string_view to_string(RelationKind kind);

struct RelationDecl {
  std::string from;
  RelationKind kind;
  std::string to;
  std::optional<std::string> projection;  // extends / truncates
  friend bool operator==(const RelationDecl&, const RelationDecl&) = default;
};

struct TypeDeclarations {
  std::vector<DataType> types;
  std::vector<Projection> projections;
  std::vector<RelationDecl> relations;
};

struct HierarchyEdge {
  std::string from;
  std::string to;
  RelationKind kind;
  std::optional<Projection> projection;
};

enum class CastKind { kExpansion, kTruncation };

struct SafeCast {
  std::string from;
  std::string to;
  CastKind kind;
  std::optional<Projection> projection;
};

class TypeHierarchy {
 public:
  const std::map<std::string, DataType>& nodes() const { return nodes_; }
  const std::vector<HierarchyEdge>& edges() const { return edges_; }
  // One safe cast per edge, pointing against the direction of construction.
  const std::vector<SafeCast>& casts() const { return casts_; }

  const DataType& type(const std::string& name) const;

  // Follows a chain of safe casts from `from` to `to`; UnsafeCast if none.
  Datum cast(const Datum& value, const std::string& from, const std::string& to) const;

 private:
  friend TypeHierarchy build_hierarchy(const TypeDeclarations&);
  std::map<std::string, DataType> nodes_;
  std::vector<HierarchyEdge> edges_;
  std::vector<SafeCast> casts_;
};

TypeHierarchy build_hierarchy(const TypeDeclarations& decls);

}  // namespace ioa::types

#include <doctest.h>

#include <random>

#include "ioa/error.hpp"
#include "ioa/types.hpp"
#include "oracle/brute_subset.hpp"
#include "test_util.hpp"

using namespace ioa;
using namespace ioa::types;

namespace {

DataType str_type(const std::string& name, const Charset& cs, std::size_t len) {
  return DataType(name, ValueSetDesc::string(cs, len));
}

Projection filter_trunc(const std::string& src, const std::string& dst, const Charset& keep,
                        std::size_t n) {
  return Projection{"p", src, dst, {ProjectionRule::filter(keep), ProjectionRule::truncate(n)}};
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

const std::vector<std::string> kUniverse{"a", "b", "c", "d", "e", "f"};

std::vector<std::string> random_subset(std::mt19937_64& rng, std::size_t min = 0) {
  std::vector<std::string> out;
  while (out.size() < min || out.empty()) {
    out.clear();
    for (const auto& u : kUniverse) {
      if (rng() % 2) out.push_back(u);
    }
    if (min == 0) break;
  }
  return out;
}

}  // namespace

TEST_CASE("the named character-string trio") {
  auto char40 = str_type("Char40", Charset::named("any"), 40);
  auto alnum40 = str_type("Alphanum40", Charset::named("alnum"), 40);
  auto alnum20 = str_type("Alphanum20", Charset::named("alnum"), 20);

  CHECK(check_restricts(alnum40, char40).holds);
  CHECK(check_restricts(char40, char40).holds);
  auto rev = check_restricts(char40, alnum40);
  CHECK_FALSE(rev.holds);
  REQUIRE(rev.witness);
  CHECK(rev.witness->text == "!");

  auto pi = filter_trunc("Char40", "Alphanum20", Charset::named("alnum"), 20);
  CHECK(check_extends(char40, alnum20, pi).holds);
  CHECK(check_extends(char40, char40, identity_projection("Char40")).holds);
  Projection trunc_only{"t", "Char40", "Alphanum20", {ProjectionRule::truncate(20)}};
  auto bad = check_extends(char40, alnum20, trunc_only);
  CHECK_FALSE(bad.holds);
  REQUIRE(bad.witness);
  CHECK(bad.witness->text.substr(0, 1) == "!");

  CHECK(cast_expand(Datum::atom("AB12"), alnum40, char40).text == "AB12");
  CHECK(code_of([&] { cast_expand(Datum::atom("ab"), char40, alnum40); }) == ErrorCode::kUnsafeCast);
  CHECK(code_of([&] { cast_expand(Datum::atom("!"), alnum40, char40); }) ==
        ErrorCode::kValueOutsideType);

  CHECK(cast_truncate(Datum::atom("ab!cd"), char40, alnum20, pi).text == "abcd");
  CHECK(cast_truncate(Datum::atom("xy"), char40, char40, identity_projection("Char40")).text == "xy");
  CHECK(code_of([&] { cast_truncate(Datum::atom("ab"), alnum20, char40, pi); }) ==
        ErrorCode::kUnsafeCast);
  CHECK(code_of([&] { check_extends(alnum20, char40, pi); }) == ErrorCode::kProjectionMismatch);
}

TEST_CASE("downscaled trio agrees with brute-force enumeration") {
  struct Case {
    std::string chars_big, chars_small;
    std::size_t len_big, len_small;
    bool named;
  };
  // Literal alphabets at lengths 4/2, then the real classes at lengths 2/1.
  for (const auto& c : {Case{"ab1!", "ab1", 4, 2, false},
                        Case{Charset::named("any").chars(), Charset::named("alnum").chars(), 2, 1, true}}) {
    Charset big = c.named ? Charset::named("any") : Charset::literal(c.chars_big);
    Charset small = c.named ? Charset::named("alnum") : Charset::literal(c.chars_small);
    auto char_big = str_type("CharB", big, c.len_big);
    auto alnum_big = str_type("AlnumB", small, c.len_big);
    auto alnum_small = str_type("AlnumS", small, c.len_small);

    auto v_char = oracle::strings_over(c.chars_big, c.len_big);
    auto v_alnum = oracle::strings_over(c.chars_small, c.len_big);
    auto v_alnum_s = oracle::strings_over(c.chars_small, c.len_small);

    const std::vector<std::pair<const DataType*, const std::set<std::string>*>> all{
        {&char_big, &v_char}, {&alnum_big, &v_alnum}, {&alnum_small, &v_alnum_s}};
    for (const auto& [t1, s1] : all) {
      for (const auto& [t2, s2] : all) {
        auto v = check_restricts(*t1, *t2);
        CHECK(v.holds == oracle::includes(*s2, *s1));
        if (!v.holds) {
          REQUIRE(v.witness);
          CHECK(s1->count(v.witness->text));
          CHECK_FALSE(s2->count(v.witness->text));
        }
      }
    }

    auto pi = filter_trunc("CharB", "AlnumS", small, c.len_small);
    std::set<std::string> image;
    for (const auto& s : v_char) image.insert(oracle::filter_then_truncate(s, c.chars_small, c.len_small));
    CHECK(check_extends(char_big, alnum_small, pi).holds == oracle::includes(v_alnum_s, image));
    CHECK(check_extends(char_big, alnum_small, pi).holds);
    for (const auto& s : v_char) {
      auto out = cast_truncate(Datum::atom(s), char_big, alnum_small, pi);
      CHECK(v_alnum_s.count(out.text));
      CHECK(out.text == oracle::filter_then_truncate(s, c.chars_small, c.len_small));
    }

    Projection trunc_only{"t", "CharB", "AlnumS", {ProjectionRule::truncate(c.len_small)}};
    std::set<std::string> image2;
    for (const auto& s : v_char) image2.insert(s.substr(0, std::min(s.size(), c.len_small)));
    auto v2 = check_extends(char_big, alnum_small, trunc_only);
    CHECK(v2.holds == oracle::includes(v_alnum_s, image2));
    REQUIRE(v2.witness);
    CHECK_FALSE(v_alnum_s.count(trunc_only.apply(*v2.witness).text));

    // restriction is not the opposite of extension
    CHECK_FALSE(check_restricts(char_big, alnum_small).holds);
  }
}

TEST_CASE("generated enumerated pairs agree with brute force") {
  std::mt19937_64 rng(21);
  int pairs = 0;
  for (int n = 0; n < 80; ++n) {
    auto a = random_subset(rng);
    auto b = random_subset(rng);
    DataType ta("A", ValueSetDesc::enumerated(a));
    DataType tb("B", ValueSetDesc::enumerated(b));
    auto v = check_restricts(ta, tb);
    CHECK(v.holds == oracle::includes(as_set(b), as_set(a)));
    CHECK(v.values_subset == v.holds);
    if (!v.holds) {
      REQUIRE(v.witness);
      CHECK(as_set(a).count(v.witness->text));
      CHECK_FALSE(as_set(b).count(v.witness->text));
    }

    std::map<std::string, std::string> table;
    for (const auto& x : a) table[x] = kUniverse[rng() % kUniverse.size()];
    Projection pi{"m", "A", "B", {ProjectionRule::mapping(table)}};
    std::set<std::string> image;
    for (const auto& x : a) image.insert(table[x]);
    auto e = check_extends(ta, tb, pi);
    CHECK(e.holds == oracle::includes(as_set(b), image));
    if (e.holds) {
      for (const auto& x : a) CHECK(contains(tb.values(), cast_truncate(Datum::atom(x), ta, tb, pi)));
    } else {
      REQUIRE(e.witness);
      CHECK_FALSE(as_set(b).count(table[e.witness->text]));
    }
    ++pairs;
  }
  CHECK(pairs >= 50);
}

TEST_CASE("restricts is reflexive and transitive") {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 60; ++n) {
    DataType a("A", ValueSetDesc::enumerated(random_subset(rng)));
    DataType b("B", ValueSetDesc::enumerated(random_subset(rng)));
    DataType c("C", ValueSetDesc::enumerated(random_subset(rng)));
    CHECK(check_restricts(a, a).holds);
    if (check_restricts(a, b).holds && check_restricts(b, c).holds) {
      CHECK(check_restricts(a, c).holds);
    }
    if (check_restricts(a, b).holds && check_restricts(b, a).holds) {
      CHECK(a.values() == b.values());
    }
  }
}

TEST_CASE("expansion casts are accepted by the target's operations") {
  std::mt19937_64 rng(13);
  for (int n = 0; n < 60; ++n) {
    auto va = random_subset(rng);
    auto vb = random_subset(rng);
    DataType a("A", ValueSetDesc::enumerated(va));
    DataType b("B", ValueSetDesc::enumerated(vb));
    auto dom = vb;
    dom.push_back("z");
    b.register_op({"f", ValueSetDesc::enumerated(dom)});
    if (!check_restricts(a, b).holds) continue;
    for (const auto& x : va) {
      auto v = cast_expand(Datum::atom(x), a, b);
      CHECK(contains(b.find_op("f")->domain, v));
    }
  }
}

TEST_CASE("registry verdicts are reported separately") {
  DataType t2("T2", ValueSetDesc::enumerated({"a", "b"}));
  t2.register_op({"f", ValueSetDesc::enumerated({"a", "b", "c"})});
  DataType t1("T1", ValueSetDesc::enumerated({"a", "c"}));
  auto v = check_restricts(t1, t2);
  CHECK_FALSE(v.values_subset);
  CHECK(v.ops_admissible);
  CHECK(v.verdicts_differ());
  CHECK_FALSE(v.holds);

  DataType t3("T3", ValueSetDesc::enumerated({"a"}));
  CHECK_THROWS_AS(t3.register_op({"g", ValueSetDesc::enumerated({"b"})}), Error);
}

TEST_CASE("extension without restriction and restriction without extension") {
  DataType small("S", ValueSetDesc::enumerated({"a", "b"}));
  DataType big("B", ValueSetDesc::enumerated({"a", "b", "c"}));
  Projection away{"away", "S", "B", {ProjectionRule::mapping({{"a", "z"}, {"b", "z"}})}};
  CHECK(check_restricts(small, big).holds);
  CHECK_FALSE(check_extends(small, big, away).holds);

  Projection fold{"fold", "B", "S", {ProjectionRule::mapping({{"a", "a"}, {"b", "b"}, {"c", "a"}})}};
  CHECK(check_extends(big, small, fold).holds);
  CHECK_FALSE(check_restricts(big, small).holds);
}

TEST_CASE("records and incomparable constructors") {
  auto rec = [](std::vector<std::string> xs) {
    return ValueSetDesc::record({{"k", ValueSetDesc::enumerated(std::move(xs))},
                                 {"s", ValueSetDesc::string(Charset::named("digit"), 2)}});
  };
  DataType r1("R1", rec({"a"}));
  DataType r2("R2", rec({"a", "b"}));
  CHECK(check_restricts(r1, r2).holds);
  auto v = check_restricts(r2, r1);
  CHECK_FALSE(v.holds);
  REQUIRE(v.witness);
  CHECK(contains(r2.values(), *v.witness));
  CHECK_FALSE(contains(r1.values(), *v.witness));

  DataType e("E", ValueSetDesc::enumerated({"a"}));
  CHECK(code_of([&] { check_restricts(r1, e); }) == ErrorCode::kIncomparableTypes);

  Projection sel{"sel", "R2", "K", {ProjectionRule::select({"k"})}};
  DataType k("K", ValueSetDesc::record({{"k", ValueSetDesc::enumerated({"a", "b"})}}));
  CHECK(check_extends(r2, k, sel).holds);
  auto d = parse_datum("{k=b,s=12}");
  CHECK(cast_truncate(d, r2, k, sel).str() == "{k=b}");

  Projection wrong{"w", "E", "E", {ProjectionRule::select({"k"})}};
  CHECK(code_of([&] { check_extends(e, e, wrong); }) == ErrorCode::kProjectionMismatch);
}

TEST_CASE("hierarchy construction") {
  auto char40 = str_type("Char40", Charset::named("any"), 40);
  auto alnum40 = str_type("Alphanum40", Charset::named("alnum"), 40);
  auto h = build_hierarchy({{char40, alnum40}, {}, {{"Alphanum40", RelationKind::kRestricts, "Char40", {}}}});
  REQUIRE(h.edges().size() == 1);
  REQUIRE(h.casts().size() == 1);
  CHECK(h.casts()[0].from == "Alphanum40");
  CHECK(h.casts()[0].to == "Char40");
  CHECK(h.casts()[0].kind == CastKind::kExpansion);
  CHECK(h.cast(Datum::atom("AB12"), "Alphanum40", "Char40").text == "AB12");
  CHECK(code_of([&] { h.cast(Datum::atom("AB"), "Char40", "Alphanum40"); }) == ErrorCode::kUnsafeCast);

  auto empty = build_hierarchy({});
  CHECK(empty.nodes().empty());

  DataType a("A", ValueSetDesc::enumerated({"x"}));
  DataType b("B", ValueSetDesc::enumerated({"x", "y"}));
  try {
    build_hierarchy({{a, b}, {}, {{"A", RelationKind::kRestricts, "B", {}},
                                  {"B", RelationKind::kRestricts, "A", {}}}});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kHierarchyError);
    CHECK(std::string(e.what()).find("witness y") != std::string::npos);
  }
  DataType a2("A2", ValueSetDesc::enumerated({"x"}));
  CHECK(code_of([&] {
          build_hierarchy({{a, a2}, {}, {{"A", RelationKind::kRestricts, "A2", {}},
                                          {"A2", RelationKind::kRestricts, "A", {}}}});
        }) == ErrorCode::kHierarchyCycle);

  // expands is the reverse reading of restricts
  auto h2 = build_hierarchy({{a, b}, {}, {{"B", RelationKind::kExpands, "A", {}}}});
  CHECK(h2.casts()[0].from == "A");

  auto alnum20 = str_type("Alphanum20", Charset::named("alnum"), 20);
  auto pi = filter_trunc("Char40", "Alphanum20", Charset::named("alnum"), 20);
  pi.name = "clean";
  auto h3 = build_hierarchy({{char40, alnum40, alnum20},
                             {pi},
                             {{"Alphanum40", RelationKind::kRestricts, "Char40", {}},
                              {"Char40", RelationKind::kExtends, "Alphanum20", "clean"}}});
  CHECK(h3.cast(Datum::atom("Hithere"), "Alphanum40", "Char40").text == "Hithere");
  CHECK(h3.cast(Datum::atom("Hi!there"), "Char40", "Alphanum20").text == "Hithere");
  CHECK(h3.cast(Datum::atom("abc"), "Alphanum40", "Alphanum20").text == "abc");
}

TEST_CASE("datum and description text forms") {
  CHECK(parse_datum("{b=2,a=1}").str() == "{a=1,b=2}");
  CHECK(ValueSetDesc::string(Charset::named("alnum"), 3) ==
        ValueSetDesc::string(Charset::named("alnum"), 3));
  CHECK(cardinality(ValueSetDesc::enumerated({"a", "b"})) == 2);
  CHECK(cardinality(ValueSetDesc::string(Charset::literal("ab"), 2)) == 7);
  CHECK(enumerate(ValueSetDesc::string(Charset::literal("ab"), 1), 10).size() == 3);
}

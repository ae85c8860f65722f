#include <doctest.h>

#include <random>

#include "ioa/error.hpp"
#include "ioa/kernel.hpp"
#include "oracle/cosim.hpp"

using namespace ioa;
using namespace ioa::kernel;

namespace {

SystemDef counter() {
  return SystemDef::from_function(
      "counter", {"0", "1", "2", "3"}, {"inc"}, {"0", "1", "2", "3"},
      [](const Value& q, const Value&) {
        Value n(std::to_string((std::stoi(q.atom()) + 1) % 4));
        return std::make_pair(n, n);
      },
      "0");
}

// f_int(q,i)=i, f_ext(q,i)=q over one alphabet.
SystemDef delay(const std::string& name, std::vector<Value> alphabet, const Value& init) {
  return SystemDef::from_function(
      name, alphabet, alphabet, alphabet,
      [](const Value& q, const Value& i) { return std::make_pair(i, q); }, init);
}

// Counter whose single input is the fed-back output itself.
SystemDef free_counter() {
  std::vector<Value> v{"0", "1", "2", "3"};
  return SystemDef::from_function(
      "fc", v, v, v,
      [](const Value& q, const Value&) {
        Value n(std::to_string((std::stoi(q.atom()) + 1) % 4));
        return std::make_pair(n, n);
      },
      "0");
}

void flatten(const Value& v, std::vector<std::string>& out) {
  if (v.is_atom()) {
    out.push_back(v.atom());
    return;
  }
  for (const auto& c : v.items()) flatten(c, out);
}

std::vector<std::string> flat(const Value& v) {
  std::vector<std::string> out;
  flatten(v, out);
  return out;
}

std::vector<Value> input_values(const std::string& prefix, const std::vector<int>& xs) {
  std::vector<Value> out;
  for (int x : xs) out.emplace_back(prefix + std::to_string(x));
  return out;
}

}  // namespace

TEST_CASE("step applies both functions") {
  auto c = counter();
  auto [q, o] = step(c, "1", "inc");
  CHECK(q == Value("2"));
  CHECK(o == Value("2"));
  auto d = delay("d", {"a", "b"}, "a");
  auto [q2, o2] = step(d, "a", "b");
  CHECK(q2 == Value("b"));
  CHECK(o2 == Value("a"));
  CHECK_THROWS_WITH_AS(step(c, "1", "dec"), doctest::Contains("dec"), Error);
  CHECK_THROWS_WITH_AS(step(c, "7", "inc"), doctest::Contains("7"), Error);
}

TEST_CASE("run produces consecutive rows") {
  auto tr = run(counter(), {"inc", "inc", "inc"});
  REQUIRE(tr.rows.size() == 4);
  for (std::size_t t = 0; t < tr.rows.size(); ++t) CHECK(tr.rows[t].t == t);
  CHECK(tr.states() == std::vector<Value>{"0", "1", "2", "3"});
  auto outs = tr.outputs();
  CHECK_FALSE(outs[0].has_value());
  CHECK(*outs[3] == Value("3"));
  CHECK_FALSE(tr.rows.back().input.has_value());

  auto empty = run(counter(), {});
  CHECK(empty.rows.size() == 1);

  auto d = run(delay("d", {"x", "y", "init"}, "init"), {"x", "y"});
  CHECK(*d.rows[1].output == Value("init"));
  CHECK(*d.rows[2].output == Value("x"));

  try {
    run(counter(), {"inc", "bad"});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDomain);
    CHECK(std::string(e.what()).find("at step 1") != std::string::npos);
  }
}

TEST_CASE("sequential composition of two delays") {
  std::vector<Value> al{"d0", "x", "y", "z", "w"};
  auto seq = compose_sequential(delay("a", al, "d0"), delay("b", al, "d0"));
  CHECK(seq.states().size() == 25);
  CHECK(seq.name() == "(a;b)");
  auto tr = run(seq, {"x", "y", "z", "w"});
  std::vector<std::string> got;
  for (std::size_t t = 1; t < tr.rows.size(); ++t) got.push_back(tr.rows[t].output->atom());
  CHECK(got == std::vector<std::string>{"d0", "d0", "x", "y"});

  // a single delay for comparison
  auto one = run(delay("a", al, "d0"), {"x", "y", "z", "w"});
  CHECK(one.rows[2].output->atom() == "x");
  CHECK(tr.rows[3].output->atom() == "x");

  auto bad = SystemDef::from_function(
      "b", {"s"}, {"p"}, {"p"}, [](const Value& q, const Value& i) { return std::make_pair(q, i); },
      "s");
  CHECK_THROWS_AS(compose_sequential(counter(), bad), Error);
}

TEST_CASE("random sequential compositions agree with co-simulation") {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 100; ++n) {
    auto ta = oracle::random_table(rng, 4, 3, 3);
    auto tb = oracle::random_table(rng, 4, 3, 3);
    tb.ni = ta.no;
    tb.next.clear();
    tb.out.clear();
    for (int k = 0; k < tb.nq * tb.ni; ++k) {
      tb.next.push_back(static_cast<int>(rng() % tb.nq));
      tb.out.push_back(static_cast<int>(rng() % tb.no));
    }
    tb.iname = "o";
    tb.oname = "r";
    std::vector<int> xs(rng() % 9);
    for (auto& x : xs) x = static_cast<int>(rng() % ta.ni);
    auto ref = oracle::cosim_chain({ta, tb}, xs);
    auto tr = run(compose_sequential(oracle::to_system(ta, "a"), oracle::to_system(tb, "b")),
                  input_values("i", xs));
    for (std::size_t t = 0; t < tr.rows.size(); ++t) {
      CHECK(flat(tr.rows[t].state) ==
            std::vector<std::string>{"q" + std::to_string(ref.states[t][0]),
                                     "q" + std::to_string(ref.states[t][1])});
      if (t > 0) CHECK(tr.rows[t].output->atom() == "r" + std::to_string(ref.outputs[t - 1][0]));
    }
  }
}

TEST_CASE("sequential composition is associative up to bracketing") {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 40; ++n) {
    std::vector<oracle::Table> chain;
    int prev_no = 0;
    const char* names[] = {"i", "m", "n", "o"};
    for (int k = 0; k < 3; ++k) {
      auto t = oracle::random_table(rng, 3, 3, 3);
      if (k > 0) {
        t.ni = prev_no;
        t.next.assign(t.nq * t.ni, 0);
        t.out.assign(t.nq * t.ni, 0);
        for (int j = 0; j < t.nq * t.ni; ++j) {
          t.next[j] = static_cast<int>(rng() % t.nq);
          t.out[j] = static_cast<int>(rng() % t.no);
        }
      }
      t.iname = names[k];
      t.oname = names[k + 1];
      prev_no = t.no;
      chain.push_back(t);
    }
    auto a = oracle::to_system(chain[0], "a");
    auto b = oracle::to_system(chain[1], "b");
    auto c = oracle::to_system(chain[2], "c");
    std::vector<int> xs(8);
    for (auto& x : xs) x = static_cast<int>(rng() % chain[0].ni);
    auto left = run(compose_sequential(compose_sequential(a, b), c), input_values("i", xs));
    auto right = run(compose_sequential(a, compose_sequential(b, c)), input_values("i", xs));
    auto pipe = run(build_pipeline({{a, b, c}, {{0, 1}, {1, 2}}}), input_values("i", xs));
    for (std::size_t t = 0; t < left.rows.size(); ++t) {
      CHECK(flat(left.rows[t].state) == flat(right.rows[t].state));
      CHECK(flat(left.rows[t].state) == flat(pipe.rows[t].state));
      CHECK(left.rows[t].output == right.rows[t].output);
      CHECK(left.rows[t].output == pipe.rows[t].output);
    }
  }
}

TEST_CASE("parallel composition equals the zip of component runs") {
  auto p = compose_parallel(counter(), counter());
  auto [q, o] = step(p, Value::tuple({"1", "2"}), Value::tuple({"inc", "inc"}));
  CHECK(q == Value::tuple({"2", "3"}));

  std::mt19937_64 rng(3);
  for (int n = 0; n < 100; ++n) {
    auto ta = oracle::random_table(rng, 4, 3, 3);
    auto tb = oracle::random_table(rng, 4, 3, 3);
    std::vector<std::pair<int, int>> xs(rng() % 9);
    std::vector<Value> ins;
    for (auto& x : xs) {
      x = {static_cast<int>(rng() % ta.ni), static_cast<int>(rng() % tb.ni)};
      ins.push_back(Value::tuple({"i" + std::to_string(x.first), "i" + std::to_string(x.second)}));
    }
    auto ref = oracle::cosim_parallel(ta, tb, xs);
    auto tr = run(compose_parallel(oracle::to_system(ta, "a"), oracle::to_system(tb, "b")), ins);
    for (std::size_t t = 0; t < tr.rows.size(); ++t) {
      CHECK(flat(tr.rows[t].state) ==
            std::vector<std::string>{"q" + std::to_string(ref.states[t][0]),
                                     "q" + std::to_string(ref.states[t][1])});
      if (t > 0) {
        CHECK(flat(*tr.rows[t].output) ==
              std::vector<std::string>{"o" + std::to_string(ref.outputs[t - 1][0]),
                                       "o" + std::to_string(ref.outputs[t - 1][1])});
      }
    }
  }
}

TEST_CASE("parallel with a pass-through leaves the other trace unchanged") {
  auto pass = SystemDef::from_function(
      "id", {"_"}, {"a", "b"}, {"a", "b"},
      [](const Value& q, const Value& i) { return std::make_pair(q, i); }, "_");
  auto p = compose_parallel(counter(), pass);
  auto tr = run(p, {Value::tuple({"inc", "a"}), Value::tuple({"inc", "b"})});
  auto ref = run(counter(), {"inc", "inc"});
  for (std::size_t t = 0; t < tr.rows.size(); ++t) {
    CHECK(tr.rows[t].state.component(0) == ref.rows[t].state);
  }
}

TEST_CASE("loop composition") {
  auto c = counter();
  auto l1 = compose_loop(c, {}, 1);
  for (const auto& q : c.states()) CHECK(step(l1, q, "inc") == step(c, q, "inc"));

  auto fc = free_counter();
  auto l3 = compose_loop(fc, {{0, 0}}, 3);
  for (const auto& q : fc.states()) {
    for (const auto& i : fc.inputs()) {
      auto expect = step(fc, q, i);
      expect = step(fc, expect.first, expect.second);
      expect = step(fc, expect.first, expect.second);
      CHECK(step(l3, q, i) == expect);
    }
  }
  CHECK(step(l3, "0", "0").first == Value("3"));

  auto mixed = SystemDef::from_function(
      "m", {"s"}, {"a", "b"}, {"x"}, [](const Value& q, const Value&) { return std::make_pair(q, Value("x")); },
      "s");
  CHECK_THROWS_AS(compose_loop(mixed, {{0, 0}}, 2), Error);
  CHECK_THROWS_AS(compose_loop(c, {}, 0), Error);
}

TEST_CASE("while composition") {
  auto c = counter();
  auto always = compose_while(c, {}, [](const Value&) { return true; }, 4);
  for (const auto& q : c.states()) CHECK(step(always, q, "inc") == step(c, q, "inc"));

  auto fc = free_counter();
  auto w = compose_while(fc, {{0, 0}}, [](const Value& o) { return o.atom() == "0"; }, 10);
  auto [q, o] = step(w, "1", "1");
  CHECK(o == Value("0"));
  CHECK(q == Value("0"));
  // three explicit steps from 1 reach 0
  auto s = step(fc, "1", "1");
  s = step(fc, s.first, s.second);
  s = step(fc, s.first, s.second);
  CHECK(s.second == Value("0"));

  try {
    compose_while(fc, {{0, 0}}, [](const Value&) { return false; }, 6);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDivergenceBound);
  }
}

TEST_CASE("pipelines") {
  std::vector<Value> al{"d0", "x", "y"};
  auto a = delay("a", al, "d0");
  auto b = delay("b", al, "d0");
  auto linear = build_pipeline({{a, b}, {{0, 1}}});
  auto seq = compose_sequential(a, b);
  std::vector<Value> xs{"x", "y", "x", "x", "y"};
  auto t1 = run(linear, xs);
  auto t2 = run(seq, xs);
  for (std::size_t t = 0; t < t1.rows.size(); ++t) CHECK(t1.rows[t].output == t2.rows[t].output);

  auto single = build_pipeline({{a}, {}});
  auto ts = run(single, xs);
  auto ta = run(a, xs);
  for (std::size_t t = 0; t < ts.rows.size(); ++t) {
    CHECK(ts.rows[t].state == ta.rows[t].state);
    CHECK(ts.rows[t].output == ta.rows[t].output);
  }

  auto pass = [](const std::string& n) {
    return SystemDef::from_function(
        n, {"_"}, {"x", "y"}, {"x", "y"},
        [](const Value& q, const Value& i) { return std::make_pair(q, i); }, "_");
  };
  PipelineGraph g{{pass("src"), pass("l"), pass("r"), pass("sink")},
                  {{0, 1}, {0, 2}, {1, 3}, {2, 3}}};
  CHECK(g.forks() == std::vector<std::size_t>{0});
  CHECK(g.joins() == std::vector<std::size_t>{3});
  auto fj = build_pipeline(g);
  auto tr = run(fj, {"x", "y"});
  CHECK(*tr.rows[1].output == Value::tuple({"x", "x"}));
  CHECK(*tr.rows[2].output == Value::tuple({"y", "y"}));

  PipelineGraph cyc{{pass("a"), pass("b")}, {{0, 1}, {1, 0}}};
  try {
    build_pipeline(cyc);
    FAIL("expected cycle");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPipelineCycle);
  }
  PipelineGraph mism{{counter(), pass("b")}, {{0, 1}}};
  CHECK_THROWS_AS(build_pipeline(mism), Error);
}

TEST_CASE("adapters between pipes and operations") {
  Operation succ{"succ", {{"0", "1"}, {"1", "2"}, {"2", "3"}, {"3", "0"}}};
  auto pipe = operation_to_pipe(succ);
  CHECK(pipe.states().size() == 1);
  CHECK(pipe_to_operation(pipe) == succ);

  std::vector<Value> al{"a", "b", "c", "d", "e", "f", "g", "h"};
  auto two = build_pipeline({{delay("p", al, "a"), delay("q", al, "a")}, {{0, 1}}});
  auto op = pipe_to_operation(two);
  for (const auto& v : al) CHECK(op(v) == v);

  try {
    pipe_to_operation(compose_loop(free_counter(), {{0, 0}}, 1));
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDivergenceBound);
  }
}

TEST_CASE("running twice is deterministic and leaves the system untouched") {
  auto c = counter();
  auto before = format_table(c);
  auto t1 = run(c, {"inc", "inc"});
  auto t2 = run(c, {"inc", "inc"});
  CHECK(t1.states() == t2.states());
  CHECK(format_table(c) == before);
}

TEST_CASE("values round-trip through text") {
  auto v = Value::tuple({"a", Value::tuple({"b", "c"})});
  CHECK(v.str() == "(a,(b,c))");
  CHECK(parse_value(v.str()) == v);
  CHECK_THROWS_AS(parse_value("(a,"), Error);
}

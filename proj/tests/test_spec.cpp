#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "ioa/netsim.hpp"
#include "ioa/spec.hpp"
#include "spec_fuzz.hpp"
#include "test_util.hpp"

using namespace ioa;
using spec::Diagnostic;
using spec::parse_spec;
using spec::serialize;

namespace {

std::string golden_path(const std::string& name) { return std::string(IOA_GOLDEN_DIR) + "/" + name; }

std::string read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string>& golden_files() {
  static const std::vector<std::string> files{"kernel.ioa", "pingpong.ioa", "purchase.ioa", "shop.ioa"};
  return files;
}

spec::SpecModel load(const std::string& name) {
  auto r = parse_spec(read(golden_path(name)));
  for (const auto& d : r.diagnostics) INFO(d.str(name));
  REQUIRE(r.ok());
  return r.model;
}

std::size_t line_count(const std::string& text) { return std::count(text.begin(), text.end(), '\n') + 1; }

std::vector<Diagnostic> errors_of(const spec::ParseResult& r) {
  std::vector<Diagnostic> out;
  for (const auto& d : r.diagnostics) {
    if (d.severity == Diagnostic::Severity::kError) out.push_back(d);
  }
  return out;
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = spec::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& text) {
  auto p = std::filesystem::temp_directory_path() / ("ioa_test_" + name);
  std::ofstream(p, std::ios::binary) << text;
  return p.string();
}

}  // namespace

TEST_CASE("smallest spec has one type") {
  auto r = parse_spec("TYPE A = enum{x}");
  REQUIRE(r.ok());
  REQUIRE(r.model.types.size() == 1);
  CHECK(r.model.types[0].name() == "A");
  CHECK(r.model.types[0].values() == types::ValueSetDesc::enumerated({"x"}));
  CHECK(r.model.order.size() == 1);
}

TEST_CASE("purchase golden file counts") {
  auto m = load("purchase.ioa");
  CHECK(m.roles.size() == 2);
  CHECK(m.protocols.size() == 1);
  CHECK(m.networks.size() == 1);
  CHECK(m.docs.size() == 5);
  CHECK(m.protocols[0].channels.size() == 5);
  CHECK(m.protocols[0].goals.size() == 2);
  CHECK(m.networks[0].nodes.size() == 2);
  CHECK(m.networks[0].bindings.size() == 1);
  CHECK(m.role("Buyer")->transitions.size() == 4);
  CHECK(m.role("Seller")->transitions.size() == 4);
}

TEST_CASE("parsed protocols equal the hand-built ones") {
  CHECK(*load("purchase.ioa").protocol("Purchase") == fx::purchase());
  CHECK(*load("pingpong.ioa").protocol("PingPong") == fx::pingpong());
  auto shop = load("shop.ioa");
  CHECK(*shop.protocol("Payment") == fx::payment());
  CHECK(*shop.process("Shop") == fx::shop(false));
  auto hold = fx::shop(true);
  hold.name = "HoldingShop";
  CHECK(*shop.process("HoldingShop") == hold);
}

TEST_CASE("parsed types and systems") {
  auto m = load("kernel.ioa");
  CHECK(m.types.size() == 6);
  CHECK(m.type("Char40")->values() == types::ValueSetDesc::string(types::Charset::named("any"), 40));
  auto pixel = m.type("Pixel")->values();
  REQUIRE(pixel.is_record());
  CHECK(std::get<types::RecordSet>(pixel.rep).fields[0].name == "color");
  CHECK(std::get<types::RecordSet>(pixel.rep).fields[0].desc == m.type("Color")->values());
  REQUIRE(m.type("Color")->find_op("shade"));
  CHECK(m.relations.size() == 3);
  CHECK(m.projections.size() == 2);
  CHECK(m.projections[1].rules.empty());
  auto h = spec::hierarchy_of(m);
  CHECK(h.cast(types::Datum::atom("Hi!there"), "Char40", "Alphanum20").text == "Hithere");
  CHECK(code_of([&] { h.cast(types::Datum::atom("abc"), "Alphanum20", "Char40"); }) == ErrorCode::kUnsafeCast);

  const auto* delay = m.system("Delay");
  REQUIRE(delay);
  auto t = kernel::run(*delay, {"1", "0", "0"});
  CHECK(t.outputs()[1]->str() == "0");
  CHECK(t.outputs()[2]->str() == "1");
  CHECK(t.outputs()[3]->str() == "0");
  CHECK(spec::compose(m, "Delay ; Toggle") == kernel::compose_sequential(*delay, *m.system("Toggle")));
  CHECK(spec::compose(m, "(Delay || Toggle) ; (Toggle || Delay)") ==
        kernel::compose_sequential(kernel::compose_parallel(*delay, *m.system("Toggle")),
                                   kernel::compose_parallel(*m.system("Toggle"), *delay)));
  CHECK(code_of([&] { spec::compose(m, "Delay ;"); }) == ErrorCode::kSpec);
  CHECK(code_of([&] { spec::compose(m, "Nope"); }) == ErrorCode::kSpec);
}

TEST_CASE("round trip on every golden file") {
  for (const auto& f : golden_files()) {
    CAPTURE(f);
    auto m = load(f);
    auto text = serialize(m);
    auto again = parse_spec(text);
    for (const auto& d : again.diagnostics) INFO(d.str());
    REQUIRE(again.ok());
    CHECK(again.model == m);
    CHECK(serialize(again.model) == text);
  }
}

TEST_CASE("undeclared mode is reported on the transition's line") {
  auto r = parse_spec("DOC D\nROLE R {\n  modes{a}\n  a --!D--> b\n}\n");
  auto errs = errors_of(r);
  REQUIRE(errs.size() == 1);
  CHECK(errs[0].pos.line == 4);
  CHECK(errs[0].pos.col == 3);
  CHECK(errs[0].message.find("'b'") != std::string::npos);
  CHECK(r.model.roles.empty());
}

TEST_CASE("independent errors are all collected") {
  std::string text =
      "TYPE A = enum{x}\n"
      "TYPE A = enum{y}\n"
      "TYPE B = wat(\n"
      "DOC D(p: 3..1)\n"
      "ROLE R {\n"
      "  modes{a}\n"
      "  a --?Missing--> a\n"
      "  a ??? a\n"
      "}\n"
      "PROTOCOL P { roles R, Q }\n";
  auto r = parse_spec(text);
  auto errs = errors_of(r);
  std::vector<std::size_t> lines;
  for (const auto& e : errs) lines.push_back(e.pos.line);
  CHECK(std::count(lines.begin(), lines.end(), 2) == 1);
  CHECK(std::count(lines.begin(), lines.end(), 3) == 1);
  CHECK(std::count(lines.begin(), lines.end(), 4) == 1);
  CHECK(std::count(lines.begin(), lines.end(), 7) == 1);
  CHECK(std::count(lines.begin(), lines.end(), 8) == 1);
  CHECK(std::count(lines.begin(), lines.end(), 10) >= 1);
  // the duplicate points back at the first declaration
  auto dup = std::find_if(errs.begin(), errs.end(), [](const Diagnostic& d) { return d.pos.line == 2; });
  REQUIRE(dup->related.size() == 1);
  CHECK(dup->related[0].line == 1);
  CHECK(r.model.types.size() == 1);
}

TEST_CASE("diagnostic text carries file and position") {
  Diagnostic d{Diagnostic::Severity::kError, {3, 7}, "boom", {{1, 1}}};
  CHECK(d.str("x.ioa") == "x.ioa:3:7: error: boom\nx.ioa:1:1: note: related declaration");
}

TEST_CASE("resolution errors") {
  auto first_error = [](const std::string& text) {
    auto errs = errors_of(parse_spec(text));
    REQUIRE(!errs.empty());
    return errs[0];
  };
  CHECK(first_error("TYPE A = B\nTYPE B = A\n").message.find("itself") != std::string::npos);
  CHECK(first_error("TYPE A = Nope").message == "unknown type 'Nope'");
  CHECK(first_error("TYPE A = enum{x}\nOPERATION f: A = enum{y}").pos.line == 2);
  CHECK(first_error("TYPE A = string(charset=weird, maxlen=3)").message.find("charset") != std::string::npos);
  CHECK(first_error("TYPE A = enum{x}\nRELATION A restricts B").message == "unknown type 'B'");
  CHECK(first_error("SYSTEM S {\n states{a}\n inputs{i}\n outputs{o}\n}").message.find("no transition") !=
        std::string::npos);
  CHECK(first_error("SYSTEM S {\n states{a}\n inputs{i}\n outputs{o}\n (a, i) -> (b, o)\n}").pos.line == 5);
  CHECK(first_error("DOC D(p: Color)").message == "unknown type 'Color'");
  CHECK(first_error("DOC D(p: 0..20000)").pos.col == 10);
  CHECK(first_error("DOC D\nROLE R {\n modes{a}\n a --?D[x==1]--> a\n}").message.find("x") != std::string::npos);
  // a channel nobody uses for that class is a protocol error
  auto e = first_error("DOC D\nROLE A {\n modes{a}\n a --!D--> a\n}\nROLE B {\n modes{b}\n b --?D--> b\n}\n"
                       "PROTOCOL P {\n roles A, B\n}\n");
  CHECK(e.pos.line == 10);
  CHECK(first_error("NETWORK N {\n node x: Ghost\n}").pos.line == 2);
  CHECK(first_error("DOC D\nROLE A {\n modes{a}\n a --!D--> a\n}\nNETWORK N {\n node x: A\n bind x.A <-> y.A\n}")
            .message == "unknown node 'y'");
  CHECK(first_error("DOC D\nROLE A {\n modes{a}\n a --!D--> a\n}\nNETWORK N {\n node x: A\n node y: A\n"
                    " bind x.A <-> y.A : D=E\n}")
            .message.find("same name") != std::string::npos);
}

TEST_CASE("conflicting rules are positioned at a rule") {
  std::string text = read(golden_path("shop.ioa"));
  text += "PROCESS Bad {\n  role s: Seller of Purchase\n  rule a: on s.?Order do enable s.!Confirm\n"
          "  rule b: on s.?Order do disable s.!Confirm\n}\n";
  auto r = parse_spec(text);
  auto errs = errors_of(r);
  REQUIRE(errs.size() == 1);
  CHECK(errs[0].message.find("RuleConflict") == 0);
  CHECK(errs[0].pos.line == line_count(text) - 3);
}

TEST_CASE("unreachable modes are linted, not rejected") {
  auto r = parse_spec("DOC D\nROLE R {\n  modes{a, b, c}\n  a --!D--> b\n}\n");
  REQUIRE(r.ok());
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].severity == Diagnostic::Severity::kLint);
  CHECK(r.diagnostics[0].pos.line == 3);
  CHECK(r.diagnostics[0].message.find("'c'") != std::string::npos);
}

TEST_CASE("grammar details") {
  std::string text =
      "DOC Q(n: 0..2, c: {x, y})\n"
      "ROLE R { modes{a, b}; init b; rest{busy, free}\n"
      "  go: a --?in.Q[n>=1 & c==x | rest==busy] / !out.Q(n=2)--> b\n"
      "  b --> a\n"
      "}\n";
  auto r = parse_spec(text);
  for (const auto& d : r.diagnostics) INFO(d.str());
  REQUIRE(r.ok());
  const auto& role = r.model.roles.at(0);
  CHECK(role.initial == "b");
  CHECK(role.rest_domain == std::vector<std::string>{"busy", "free"});
  REQUIRE(role.transitions.size() == 2);
  const auto& t = role.transitions[0];
  CHECK(t.label == "go");
  CHECK(t.in_port == "in");
  CHECK(t.out_port == "out");
  CHECK(t.guard->clauses.size() == 2);
  CHECK(t.out_params.at("n") == "2");
  CHECK(!role.transitions[1].in_doc);
  CHECK(!role.transitions[1].out_doc);
  CHECK(r.model.docs[0].params[0].domain == std::vector<std::string>{"0", "1", "2"});
  auto again = parse_spec(serialize(r.model));
  CHECK(again.model == r.model);
}

TEST_CASE("network and process materialization") {
  auto m = load("purchase.ioa");
  auto net = netsim::bind(spec::network_of(m, "Market"));
  CHECK(net.channels == std::vector<std::string>{"seller.Seller->buyer.Buyer", "buyer.Buyer->seller.Seller"});
  auto direct = netsim::bind(netsim::network_of(fx::purchase()));
  CHECK(netsim::explore(net, 100000).states.size() == netsim::explore(direct, 100000).states.size());
  CHECK(code_of([&] { spec::network_of(m, "Nope"); }) == ErrorCode::kSpec);

  auto shop = load("shop.ioa");
  auto mall = netsim::bind(spec::network_of(shop, "Mall"));
  CHECK(mall.channels.size() == 4);
  netsim::Scheduler s;
  s.kind = netsim::Scheduler::Kind::kExhaustive;
  CHECK(netsim::simulate(mall, s, 1000).status == "goal");
  auto report = process::verify_coordination(spec::coordinate_process(shop, "Shop"), shop.protocols);
  CHECK(report.ok());
  CHECK(!process::verify_coordination(spec::coordinate_process(shop, "HoldingShop"), shop.protocols).ok());
}

TEST_CASE("fuzzed inputs never abort and always carry positions") {
  std::vector<std::string> corpus;
  for (const auto& f : golden_files()) corpus.push_back(read(golden_path(f)));
  std::mt19937 rng(20261016);
  std::size_t ok = 0;
  for (int iter = 0; iter < 10000; ++iter) {
    std::string text = fuzz::mutate(corpus, rng, iter);
    spec::ParseResult r;
    try {
      r = parse_spec(text);
    } catch (...) {
      FAIL("parse_spec threw on iteration " << iter);
    }
    const std::size_t lines = line_count(text);
    for (const auto& d : r.diagnostics) {
      if (d.message.rfind("internal", 0) == 0) FAIL("internal failure: " << d.message << "\n" << text);
      if (d.pos.line < 1 || d.pos.line > lines || d.pos.col < 1) FAIL("bad position " << d.str() << "\n" << text);
    }
    if (r.ok()) {
      ++ok;
      auto again = parse_spec(serialize(r.model));
      if (!again.ok() || !(again.model == r.model)) FAIL("round trip broke on\n" << text);
    }
  }
  MESSAGE("fuzz inputs accepted: " << ok);
}

TEST_CASE("cli exit codes") {
  const auto pingpong = golden_path("pingpong.ioa");
  const auto shop = golden_path("shop.ioa");
  const auto kernel = golden_path("kernel.ioa");

  auto ok = cli({"check", shop});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("result ok") != std::string::npos);

  auto bad = cli({"check", temp_file("dangling.ioa", "DOC D\nROLE R {\n  modes{a}\n  a --!D--> nowhere\n}\n")});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("ioa_test_dangling.ioa:4:3: error: undeclared mode 'nowhere'") != std::string::npos);

  auto v = cli({"verify", "--protocol", "PingPong", pingpong});
  CHECK(v.code == 0);
  CHECK(v.out.find("goal_reachable true") != std::string::npos);
  CHECK(v.out.find("explored_states 5") != std::string::npos);

  std::string both_wait =
      "DOC X\nDOC Y\n"
      "ROLE A {\n modes{a0, a1}\n a0 --?X--> a1\n a1 --!Y--> a1\n}\n"
      "ROLE B {\n modes{b0, b1}\n b0 --?Y--> b1\n b1 --!X--> b1\n}\n"
      "PROTOCOL BothWait {\n roles A, B\n channel A -> B : Y\n channel B -> A : X\n goal A.a1 & B.b1\n}\n";
  auto dl = cli({"verify", "--protocol", "BothWait", temp_file("both_wait.ioa", both_wait)});
  CHECK(dl.code == 2);
  CHECK(dl.out.find("deadlock <A=a0,B=b0>") != std::string::npos);

  CHECK(cli({"verify", "--protocol", "Nope", pingpong}).code == 3);
  CHECK(cli({"verify", pingpong}).code == 3);
  CHECK(cli({"verify", "--protocol", "PingPong", "--bound", "0", pingpong}).code == 3);
  CHECK(cli({"check", "/no/such/file.ioa"}).code == 3);
  CHECK(cli({}).code == 3);
  CHECK(cli({"frobnicate"}).code == 3);
  CHECK(cli({"--help"}).code == 0);

  CHECK(cli({"verify", "--protocol", "PingPong", "--bound", "2", pingpong}).code == 2);
  setenv("IOA_BOUND", "2", 1);
  auto env = cli({"verify", "--protocol", "PingPong", pingpong});
  CHECK(env.code == 2);
  CHECK(env.out.find("bound_hit true") != std::string::npos);
  CHECK(cli({"verify", "--protocol", "PingPong", "--bound", "100", pingpong}).code == 0);
  setenv("IOA_BOUND", "lots", 1);
  CHECK(cli({"verify", "--protocol", "PingPong", pingpong}).code == 3);
  unsetenv("IOA_BOUND");

  auto s1 = cli({"simulate", "--network", "Mall", "--steps", "40", "--seed", "7", shop});
  auto s2 = cli({"simulate", "--network", "Mall", "--steps", "40", "--seed", "7", shop});
  CHECK(s1.code == 0);
  CHECK(!s1.out.empty());
  CHECK(s1.out == s2.out);
  auto rr = cli({"simulate", "--network", "Table", "--steps", "10", "--scheduler", "round_robin", pingpong});
  CHECK(rr.out.find("left: idle --right.Ponger!Ping--> waiting") != std::string::npos);
  CHECK(cli({"simulate", "--network", "Nope", "--steps", "3", pingpong}).code == 3);
  CHECK(cli({"simulate", "--network", "Table", pingpong}).code == 3);

  auto cast = cli({"cast", "--hierarchy", kernel, "--from", "Char40", "--to", "Alphanum20", "--value", "Hi!there"});
  CHECK(cast.code == 0);
  CHECK(cast.out == "Hithere\n");
  auto unsafe = cli({"cast", "--hierarchy", kernel, "--from", "Alphanum20", "--to", "Char40", "--value", "ab"});
  CHECK(unsafe.code == 2);
  CHECK(unsafe.out.find("UnsafeCast") == 0);
  CHECK(cli({"cast", "--hierarchy", kernel, "--from", "Char40", "--to", "Alphanum40", "--value", "ab"}).code == 2);
  CHECK(cli({"cast", "--hierarchy", kernel, "--from", "Warm", "--to", "Color", "--value", "red"}).code == 0);
  CHECK(cli({"cast", "--hierarchy", kernel, "--from", "Warm", "--to", "Color", "--value", "blue"}).code == 2);
  CHECK(cli({"cast", "--hierarchy", kernel, "--from", "Nope", "--to", "Color", "--value", "x"}).code == 3);

  auto layers = cli({"layers", kernel});
  CHECK(layers.code == 0);
  CHECK(layers.out.find("layer Top 2") != std::string::npos);
  auto cyc = cli({"layers", temp_file("cycle.ioa", "COMPONENTS C {\n A -> B : api_call\n B -> A : api_call\n}\n")});
  CHECK(cyc.code == 2);
  CHECK(cyc.out.find("cycle A -> B -> A") != std::string::npos);
  CHECK(cli({"layers", pingpong}).code == 3);

  auto comp = cli({"compose", kernel, "--expr", "Delay ; Toggle"});
  CHECK(comp.code == 0);
  CHECK(comp.out.find("init (z,off)") != std::string::npos);
  CHECK(cli({"compose", kernel, "--expr", "Delay ;; Toggle"}).code == 3);

  CHECK(cli({"coordinate", "--process", "Shop", shop}).code == 0);
  auto hold = cli({"coordinate", "--process", "HoldingShop", shop});
  CHECK(hold.code == 2);
  CHECK(hold.out.find("deadlock <Buyer=ordered") != std::string::npos);
}

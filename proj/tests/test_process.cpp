#include <doctest.h>

#include <deque>
#include <random>

#include "fixtures.hpp"
#include "ioa/error.hpp"
#include "ioa/process.hpp"
#include "test_util.hpp"

using namespace ioa;
using namespace ioa::process;

namespace {

std::set<std::string> edges(const Role& r) {
  std::set<std::string> out;
  for (const auto& t : r.transitions) out.insert(t.from + " -> " + t.to);
  return out;
}

// Joint mode-vector steps, ignoring the rule bookkeeping.
std::set<std::string> mode_steps(const Coordinated& c) {
  std::set<std::string> out;
  for (std::size_t k = 0; k < c.joint.transitions.size(); ++k) {
    const auto& t = c.joint.transitions[k];
    std::string a, b;
    for (const auto& m : c.modes_of.at(t.from)) a += m + ",";
    for (const auto& m : c.modes_of.at(t.to)) b += m + ",";
    out.insert(a + " " + std::to_string(c.origin[k].first) + ":" + std::to_string(c.origin[k].second) + " " + b);
  }
  return out;
}

// Visible label sequences up to `depth`, ε-moves skipped.
std::set<std::vector<std::string>> traces(const Role& r, std::size_t depth) {
  std::set<std::vector<std::string>> out;
  std::set<std::pair<std::string, std::vector<std::string>>> seen;
  std::deque<std::pair<std::string, std::vector<std::string>>> work{{r.initial, {}}};
  while (!work.empty()) {
    auto [m, labels] = work.front();
    work.pop_front();
    if (!seen.insert({m, labels}).second) continue;
    out.insert(labels);
    for (const auto& t : r.transitions) {
      if (t.from != m) continue;
      auto l = labels;
      std::string lab = (t.in_doc ? t.in_port + "?" + *t.in_doc : "") + (t.out_doc ? t.out_port + "!" + *t.out_doc : "");
      if (!lab.empty()) l.push_back(lab);
      if (l.size() <= depth) work.push_back({t.to, l});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("one role without rules is the role itself") {
  ProcessDef d;
  d.name = "Solo";
  d.instances = {{"b", fx::buyer(), "Purchase", "Buyer"}};
  auto c = coordinate(d);
  auto b = fx::buyer();
  CHECK(std::set<std::string>(c.joint.modes.begin(), c.joint.modes.end()) ==
        std::set<std::string>(b.modes.begin(), b.modes.end()));
  CHECK(c.joint.initial == b.initial);
  REQUIRE(c.joint.transitions.size() == b.transitions.size());
  std::set<std::string> want, got;
  for (const auto& t : b.transitions) want.insert(t.str());
  for (auto t : c.joint.transitions) {
    t.in_port.clear();
    t.out_port.clear();
    got.insert(t.str());
  }
  CHECK(got == want);
}

TEST_CASE("the shop rule sequences the two roles") {
  auto c = coordinate(fx::shop());
  // hand-built: 12 mode pairs, except that an order arriving while the payee
  // is ready always goes through the obligation state
  const std::string F = "s=ordered,p=ready|force:p.!RequestPayment";
  std::set<std::string> want;
  const std::vector<std::string> sm{"idle", "quoted", "ordered", "closed"}, pm{"ready", "requested", "paid"};
  auto n = [](const std::string& a, const std::string& b) { return "s=" + a + ",p=" + b; };
  for (const auto& p : pm) {
    want.insert(n("idle", p) + " -> " + n("quoted", p));
    want.insert(n("quoted", p) + " -> " + (p == "ready" ? F : n("ordered", p)));
    want.insert(n("quoted", p) + " -> " + n("closed", p));
    if (p != "ready") want.insert(n("ordered", p) + " -> " + n("closed", p));
  }
  for (const auto& s : sm) {
    if (s == "ordered") continue;
    want.insert(n(s, "ready") + " -> " + n(s, "requested"));
  }
  for (const auto& s : sm) want.insert(n(s, "requested") + " -> " + n(s, "paid"));
  want.insert(F + " -> " + n("ordered", "requested"));
  CHECK(edges(c.joint) == want);
  CHECK(c.joint.transitions.size() == 19);
  CHECK(c.joint.modes.size() == 12);
  CHECK(c.joint.initial == "s=idle,p=ready");

  auto free = fx::shop();
  free.rules.clear();
  auto cf = coordinate(free);
  CHECK(cf.joint.modes.size() == 12);
  CHECK(cf.joint.transitions.size() == 20);
}

TEST_CASE("contradictory rules") {
  auto d = fx::shop();
  d.rules.push_back({"other", {"s", "?Order"}, std::nullopt, {{Effect::Kind::kForce, {"p", "?Payment"}}}});
  try {
    coordinate(d);
    FAIL("no conflict reported");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRuleConflict);
    CHECK(std::string(e.what()).find("pay") != std::string::npos);
    CHECK(std::string(e.what()).find("other") != std::string::npos);
  }
  d = fx::shop();
  d.rules.push_back({"off", {"s", "?Order"}, std::nullopt, {{Effect::Kind::kDisable, {"p", "!RequestPayment"}}}});
  CHECK(code_of([&] { coordinate(d); }) == ErrorCode::kRuleConflict);
  d = fx::shop();
  d.rules.push_back({"both", {"s", "!Quote"}, std::nullopt,
                     {{Effect::Kind::kEnable, {"p", "*"}}, {Effect::Kind::kDisable, {"p", "*"}}}});
  CHECK(code_of([&] { coordinate(d); }) == ErrorCode::kRuleConflict);
  d = fx::shop();
  d.rules.push_back({"x1", {"s", "!Quote"}, std::nullopt, {{Effect::Kind::kSet, {"", "x=1"}}}});
  d.rules.push_back({"x2", {"s", "!Quote"}, std::nullopt, {{Effect::Kind::kSet, {"", "x=2"}}}});
  CHECK(code_of([&] { coordinate(d); }) == ErrorCode::kRuleConflict);
  // the same effects twice, or different conditions, are not contradictions
  d = fx::shop();
  d.rules.push_back(d.rules[0]);
  CHECK_NOTHROW(coordinate(d));
  d = fx::shop();
  d.rules.push_back({"elsewhere", {"q", "?Order"}, std::nullopt, {}});
  CHECK(code_of([&] { coordinate(d); }) == ErrorCode::kDomain);
}

TEST_CASE("projections never invent behavior") {
  for (bool suppress : {false, true}) {
    auto c = coordinate(fx::shop(suppress));
    for (const auto& inst : c.def.instances) {
      auto r = project(c, inst.name);
      CHECK(r.name == inst.slot);
      for (const auto& t : r.transitions) {
        if (!t.in_doc && !t.out_doc) continue;
        GuardedTransition own = t;
        own.from = r.own_mode(t.from);
        own.to = r.own_mode(t.to);
        bool found = false;
        for (const auto& o : inst.role.transitions) found = found || o.str() == own.str();
        CHECK_MESSAGE(found, t.str());
      }
      for (const auto& t : r.transitions) {
        if (t.in_doc || t.out_doc) continue;
        CHECK(r.own_mode(t.from) == r.own_mode(t.to));
      }
    }
  }
}

TEST_CASE("the benign shop preserves both protocols") {
  auto c = coordinate(fx::shop());
  auto rep = verify_coordination(c, {fx::purchase(), fx::payment()});
  REQUIRE(rep.verdicts.size() == 2);
  for (const auto& v : rep.verdicts) {
    CAPTURE(v.str());
    CHECK(v.original.ok());
    CHECK(v.coordinated.ok());
    CHECK(v.preserved());
    CHECK(v.substitution.holds);
  }
  CHECK(rep.ok());
}

TEST_CASE("the suppressing rule deadlocks the purchase") {
  auto c = coordinate(fx::shop(true));
  auto rep = verify_coordination(c, {fx::purchase(), fx::payment()});
  CHECK_FALSE(rep.ok());
  const PreservationVerdict* purchase = nullptr;
  for (const auto& v : rep.verdicts) {
    if (v.protocol == "Purchase") purchase = &v;
  }
  REQUIRE(purchase);
  CHECK_FALSE(purchase->preserved());
  REQUIRE_FALSE(purchase->coordinated.deadlocks.empty());
  const auto& dl = purchase->coordinated.deadlocks[0];
  CHECK(dl.trace.size() >= 4);
  CHECK(dl.state.find("Buyer=ordered") != std::string::npos);
  CHECK_FALSE(purchase->substitution.holds);
  CHECK(rep.str().find("protocol Purchase instance s") != std::string::npos);
  for (const auto& v : rep.verdicts) {
    if (v.protocol == "Payment") CHECK(v.preserved());
  }
}

TEST_CASE("free interleaving projects back onto the originals") {
  auto d = fx::shop();
  d.rules.clear();
  auto c = coordinate(d);
  auto rep = verify_coordination(c, {fx::purchase(), fx::payment()});
  CHECK(rep.ok());
  for (const auto& inst : d.instances) {
    auto r = recover_role(c, inst.name);
    CHECK(r.transitions.size() == inst.role.transitions.size());
    CHECK(protocol::check_substitutable(project(c, inst.name), inst.role).holds);
    CHECK(protocol::check_substitutable(inst.role, project(c, inst.name)).holds);
  }
}

TEST_CASE("recovered roles re-coordinate to the same behavior") {
  for (bool suppress : {false, true}) {
    auto c = coordinate(fx::shop(suppress));
    auto d = c.def;
    for (auto& inst : d.instances) inst.role = recover_role(c, inst.name);
    auto again = coordinate(d);
    CHECK(traces(again.joint, 10) == traces(c.joint, 10));
  }
}

// Forcing and disabling rules whose targets are never disabled elsewhere only
// prune; rules that enable only add.
TEST_CASE("disabling rules only prune, enabling rules only add") {
  auto d = fx::shop();
  d.rules = {
      {"r1", {"p", "!RequestPayment"}, std::nullopt, {{Effect::Kind::kDisable, {"s", "?Decline"}}}},
      {"r2", {"s", "?Order"}, std::nullopt, {{Effect::Kind::kForce, {"p", "!RequestPayment"}}}},
      {"r3", {"p", "?Payment"}, std::nullopt, {{Effect::Kind::kDisable, {"s", "?Decline"}}}},
      {"r4", {"s", "!Confirm"}, std::nullopt, {{Effect::Kind::kForce, {"p", "?Payment"}}}},
  };
  auto base = mode_steps(coordinate(d));
  auto free = d;
  free.rules.clear();
  auto all = mode_steps(coordinate(free));
  CHECK(std::includes(all.begin(), all.end(), base.begin(), base.end()));
  for (std::size_t k = 0; k < d.rules.size(); ++k) {
    auto less = d;
    less.rules.erase(less.rules.begin() + k);
    auto steps = mode_steps(coordinate(less));
    CHECK(std::includes(steps.begin(), steps.end(), base.begin(), base.end()));
  }
  auto e = fx::shop();
  e.rules = {{"open", {"s", "?Order"}, std::nullopt, {{Effect::Kind::kEnable, {"p", "!RequestPayment"}}}}};
  e.initially_disabled = {{"p", "!RequestPayment"}};
  auto with = mode_steps(coordinate(e));
  e.rules.clear();
  auto without = mode_steps(coordinate(e));
  CHECK(std::includes(with.begin(), with.end(), without.begin(), without.end()));
  CHECK(with.size() > without.size());
}

TEST_CASE("variables and conditions") {
  auto d = fx::shop();
  d.vars = {{"n", "0"}};
  d.rules = {{"count", {"s", "?Request"}, std::nullopt, {{Effect::Kind::kSet, {"", "n=1"}}}},
             {"gate", {"s", "?Order"}, behavior::parse_guard("n==1"), {{Effect::Kind::kForce, {"p", "!RequestPayment"}}}}};
  auto c = coordinate(d);
  bool forced = false;
  for (const auto& m : c.joint.modes) forced = forced || m.find("force:p.!RequestPayment") != std::string::npos;
  CHECK(forced);
  d.vars = {{"n", "5"}};
  d.rules.erase(d.rules.begin());
  c = coordinate(d);
  for (const auto& m : c.joint.modes) CHECK(m.find("force") == std::string::npos);
}

TEST_CASE("joint exploration bound") {
  CHECK(code_of([] { coordinate(fx::shop(), 3); }) == ErrorCode::kBoundExceeded);
}

TEST_CASE("layers of a chain") {
  ComponentGraph g{{"A", "B", "C"}, {{"A", "B"}, {"B", "C"}}};
  auto rep = check_layering(g);
  CHECK(rep.ok());
  CHECK(rep.layers == std::map<std::string, std::size_t>{{"A", 2}, {"B", 1}, {"C", 0}});
}

TEST_CASE("api cycles are reported with their path") {
  ComponentGraph g{{"A", "B"}, {{"A", "B"}, {"B", "A"}}};
  auto rep = check_layering(g);
  CHECK_FALSE(rep.acyclic);
  CHECK(rep.cycle == std::vector<std::string>{"A", "B", "A"});
  CHECK(rep.str() == "cycle A -> B -> A\nresult fail\n");
  ComponentGraph h{{"A", "B", "C", "D"}, {{"A", "B"}, {"B", "C"}, {"C", "D"}, {"D", "B"}}};
  CHECK(check_layering(h).cycle == std::vector<std::string>{"B", "C", "D", "B"});
  ComponentGraph self{{"S"}, {{"S", "S"}}};
  CHECK(check_layering(self).cycle == std::vector<std::string>{"S", "S"});
}

TEST_CASE("event subscriptions must rise") {
  ComponentGraph g{{"A", "B", "C"}, {{"A", "B"}, {"B", "C"}, {"A", "C", EdgeKind::kEventSubscription}}};
  auto rep = check_layering(g);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0] == "A -> C (event_subscription, layer 2 -> 0)");
  g.edges.back() = {"C", "A", EdgeKind::kEventSubscription};
  CHECK(check_layering(g).ok());
  g.edges.push_back({"C", "A", EdgeKind::kProtocolBinding});
  g.edges.push_back({"A", "C", EdgeKind::kProtocolBinding});
  CHECK(check_layering(g).ok());
}

TEST_CASE("layers against longest paths on random DAGs") {
  std::mt19937 rng(3);
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + static_cast<int>(rng() % 7);
    ComponentGraph g;
    for (int i = 0; i < n; ++i) g.nodes.push_back("N" + std::to_string(i));
    // edges only from higher to lower index keep the graph acyclic
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        if (rng() % 3 == 0) {
          g.edges.push_back({g.nodes[i], g.nodes[j]});
          adj[i].push_back(j);
        }
      }
    }
    std::vector<std::size_t> depth(n, 0);
    for (int i = 0; i < n; ++i) {
      for (int j : adj[i]) depth[i] = std::max(depth[i], depth[j] + 1);
    }
    auto rep = check_layering(g);
    REQUIRE(rep.acyclic);
    for (int i = 0; i < n; ++i) CHECK(rep.layers[g.nodes[i]] == depth[i]);
    // shuffling edge order changes nothing; adding an edge never lowers a layer
    auto h = g;
    std::shuffle(h.edges.begin(), h.edges.end(), rng);
    CHECK(check_layering(h).layers == rep.layers);
    int a = static_cast<int>(rng() % n), b = static_cast<int>(rng() % n);
    if (a > b) {
      h.edges.push_back({g.nodes[a], g.nodes[b]});
      auto more = check_layering(h);
      for (const auto& [node, l] : rep.layers) CHECK(more.layers[node] >= l);
    }
  }
}

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "ioa/error.hpp"
#include "ioa/spec.hpp"

namespace ioa::spec {

namespace {

constexpr int kOk = 0;
constexpr int kSpecError = 1;
constexpr int kFailure = 2;
constexpr int kUsage = 3;

struct Loaded {
  SpecModel model;
  int status = kOk;
};

Loaded load(const std::string& file, std::ostream& out, std::ostream& err, bool quiet_ok = true) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    err << file << ": cannot read\n";
    return {{}, kUsage};
  }
  std::stringstream ss;
  ss << in.rdbuf();
  auto r = parse_spec(ss.str());
  for (const auto& d : r.diagnostics) err << d.str(file) << "\n";
  if (!r.ok()) {
    out << "errors " << r.errors() << "\n";
    return {std::move(r.model), kSpecError};
  }
  if (!quiet_ok) out << "declarations " << r.model.order.size() << "\n";
  return {std::move(r.model), kOk};
}

Pos pos_of(const SpecModel& m, const std::string& kind, const std::string& name) {
  for (const auto& d : m.order) {
    if (d.kind == kind && d.name == name) return d.pos;
  }
  return {};
}

std::size_t default_bound(bool& bad) {
  const char* env = std::getenv("IOA_BOUND");
  if (!env || !*env) return 100000;
  char* end = nullptr;
  unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || v == 0) {
    bad = true;
    return 0;
  }
  return static_cast<std::size_t>(v);
}

int check(const std::string& file, std::ostream& out, std::ostream& err) {
  auto l = load(file, out, err, false);
  if (l.status != kOk) return l.status;
  const auto& m = l.model;
  std::size_t errors = 0;
  auto report = [&](Diagnostic::Severity sev, Pos pos, const std::string& msg) {
    err << Diagnostic{sev, pos, msg, {}}.str(file) << "\n";
    if (sev == Diagnostic::Severity::kError) ++errors;
  };
  for (const auto& p : m.processes) {
    try {
      process::coordinate(p);
    } catch (const Error& e) {
      report(Diagnostic::Severity::kError, pos_of(m, "PROCESS", p.name), e.what());
    }
  }
  for (const auto& n : m.networks) {
    try {
      auto bound = netsim::bind(network_of(m, n.name));
      for (const auto& w : bound.warnings) report(Diagnostic::Severity::kWarning, pos_of(m, "NETWORK", n.name), w);
    } catch (const Error& e) {
      report(Diagnostic::Severity::kError, pos_of(m, "NETWORK", n.name), e.what());
    }
  }
  if (errors) {
    out << "errors " << errors << "\n";
    return kSpecError;
  }
  out << "result ok\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Checks, verifies and simulates interaction specifications.", "ioa"};
  app.require_subcommand(1);

  std::string file, name, expr, from, to, value, scheduler = "random";
  std::optional<std::size_t> bound;
  std::size_t steps = 0;
  std::uint64_t seed = 0;

  auto* c_check = app.add_subcommand("check", "Parse and validate a spec file");
  c_check->add_option("FILE", file, "Spec file")->required();

  auto* c_verify = app.add_subcommand("verify", "Verify a protocol");
  c_verify->add_option("--protocol", name, "Protocol name")->required();
  c_verify->add_option("--bound", bound, "Joint state bound (default IOA_BOUND or 100000)")
      ->check(CLI::PositiveNumber);
  c_verify->add_option("FILE", file, "Spec file")->required();

  auto* c_sim = app.add_subcommand("simulate", "Simulate a network");
  c_sim->add_option("--network", name, "Network name")->required();
  c_sim->add_option("--steps", steps, "Step budget")->required();
  c_sim->add_option("--seed", seed, "Seed for the random scheduler");
  c_sim->add_option("--scheduler", scheduler, "random, round_robin or exhaustive")
      ->check(CLI::IsMember({"random", "round_robin", "exhaustive"}));
  c_sim->add_option("FILE", file, "Spec file")->required();

  auto* c_cast = app.add_subcommand("cast", "Cast a value along the type hierarchy");
  c_cast->add_option("--hierarchy", file, "Spec file with the type declarations")->required();
  c_cast->add_option("--from", from, "Source type")->required();
  c_cast->add_option("--to", to, "Target type")->required();
  c_cast->add_option("--value", value, "Value, e.g. abc or {a=x,b=y}")->required();

  auto* c_layers = app.add_subcommand("layers", "Check component layering");
  c_layers->add_option("FILE", file, "Spec file")->required();
  c_layers->add_option("--components", name, "Only this component graph");

  auto* c_compose = app.add_subcommand("compose", "Compose systems and print the transition table");
  c_compose->add_option("FILE", file, "Spec file")->required();
  c_compose->add_option("--expr", expr, "Expression such as \"a ; b\" or \"a || b\"")->required();

  auto* c_coord = app.add_subcommand("coordinate", "Check that a process preserves its protocols");
  c_coord->add_option("--process", name, "Process name")->required();
  c_coord->add_option("--bound", bound, "Joint state bound (default IOA_BOUND or 100000)")
      ->check(CLI::PositiveNumber);
  c_coord->add_option("FILE", file, "Spec file")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  bool bad_env = false;
  std::size_t the_bound = bound ? *bound : default_bound(bad_env);
  if (bad_env) {
    err << "IOA_BOUND must be a positive integer\n";
    return kUsage;
  }

  try {
    if (*c_check) return check(file, out, err);

    auto l = load(file, out, err);
    if (l.status != kOk) return l.status;
    const auto& m = l.model;

    if (*c_verify) {
      const auto* p = m.protocol(name);
      if (!p) {
        err << "unknown protocol " << name << "\n";
        return kUsage;
      }
      auto rep = protocol::verify(*p, the_bound);
      out << rep.str();
      return rep.ok() ? kOk : kFailure;
    }
    if (*c_sim) {
      if (!m.network(name)) {
        err << "unknown network " << name << "\n";
        return kUsage;
      }
      auto net = netsim::bind(network_of(m, name));
      for (const auto& w : net.warnings) err << "warning: " << w << "\n";
      netsim::Scheduler s;
      s.seed = seed;
      s.kind = scheduler == "round_robin"  ? netsim::Scheduler::Kind::kRoundRobin
               : scheduler == "exhaustive" ? netsim::Scheduler::Kind::kExhaustive
                                           : netsim::Scheduler::Kind::kSeededRandom;
      out << netsim::simulate(net, s, steps).str();
      return kOk;
    }
    if (*c_cast) {
      auto h = hierarchy_of(m);
      if (!h.nodes().count(from) || !h.nodes().count(to)) {
        err << "unknown type " << (h.nodes().count(from) ? to : from) << "\n";
        return kUsage;
      }
      try {
        auto d = h.cast(types::parse_datum(value), from, to);
        out << d.str() << "\n";
        return kOk;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUnsafeCast && e.code() != ErrorCode::kValueOutsideType &&
            e.code() != ErrorCode::kDomain) {
          throw;
        }
        out << e.what() << "\n";
        return kFailure;
      }
    }
    if (*c_layers) {
      bool ok = true, any = false;
      for (const auto& c : m.components) {
        if (!name.empty() && c.name != name) continue;
        any = true;
        auto rep = process::check_layering(c.graph);
        out << "components " << c.name << "\n" << rep.str();
        ok = ok && rep.ok();
      }
      if (!any) {
        err << (name.empty() ? "no COMPONENTS declarations" : "unknown components " + name) << "\n";
        return kUsage;
      }
      return ok ? kOk : kFailure;
    }
    if (*c_compose) {
      try {
        out << kernel::format_table(compose(m, expr));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kSpec) throw;
        err << e.detail() << "\n";
        return kUsage;
      }
      return kOk;
    }
    if (*c_coord) {
      if (!m.process(name)) {
        err << "unknown process " << name << "\n";
        return kUsage;
      }
      auto rep = process::verify_coordination(coordinate_process(m, name, the_bound), m.protocols, the_bound);
      out << rep.str();
      return rep.ok() ? kOk : kFailure;
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kSpecError;
  }
  return kUsage;
}

}  // namespace ioa::spec

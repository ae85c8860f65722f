#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ioa/error.hpp"
#include "ioa/spec.hpp"

namespace py = pybind11;
using namespace ioa;

namespace {

spec::SpecModel parse_or_raise(const std::string& text) {
  auto r = spec::parse_spec(text);
  if (!r.ok()) {
    std::string msg;
    for (const auto& d : r.diagnostics) {
      if (d.severity == spec::Diagnostic::Severity::kError) msg += d.str() + "\n";
    }
    throw Error(ErrorCode::kSpec, msg);
  }
  return r.model;
}

template <typename T>
std::vector<std::string> names_of(const std::vector<T>& items) {
  std::vector<std::string> out;
  for (const auto& i : items) out.push_back(i.name);
  return out;
}

}  // namespace

PYBIND11_MODULE(_ioa, m) {
  m.doc() = "Interaction specifications: parsing, verification, simulation and type casts.";

  py::register_exception<Error>(m, "Error");

  py::class_<spec::Diagnostic>(m, "Diagnostic")
      .def_property_readonly("severity", [](const spec::Diagnostic& d) { return std::string(spec::to_string(d.severity)); })
      .def_property_readonly("line", [](const spec::Diagnostic& d) { return d.pos.line; })
      .def_property_readonly("col", [](const spec::Diagnostic& d) { return d.pos.col; })
      .def_readonly("message", &spec::Diagnostic::message)
      .def("__str__", [](const spec::Diagnostic& d) { return d.str(); });

  py::class_<protocol::Finding>(m, "Finding")
      .def_readonly("state", &protocol::Finding::state)
      .def_readonly("trace", &protocol::Finding::trace)
      .def_readonly("detail", &protocol::Finding::detail);

  py::class_<protocol::VerificationReport>(m, "VerificationReport")
      .def_readonly("complete", &protocol::VerificationReport::complete)
      .def_readonly("unspecified", &protocol::VerificationReport::unspecified)
      .def_readonly("deadlocks", &protocol::VerificationReport::deadlocks)
      .def_readonly("livelocks", &protocol::VerificationReport::livelocks)
      .def_readonly("goal_reachable", &protocol::VerificationReport::goal_reachable)
      .def_readonly("goal_trace", &protocol::VerificationReport::goal_trace)
      .def_readonly("explored_states", &protocol::VerificationReport::explored_states)
      .def_readonly("bound_hit", &protocol::VerificationReport::bound_hit)
      .def_property_readonly("ok", &protocol::VerificationReport::ok)
      .def("__str__", &protocol::VerificationReport::str);

  py::class_<netsim::Record>(m, "Record")
      .def_readonly("step", &netsim::Record::step)
      .def_readonly("node", &netsim::Record::node)
      .def_readonly("kind", &netsim::Record::kind)
      .def_readonly("payload", &netsim::Record::payload);

  py::class_<netsim::EventLog>(m, "EventLog")
      .def_readonly("records", &netsim::EventLog::records)
      .def_readonly("status", &netsim::EventLog::status)
      .def("fired", &netsim::EventLog::fired)
      .def("__str__", &netsim::EventLog::str);

  py::class_<process::LayerReport>(m, "LayerReport")
      .def_readonly("acyclic", &process::LayerReport::acyclic)
      .def_readonly("cycle", &process::LayerReport::cycle)
      .def_readonly("layers", &process::LayerReport::layers)
      .def_readonly("violations", &process::LayerReport::violations)
      .def_property_readonly("ok", &process::LayerReport::ok)
      .def("__str__", &process::LayerReport::str);

  py::class_<spec::SpecModel>(m, "Spec")
      .def(py::init(&parse_or_raise), py::arg("text"))
      .def_property_readonly("types", [](const spec::SpecModel& s) {
        std::vector<std::string> out;
        for (const auto& t : s.types) out.push_back(t.name());
        return out;
      })
      .def_property_readonly("roles", [](const spec::SpecModel& s) { return names_of(s.roles); })
      .def_property_readonly("protocols", [](const spec::SpecModel& s) { return names_of(s.protocols); })
      .def_property_readonly("processes", [](const spec::SpecModel& s) { return names_of(s.processes); })
      .def_property_readonly("networks", [](const spec::SpecModel& s) { return names_of(s.networks); })
      .def_property_readonly("components", [](const spec::SpecModel& s) { return names_of(s.components); })
      .def("serialize", &spec::serialize)
      .def(
          "verify",
          [](const spec::SpecModel& s, const std::string& name, std::size_t bound) {
            const auto* p = s.protocol(name);
            if (!p) throw Error(ErrorCode::kSpec, "unknown protocol " + name);
            return protocol::verify(*p, bound);
          },
          py::arg("protocol"), py::arg("bound") = 100000)
      .def(
          "simulate",
          [](const spec::SpecModel& s, const std::string& name, std::size_t steps, std::uint64_t seed,
             const std::string& scheduler) {
            netsim::Scheduler sch;
            sch.seed = seed;
            if (scheduler == "random") {
              sch.kind = netsim::Scheduler::Kind::kSeededRandom;
            } else if (scheduler == "round_robin") {
              sch.kind = netsim::Scheduler::Kind::kRoundRobin;
            } else if (scheduler == "exhaustive") {
              sch.kind = netsim::Scheduler::Kind::kExhaustive;
            } else {
              throw py::value_error("scheduler must be random, round_robin or exhaustive");
            }
            return netsim::simulate(netsim::bind(spec::network_of(s, name)), sch, steps);
          },
          py::arg("network"), py::arg("steps"), py::arg("seed") = 0, py::arg("scheduler") = "random")
      .def(
          "cast",
          [](const spec::SpecModel& s, const std::string& value, const std::string& from, const std::string& to) {
            return spec::hierarchy_of(s).cast(types::parse_datum(value), from, to).str();
          },
          py::arg("value"), py::arg("source"), py::arg("target"))
      .def(
          "coordinate",
          [](const spec::SpecModel& s, const std::string& name, std::size_t bound) {
            auto rep = process::verify_coordination(spec::coordinate_process(s, name, bound), s.protocols, bound);
            return py::make_tuple(rep.ok(), rep.str());
          },
          py::arg("process"), py::arg("bound") = 100000)
      .def(
          "layers",
          [](const spec::SpecModel& s, const std::string& name) {
            for (const auto& c : s.components) {
              if (c.name == name) return process::check_layering(c.graph);
            }
            throw Error(ErrorCode::kSpec, "unknown components " + name);
          },
          py::arg("components"))
      .def(
          "compose", [](const spec::SpecModel& s, const std::string& expr) { return kernel::format_table(spec::compose(s, expr)); },
          py::arg("expr"))
      .def("__eq__", [](const spec::SpecModel& a, const spec::SpecModel& b) { return a == b; });

  m.def(
      "check",
      [](const std::string& text) { return spec::parse_spec(text).diagnostics; },
      py::arg("text"), "All diagnostics for a spec text; an empty list of errors means it resolved.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = spec::run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line front end; returns (exit code, stdout, stderr).");
}

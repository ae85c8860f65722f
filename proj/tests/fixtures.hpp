#pragma once

// The worked protocols built directly in C++, independent of the parser.

#include <string>
#include <vector>

#include "ioa/behavior.hpp"
#include "ioa/process.hpp"
#include "ioa/protocol.hpp"

namespace fx {

using ioa::behavior::GuardedTransition;
using ioa::behavior::Role;
using ioa::protocol::Protocol;

// `in`/`out` empty means ε.
inline GuardedTransition tr(const std::string& from, const std::string& in, const std::string& out,
                            const std::string& to, const std::string& guard = "") {
  GuardedTransition t;
  t.from = from;
  t.to = to;
  if (!in.empty()) t.in_doc = in;
  if (!out.empty()) t.out_doc = out;
  if (!guard.empty()) t.guard = ioa::behavior::parse_guard(guard);
  return t;
}

inline Role role(const std::string& name, std::vector<std::string> modes,
                 std::vector<ioa::behavior::DocumentClass> docs, std::vector<GuardedTransition> ts) {
  Role r;
  r.name = name;
  r.initial = modes.front();
  r.modes = std::move(modes);
  r.docs = std::move(docs);
  r.transitions = std::move(ts);
  return r;
}

inline Role pinger(bool with_stop = true) {
  std::vector<GuardedTransition> ts{tr("idle", "", "Ping", "waiting"), tr("waiting", "Pong", "", "idle")};
  if (with_stop) ts.push_back(tr("idle", "", "Stop", "done"));
  return role("Pinger", {"idle", "waiting", "done"}, {{"Ping", {}}, {"Pong", {}}, {"Stop", {}}}, ts);
}

inline Role ponger(bool with_stop = true) {
  std::vector<GuardedTransition> ts{tr("ready", "Ping", "Pong", "ready")};
  if (with_stop) ts.push_back(tr("ready", "Stop", "", "done"));
  return role("Ponger", {"ready", "done"}, {{"Ping", {}}, {"Pong", {}}, {"Stop", {}}}, ts);
}

inline Protocol pingpong() {
  return {"PingPong",
          {pinger(), ponger()},
          {{"Pinger", "Ponger", "Ping"}, {"Ponger", "Pinger", "Pong"}, {"Pinger", "Ponger", "Stop"}},
          {{{"Pinger", "done"}, {"Ponger", "done"}}}};
}

inline Protocol pingpong_livelock() {
  return {"PingPongForever",
          {pinger(false), ponger(false)},
          {{"Pinger", "Ponger", "Ping"}, {"Ponger", "Pinger", "Pong"}},
          {{{"Pinger", "done"}, {"Ponger", "done"}}}};
}

inline Protocol both_wait() {
  auto a = role("A", {"a0", "a1"}, {{"X", {}}, {"Y", {}}}, {tr("a0", "X", "", "a1"), tr("a1", "", "Y", "a1")});
  auto b = role("B", {"b0", "b1"}, {{"X", {}}, {"Y", {}}}, {tr("b0", "Y", "", "b1"), tr("b1", "", "X", "b1")});
  return {"BothWait", {a, b}, {{"A", "B", "Y"}, {"B", "A", "X"}}, {{{"A", "a1"}, {"B", "b1"}}}};
}

inline std::vector<ioa::behavior::DocumentClass> purchase_docs() {
  return {{"Request", {}}, {"Quote", {{"price", {"low", "high"}}}}, {"Order", {}}, {"Decline", {}}, {"Confirm", {}}};
}

inline Role buyer() {
  return role("Buyer", {"start", "asked", "ordered", "cancelled", "done"}, purchase_docs(),
              {tr("start", "", "Request", "asked"), tr("asked", "Quote", "Order", "ordered"),
               tr("asked", "Quote", "Decline", "cancelled", "price==high"), tr("ordered", "Confirm", "", "done")});
}

inline Role seller() {
  return role("Seller", {"idle", "quoted", "ordered", "closed"}, purchase_docs(),
              {tr("idle", "Request", "Quote", "quoted"), tr("quoted", "Order", "", "ordered"),
               tr("ordered", "", "Confirm", "closed"), tr("quoted", "Decline", "", "closed")});
}

inline Protocol purchase() {
  return {"Purchase",
          {buyer(), seller()},
          {{"Buyer", "Seller", "Request"},
           {"Seller", "Buyer", "Quote"},
           {"Buyer", "Seller", "Order"},
           {"Buyer", "Seller", "Decline"},
           {"Seller", "Buyer", "Confirm"}},
          {{{"Buyer", "done"}, {"Seller", "closed"}}, {{"Buyer", "cancelled"}, {"Seller", "closed"}}}};
}

inline Role payee() {
  return role("Payee", {"ready", "requested", "paid"}, {{"RequestPayment", {}}, {"Payment", {}}},
              {tr("ready", "", "RequestPayment", "requested"), tr("requested", "Payment", "", "paid")});
}

inline Role payer() {
  return role("Payer", {"waiting", "done"}, {{"RequestPayment", {}}, {"Payment", {}}},
              {tr("waiting", "RequestPayment", "Payment", "done")});
}

inline Protocol payment() {
  return {"Payment",
          {payee(), payer()},
          {{"Payee", "Payer", "RequestPayment"}, {"Payer", "Payee", "Payment"}},
          {{{"Payee", "paid"}, {"Payer", "done"}}, {{"Payee", "ready"}, {"Payer", "waiting"}}}};
}

// Seller variants for substitutability.
inline Role seller_without_decline() {
  auto r = seller();
  std::erase_if(r.transitions, [](const auto& t) { return t.in_doc == std::optional<std::string>("Decline"); });
  return r;
}

inline Role seller_with_extra_confirm() {
  auto r = seller();
  r.transitions.push_back(tr("quoted", "", "Confirm", "closed"));
  return r;
}

inline Role seller_with_extra_reception() {
  auto r = seller();
  r.transitions.push_back(tr("idle", "Order", "", "idle"));
  return r;
}

// A shop: one seller in the purchase protocol and one payee in the payment
// protocol. The rule asks for payment as soon as an order arrives; the
// suppressing variant also withholds the seller's confirmation.
inline ioa::process::ProcessDef shop(bool suppress = false) {
  using namespace ioa::process;
  ProcessDef d;
  d.name = "Shop";
  d.instances = {{"s", seller(), "Purchase", "Seller"}, {"p", payee(), "Payment", "Payee"}};
  d.rules.push_back({"pay", {"s", "?Order"}, std::nullopt, {{Effect::Kind::kForce, {"p", "!RequestPayment"}}}});
  if (suppress) {
    d.rules.push_back({"hold", {"s", "?Order"}, std::nullopt, {{Effect::Kind::kDisable, {"s", "!Confirm"}}}});
  }
  return d;
}

}  // namespace fx

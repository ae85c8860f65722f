#pragma once

// Brute-force enumeration of a protocol's joint state space, written
// separately from the library explorer. Channels are FIFO per (sender,
// receiver) pair; states are keyed by their mode vector and buffer contents.

#include <set>
#include <string>
#include <vector>

#include "ioa/protocol.hpp"

namespace oracle {

struct EnumResult {
  std::size_t states = 0;
  bool complete = true;
  bool goal_reachable = false;
  bool livelock = false;
  // modes joined by ',' then ' ' and sorted `from->to:msg` entries
  std::set<std::string> deadlocks;
};

EnumResult enumerate_protocol(const ioa::protocol::Protocol& p);

// Same key format for a library state.
std::string state_key(const ioa::protocol::Ensemble& e, const ioa::protocol::JointState& s);

}  // namespace oracle

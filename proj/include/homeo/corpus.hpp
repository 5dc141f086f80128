#pragma once

#include <random>
#include <string>

#include "homeo/ast.hpp"
#include "homeo/session.hpp"

namespace homeo {

// Deterministic program generator. Programs follow a race-free discipline:
// control predicates read only private variables, every shared variable is
// written in at most one phase per region, shared reads target variables
// written in strictly earlier (barrier-separated) phases, and values read
// between flush pairs inside a phase flow only into scratch privates that
// never reach shared state. Each program carries optimization opportunities:
// doubled barriers, mergeable adjacent regions and calls hiding barriers.
struct GenConfig {
  unsigned seed = 1;
  int nodes = 200;          // executable-node target (roughly +-20%)
  int parallelRegions = 3;  // parallel constructs in main
  int barriers = 8;         // internal barriers across regions
};

std::string generateSource(const GenConfig& cfg);

// One random elementary transformation applied through the session (insert,
// remove or replace a statement, or swap out a slot body). Returns a short
// label describing the delta.
std::string randomDelta(Session& s, std::mt19937& rng);

}  // namespace homeo

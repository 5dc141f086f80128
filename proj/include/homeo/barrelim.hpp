#pragma once

#include <functional>
#include <string>

#include "homeo/hidfa.hpp"
#include "homeo/session.hpp"

namespace homeo {

struct OptReport {
  int barriersRemoved = 0;
  int regionsMerged = 0;
  int callsInlined = 0;
  int rounds = 0;

  bool operator==(const OptReport&) const = default;
};

// Barrier elimination: inputs are plain analysis getters plus a callback the
// driver fires at each relevant change point; the optimization itself knows
// nothing about how analysis freshness is maintained.
struct BarrElimContext {
  Session& session;
  DataflowAnalysis& rd;
  DataflowAnalysis& lv;
  std::function<void(const std::string&)> changePoint;  // label, may be empty fn
  int maxRounds = 10000;
};

OptReport runBarrElim(BarrElimContext ctx);

}  // namespace homeo

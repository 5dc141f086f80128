#pragma once

#include <map>
#include <string>

#include "homeo/ast.hpp"

namespace homeo {

// Outcome of one scheduled execution. `shared` is the committed shared store
// at exit, with each value rendered canonically ("42" or "&loc"). Abnormal
// outcomes (barrier deadlock, step budget) are reported, not thrown, so a
// differential harness can compare them too.
struct RunResult {
  bool ok = false;
  std::string error;
  std::map<std::string, std::string> shared;

  bool operator==(const RunResult&) const = default;
  std::string toString() const;
};

// Executes the program under a relaxed, flush-based memory model: each
// thread buffers shared writes and caches shared reads until it flushes;
// barriers flush on arrival and release when every sibling thread arrived.
// Thread interleaving is chosen by a seeded RNG, one statement per step.
RunResult interpret(const Program& p, int threads, unsigned seed,
                    long stepBudget = 2000000);

}  // namespace homeo

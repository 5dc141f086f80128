#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "homeo/ast.hpp"
#include "homeo/changelog.hpp"
#include "homeo/graph.hpp"
#include "homeo/phase.hpp"
#include "homeo/stabilizer.hpp"

namespace homeo {

// Slots holding a single block child, addressable by replaceSlot.
enum class Slot { IfThen, IfElse, WhileBody, ParallelBody };

// Owns a program together with its super-graph, phase information, change
// log and stabilizer. All mutation goes through the elementary
// transformations below; each one records removal effects, mutates the tree,
// rebuilds derived structure, records addition effects, appends the combined
// change to the log and notifies the stabilizer.
class Session {
 public:
  Session(Program p, Mode mode, bool strictRp = false);

  Program& program() { return p_; }
  const Program& program() const { return p_; }
  Supergraph& graph() { return g_; }
  const PhaseInfo& phaseInfo() const { return phase_.info(); }
  Stabilizer& stabilizer() { return stab_; }
  ChangeLog& log() { return log_; }

  // Elementary transformations. `payload` must be a detached statement
  // subtree previously built inside program().
  void insertAt(NodeId block, size_t idx, NodeId payload);
  void removeAt(NodeId block, size_t idx);
  void replaceAt(NodeId block, size_t idx, NodeId payload);
  void replaceSlot(NodeId owner, Slot slot, NodeId payload);

  void stabilizeNow(const std::vector<std::string>& names = {}) {
    stab_.stabilizeNow(names);
  }

 private:
  struct Snapshot {
    std::set<NodeId> nodes;
    std::set<EdgeRec> edges;
  };
  Snapshot snapshot() const;
  void checkBlockIndex(NodeId block, size_t idx, bool forInsert) const;
  void checkPayload(NodeId payload, bool mustBeBlock) const;
  bool subtreeIsStructural(NodeId root) const;
  void finish(const Snapshot& before, bool structural);

  Program p_;
  Supergraph g_;
  PhaseAnalysis phase_;
  ChangeLog log_;
  Stabilizer stab_;
};

// Builders for detached payload subtrees.
NodeId detachedAssign(Program& p, std::string lhs, Expr rhs, bool derefLhs = false);
NodeId detachedDecl(Program& p, bool shared, std::string name);
NodeId detachedBarrier(Program& p);
NodeId detachedFlush(Program& p);
NodeId detachedCall(Program& p, std::string callee);
NodeId detachedReturn(Program& p);
NodeId detachedBlock(Program& p, const std::vector<NodeId>& stmts);
NodeId detachedIf(Program& p, Expr cond, NodeId thenBlk, NodeId elseBlk = 0);
NodeId detachedWhile(Program& p, Expr cond, NodeId bodyBlk);
NodeId detachedParallel(Program& p, NodeId bodyBlk);

}  // namespace homeo

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "homeo/ast.hpp"
#include "homeo/graph.hpp"

namespace homeo {

using SyncSet = std::set<NodeId>;  // barrier ids

struct Phase {
  NodeId region = 0;        // owning Parallel node
  SyncSet start;            // sync set the phase starts from (empty: region start)
  SyncSet end;              // terminating sync set (empty: region runs off the end)
  std::set<NodeId> nodes;   // members, including boundary barriers

  auto operator<=>(const Phase&) const = default;
};

struct InterTaskEdge {
  NodeId from = 0;  // flush whose preceding writes may be communicated
  NodeId to = 0;    // flush after which the reads happen
  std::set<std::string> vars;  // communicable shared locations

  auto operator<=>(const InterTaskEdge&) const = default;
};

struct PhaseInfo {
  std::set<Phase> phases;
  std::set<SyncSet> syncSets;
  std::set<InterTaskEdge> interTask;

  bool operator==(const PhaseInfo&) const = default;

  std::set<const Phase*> phasesOf(NodeId n) const;
  bool sharePhase(NodeId a, NodeId b) const;
  std::set<NodeId> siblings(NodeId barrier) const;
  std::set<std::pair<NodeId, NodeId>> interTaskPairs() const;
  std::string toJson() const;
  std::string toDot(const Program& p) const;
};

// From-scratch phase construction: frontier expansion per parallel region,
// barriers reached by a frontier merge into one synchronization set.
PhaseInfo computePhases(const Program& p, const Supergraph& g);

// Incremental stabilization of phase information under one elementary
// transformation; mixed mode: reuse what cannot have changed, recompute the
// rest, and report barriers whose sibling sets changed (they need reseeding
// in incremental dataflow even when no incident edge changed).
class PhaseAnalysis {
 public:
  const PhaseInfo& info() const { return info_; }

  void computeAll(const Program& p, const Supergraph& g);

  // Called after the AST mutation and CFG rebuild. `structural` is true when
  // the added or removed subtree contained a Barrier or Parallel node.
  // Returns barriers whose sibling sets changed.
  std::set<NodeId> stabilizeOnChange(const Program& p, const Supergraph& g, bool structural);

 private:
  PhaseInfo info_;
};

}  // namespace homeo

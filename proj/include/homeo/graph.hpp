#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "homeo/ast.hpp"

namespace homeo {

enum class EdgeKind { Cfg, Call, InterTask };

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  EdgeKind kind = EdgeKind::Cfg;

  auto operator<=>(const Edge&) const = default;
};

// SCC condensation index of the super-graph. sccOf maps every executable node
// to the topological index of its SCC; withinOrder gives each node's position
// inside its SCC (a valid topological order of the SCC with back edges removed).
struct SccIndex {
  std::map<NodeId, int> sccOf;
  std::map<NodeId, int> withinOrder;
  int sccCount = 0;
};

class Supergraph {
 public:
  // Full rebuild of CFG and call edges from the program; keeps the currently
  // installed inter-task edge set.
  void rebuild(const Program& p);

  void setInterTaskEdges(const std::set<std::pair<NodeId, NodeId>>& edges);

  const std::set<Edge>& edges() const { return edges_; }
  const std::set<NodeId>& nodes() const { return nodes_; }

  std::vector<NodeId> successors(NodeId n) const;
  std::vector<NodeId> predecessors(NodeId n) const;

  // Lazily recomputed on first query after invalidation. reversed=true indexes
  // the edge-reversed super-graph (used by backward analyses).
  const SccIndex& scc(bool reversed = false) const;

  std::string toDot(const Program& p) const;

 private:
  void invalidate() const;
  static SccIndex computeScc(const std::set<NodeId>& nodes,
                             const std::map<NodeId, std::vector<NodeId>>& adj);

  std::set<Edge> edges_;
  std::set<NodeId> nodes_;
  mutable std::map<NodeId, std::vector<NodeId>> succ_, pred_;
  mutable bool adjFresh_ = false;
  mutable SccIndex fwd_, rev_;
  mutable bool fwdFresh_ = false, revFresh_ = false;

  void ensureAdj() const;
};

// Builds the intra-procedural CFG plus call/return edges for the whole
// program. Inter-task edges are supplied separately by phase analysis.
std::set<Edge> buildCfgCallEdges(const Program& p);

// SCC condensation of an arbitrary adjacency relation (deterministic).
SccIndex computeSccIndex(const std::set<NodeId>& nodes,
                         const std::map<NodeId, std::vector<NodeId>>& adj);

}  // namespace homeo

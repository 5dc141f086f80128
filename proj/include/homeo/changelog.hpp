#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "homeo/ast.hpp"
#include "homeo/graph.hpp"

namespace homeo {

// Super-graph edge as recorded in the change log. Inter-task edges carry
// their communicable-variable set, so a variable-set change shows up as a
// removal plus an addition even when the endpoint pair is unchanged.
struct EdgeRec {
  NodeId src = 0;
  NodeId dst = 0;
  EdgeKind kind = EdgeKind::Cfg;
  std::set<std::string> vars;

  auto operator<=>(const EdgeRec&) const = default;
};

// Effect of one elementary transformation on the super-graph.
struct ElemChange {
  std::set<NodeId> addedNodes, removedNodes;
  std::set<EdgeRec> addedEdges, removedEdges;
  // Barriers whose synchronization siblings changed without any incident
  // edge changing; incremental dataflow must reseed them.
  std::set<NodeId> resyncedBarriers;

  bool empty() const {
    return addedNodes.empty() && removedNodes.empty() && addedEdges.empty() &&
           removedEdges.empty() && resyncedBarriers.empty();
  }
  bool operator==(const ElemChange&) const = default;
};

// Append-only log of elementary changes. Every analysis keeps a cursor (the
// log position it has consumed up to); netChanges folds the tail beyond a
// cursor into one change with cancellation: an element added and later
// removed inside the window (or vice versa) appears in neither set.
class ChangeLog {
 public:
  size_t head() const { return base_ + entries_.size(); }
  size_t base() const { return base_; }

  void append(ElemChange c) { entries_.push_back(std::move(c)); }

  ElemChange netChanges(size_t from) const;

  // Drops entries every live cursor is already past.
  void compact(size_t minCursor);

  const ElemChange& entry(size_t pos) const;

 private:
  std::vector<ElemChange> entries_;
  size_t base_ = 0;
};

}  // namespace homeo

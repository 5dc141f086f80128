#include "homeo/changelog.hpp"

#include <stdexcept>

namespace homeo {
namespace {

template <typename T>
void fold(std::set<T>& added, std::set<T>& removed, const std::set<T>& nowAdded,
          const std::set<T>& nowRemoved) {
  for (const T& x : nowRemoved) {
    if (added.erase(x) == 0) removed.insert(x);
  }
  for (const T& x : nowAdded) {
    if (removed.erase(x) == 0) added.insert(x);
  }
}

}  // namespace

ElemChange ChangeLog::netChanges(size_t from) const {
  if (from < base_) throw IrError("change log cursor below compaction point");
  ElemChange net;
  for (size_t i = from - base_; i < entries_.size(); ++i) {
    const ElemChange& c = entries_[i];
    fold(net.addedNodes, net.removedNodes, c.addedNodes, c.removedNodes);
    fold(net.addedEdges, net.removedEdges, c.addedEdges, c.removedEdges);
    net.resyncedBarriers.insert(c.resyncedBarriers.begin(), c.resyncedBarriers.end());
  }
  return net;
}

void ChangeLog::compact(size_t minCursor) {
  if (minCursor <= base_) return;
  size_t drop = std::min(minCursor - base_, entries_.size());
  entries_.erase(entries_.begin(), entries_.begin() + static_cast<long>(drop));
  base_ += drop;
}

const ElemChange& ChangeLog::entry(size_t pos) const {
  if (pos < base_ || pos >= head()) throw IrError("change log entry out of range");
  return entries_[pos - base_];
}

}  // namespace homeo

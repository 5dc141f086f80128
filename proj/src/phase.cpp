#include "homeo/phase.hpp"

#include <algorithm>
#include <deque>

#include "json.hpp"

namespace homeo {
namespace {

using Adj = std::map<NodeId, std::vector<NodeId>>;

// Control-flow adjacency (cfg + call edges, no inter-task edges).
void buildControlAdj(const Supergraph& g, Adj& succ, Adj& pred) {
  for (const Edge& e : g.edges()) {
    if (e.kind == EdgeKind::InterTask) continue;
    succ[e.src].push_back(e.dst);
    pred[e.dst].push_back(e.src);
  }
}

std::set<NodeId> executableSubtree(const Program& p, NodeId root) {
  std::set<NodeId> out;
  for (NodeId n : p.subtree(root)) {
    if (p.node(n).kind != NodeKind::Block) out.insert(n);
  }
  return out;
}

// Nodes reachable inside one parallel region: the region body plus every
// function transitively callable from it (context-insensitive).
std::set<NodeId> regionNodes(const Program& p, NodeId parallel) {
  std::set<NodeId> out = executableSubtree(p, p.node(parallel).body);
  std::set<std::string> fns;
  std::deque<NodeId> work(out.begin(), out.end());
  while (!work.empty()) {
    NodeId n = work.front();
    work.pop_front();
    const ProgramNode& pn = p.node(n);
    if (pn.kind != NodeKind::Call) continue;
    auto it = p.functions.find(pn.callee);
    if (it == p.functions.end() || !fns.insert(pn.callee).second) continue;
    const Function& fn = it->second;
    out.insert(fn.entry);
    out.insert(fn.exit);
    for (NodeId m : executableSubtree(p, fn.body)) {
      if (out.insert(m).second) work.push_back(m);
    }
  }
  return out;
}

Phase expandPhase(const Program& p, const Adj& succ, const std::set<NodeId>& region,
                  NodeId parallel, const SyncSet& start,
                  const std::vector<NodeId>& seeds) {
  Phase ph;
  ph.region = parallel;
  ph.start = start;
  ph.nodes.insert(start.begin(), start.end());
  std::set<NodeId> seen;
  std::deque<NodeId> work;
  for (NodeId s : seeds) {
    if (region.count(s) && seen.insert(s).second) work.push_back(s);
  }
  while (!work.empty()) {
    NodeId n = work.front();
    work.pop_front();
    ph.nodes.insert(n);
    if (p.node(n).kind == NodeKind::Barrier) {
      // A barrier met by the frontier terminates the phase here; barriers
      // reached by the same frontier merge into one synchronization set.
      ph.end.insert(n);
      continue;
    }
    auto it = succ.find(n);
    if (it == succ.end()) continue;
    for (NodeId m : it->second) {
      if (region.count(m) && seen.insert(m).second) work.push_back(m);
    }
  }
  return ph;
}

void computeRegionPhases(const Program& p, const Adj& succ, NodeId parallel,
                         std::set<Phase>& phases) {
  std::set<NodeId> region = regionNodes(p, parallel);
  if (region.empty()) return;

  // First frontier: the region's entry barriers when the body starts with a
  // barrier, otherwise an anonymous start (empty sync set).
  std::vector<NodeId> first;
  if (auto it = succ.find(parallel); it != succ.end()) {
    for (NodeId m : it->second)
      if (region.count(m)) first.push_back(m);
  }
  bool allBarriers = !first.empty();
  for (NodeId m : first)
    if (p.node(m).kind != NodeKind::Barrier) allBarriers = false;

  std::set<SyncSet> done;
  std::deque<SyncSet> work;
  std::vector<std::pair<SyncSet, std::vector<NodeId>>> initial;
  if (allBarriers) {
    SyncSet s0(first.begin(), first.end());
    std::vector<NodeId> seeds;
    for (NodeId b : s0) {
      if (auto it = succ.find(b); it != succ.end())
        seeds.insert(seeds.end(), it->second.begin(), it->second.end());
    }
    done.insert(s0);
    Phase ph = expandPhase(p, succ, region, parallel, s0, seeds);
    if (!ph.end.empty() && done.insert(ph.end).second) work.push_back(ph.end);
    phases.insert(std::move(ph));
  } else {
    Phase ph = expandPhase(p, succ, region, parallel, {}, first);
    if (!ph.end.empty() && done.insert(ph.end).second) work.push_back(ph.end);
    phases.insert(std::move(ph));
  }

  while (!work.empty()) {
    SyncSet s = work.front();
    work.pop_front();
    std::vector<NodeId> seeds;
    for (NodeId b : s) {
      if (auto it = succ.find(b); it != succ.end())
        seeds.insert(seeds.end(), it->second.begin(), it->second.end());
    }
    Phase ph = expandPhase(p, succ, region, parallel, s, seeds);
    // Trailing barriers with no region successors produce a degenerate phase;
    // drop it, the barrier already belongs to the phase it terminates.
    bool degenerate = ph.end.empty() && ph.nodes == std::set<NodeId>(s.begin(), s.end());
    if (!ph.end.empty() && done.insert(ph.end).second) work.push_back(ph.end);
    if (!degenerate) phases.insert(std::move(ph));
  }
}

// Shared locations written on some flush-free control path ending at f
// (backward), or read on some flush-free path starting after f (forward).
// Barriers act as implicit flushes and block the sweep.
std::set<std::string> flushFreeSweep(const Program& p, const Adj& adj, NodeId f,
                                     const std::set<std::string>& addrTaken,
                                     bool reads) {
  std::set<std::string> out;
  std::set<NodeId> seen;
  std::deque<NodeId> work;
  if (auto it = adj.find(f); it != adj.end()) {
    for (NodeId m : it->second)
      if (seen.insert(m).second) work.push_back(m);
  }
  while (!work.empty()) {
    NodeId n = work.front();
    work.pop_front();
    NodeKind k = p.node(n).kind;
    if (k == NodeKind::Flush || k == NodeKind::Barrier) continue;
    std::set<std::string> acc = reads ? p.readSet(n, addrTaken) : p.writeSet(n, addrTaken);
    for (const std::string& v : acc) {
      if (p.isShared(v)) out.insert(v);
    }
    if (auto it = adj.find(n); it != adj.end()) {
      for (NodeId m : it->second)
        if (seen.insert(m).second) work.push_back(m);
    }
  }
  return out;
}

}  // namespace

std::set<const Phase*> PhaseInfo::phasesOf(NodeId n) const {
  std::set<const Phase*> out;
  for (const Phase& ph : phases) {
    if (ph.nodes.count(n)) out.insert(&ph);
  }
  return out;
}

bool PhaseInfo::sharePhase(NodeId a, NodeId b) const {
  for (const Phase& ph : phases) {
    if (ph.nodes.count(a) && ph.nodes.count(b)) return true;
  }
  return false;
}

std::set<NodeId> PhaseInfo::siblings(NodeId barrier) const {
  std::set<NodeId> out;
  for (const SyncSet& s : syncSets) {
    if (s.count(barrier)) out.insert(s.begin(), s.end());
  }
  out.erase(barrier);
  return out;
}

std::set<std::pair<NodeId, NodeId>> PhaseInfo::interTaskPairs() const {
  std::set<std::pair<NodeId, NodeId>> out;
  for (const InterTaskEdge& e : interTask) out.insert({e.from, e.to});
  return out;
}

std::string PhaseInfo::toJson() const {
  nlohmann::json j;
  j["phases"] = nlohmann::json::array();
  for (const Phase& ph : phases) {
    nlohmann::json p;
    p["region"] = ph.region;
    p["start"] = ph.start;
    p["end"] = ph.end;
    p["nodes"] = ph.nodes;
    j["phases"].push_back(p);
  }
  j["syncSets"] = nlohmann::json::array();
  for (const SyncSet& s : syncSets) j["syncSets"].push_back(s);
  j["interTask"] = nlohmann::json::array();
  for (const InterTaskEdge& e : interTask) {
    j["interTask"].push_back({{"from", e.from}, {"to", e.to}, {"vars", e.vars}});
  }
  return j.dump(2);
}

std::string PhaseInfo::toDot(const Program& p) const {
  std::string out = "digraph phases {\n";
  int i = 0;
  for (const Phase& ph : phases) {
    out += "  subgraph cluster_" + std::to_string(i++) + " {\n    label=\"region " +
           std::to_string(ph.region) + "\";\n";
    for (NodeId n : ph.nodes) {
      out += "    n" + std::to_string(n) + " [label=\"" + std::to_string(n) + ":" +
             kindName(p.node(n).kind) + "\"];\n";
    }
    out += "  }\n";
  }
  for (const InterTaskEdge& e : interTask) {
    out += "  n" + std::to_string(e.from) + " -> n" + std::to_string(e.to) +
           " [style=dashed];\n";
  }
  out += "}\n";
  return out;
}

PhaseInfo computePhases(const Program& p, const Supergraph& g) {
  PhaseInfo info;
  Adj succ, pred;
  buildControlAdj(g, succ, pred);

  for (const auto& [id, n] : p.nodes) {
    if (n.kind == NodeKind::Parallel && g.nodes().count(id)) {
      computeRegionPhases(p, succ, id, info.phases);
    }
  }
  for (const Phase& ph : info.phases) {
    if (!ph.start.empty()) info.syncSets.insert(ph.start);
    if (!ph.end.empty()) info.syncSets.insert(ph.end);
  }

  // Inter-task edges: flush pairs sharing a phase, with a shared variable
  // written on a flush-free path into the source and read on a flush-free
  // path out of the destination.
  std::set<std::string> addrTaken = p.addressTakenLocations();
  std::vector<NodeId> flushes;
  for (const auto& [id, n] : p.nodes) {
    if (n.kind == NodeKind::Flush && !info.phasesOf(id).empty()) flushes.push_back(id);
  }
  std::map<NodeId, std::set<std::string>> writesBefore, readsAfter;
  for (NodeId f : flushes) {
    writesBefore[f] = flushFreeSweep(p, pred, f, addrTaken, /*reads=*/false);
    readsAfter[f] = flushFreeSweep(p, succ, f, addrTaken, /*reads=*/true);
  }
  for (NodeId f1 : flushes) {
    for (NodeId f2 : flushes) {
      if (!info.sharePhase(f1, f2)) continue;
      std::set<std::string> vars;
      std::set_intersection(writesBefore[f1].begin(), writesBefore[f1].end(),
                            readsAfter[f2].begin(), readsAfter[f2].end(),
                            std::inserter(vars, vars.begin()));
      if (!vars.empty()) info.interTask.insert({f1, f2, std::move(vars)});
    }
  }
  return info;
}

void PhaseAnalysis::computeAll(const Program& p, const Supergraph& g) {
  info_ = computePhases(p, g);
}

std::set<NodeId> PhaseAnalysis::stabilizeOnChange(const Program& p, const Supergraph& g,
                                                  bool structural) {
  PhaseInfo old = std::move(info_);
  info_ = computePhases(p, g);
  std::set<NodeId> resynced;
  if (!structural) return resynced;  // sync sets cannot have changed
  std::set<NodeId> barriers;
  for (const SyncSet& s : old.syncSets) barriers.insert(s.begin(), s.end());
  for (const SyncSet& s : info_.syncSets) barriers.insert(s.begin(), s.end());
  for (NodeId b : barriers) {
    if (!p.has(b)) continue;
    if (old.siblings(b) != info_.siblings(b)) resynced.insert(b);
  }
  return resynced;
}

}  // namespace homeo

#include "homeo/hidfa.hpp"

#include <algorithm>
#include <functional>

namespace homeo {
namespace {

bool isSharedLoc(const std::string& loc) { return loc.find("::") == std::string::npos; }

bool exprHasDeref(const Expr& e) {
  if (e.k == Expr::K::Deref) return true;
  for (const Expr& k : e.kids) {
    if (exprHasDeref(k)) return true;
  }
  return false;
}

bool nodeHasDeref(const ProgramNode& n) {
  if (n.derefLhs) return true;
  return exprHasDeref(n.cond) || exprHasDeref(n.rhs);
}

void collectDerefNames(const Expr& e, std::set<std::string>& out) {
  if (e.k == Expr::K::Deref) out.insert(e.name);
  for (const Expr& k : e.kids) collectDerefNames(k, out);
}

std::set<std::string> nodeDerefNames(const ProgramNode& n) {
  std::set<std::string> names;
  if (n.derefLhs) names.insert(n.lhs);
  collectDerefNames(n.cond, names);
  collectDerefNames(n.rhs, names);
  return names;
}

using FactMap = std::map<std::string, std::set<std::string>>;

FactMap filterShared(const FactMap& m,
                     const std::function<bool(const std::string&, const std::set<std::string>&)>& pred) {
  FactMap out;
  for (const auto& [k, v] : m) {
    if (pred(k, v)) out.emplace(k, v);
  }
  return out;
}

}  // namespace

DataflowAnalysis::DataflowAnalysis(std::string name, Direction dir, MeetOp meet, Session& s)
    : Analysis(std::move(name)), session_(s), dir_(dir), meet_(meet) {}

bool DataflowAnalysis::entryIsShared(const std::string& key,
                                     const std::set<std::string>&) const {
  return isSharedLoc(key);
}

std::string DataflowAnalysis::locate(NodeId n, const std::string& name) const {
  return prog().location(prog().functionOf(n), name);
}

Facts DataflowAnalysis::meetMaps(const Facts& a, const Facts& b) const {
  if (!a) return b;
  if (!b) return a;
  FactMap out;
  if (meet_ == MeetOp::Union) {
    out = *a;
    for (const auto& [k, v] : *b) out[k].insert(v.begin(), v.end());
  } else {
    for (const auto& [k, v] : *a) {
      auto it = b->find(k);
      if (it == b->end()) continue;
      std::set<std::string> both;
      std::set_intersection(v.begin(), v.end(), it->second.begin(), it->second.end(),
                            std::inserter(both, both.begin()));
      if (!both.empty()) out.emplace(k, std::move(both));
    }
  }
  return out;
}

DataflowAnalysis::Indices DataflowAnalysis::buildIndices() const {
  Indices ix;
  const Supergraph& g = session_.graph();
  const Program& p = prog();
  bool fwd = dir_ == Direction::Forward;

  for (const Edge& e : g.edges()) {
    if (e.kind == EdgeKind::InterTask) continue;
    NodeId from = fwd ? e.src : e.dst;
    NodeId to = fwd ? e.dst : e.src;
    ix.pred[to].push_back(from);
    ix.notifySucc[from].push_back(to);
  }
  for (const InterTaskEdge& e : session_.phaseInfo().interTask) {
    NodeId from = fwd ? e.from : e.to;
    NodeId to = fwd ? e.to : e.from;
    ix.ext1[to].push_back({from, e.vars});
    ix.notifySucc[from].push_back(to);
  }
  for (auto& [n, v] : ix.pred) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  for (auto& [n, v] : ix.notifySucc) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  for (const SyncSet& s : session_.phaseInfo().syncSets) {
    for (NodeId b : s) {
      if (!g.nodes().count(b)) continue;
      for (NodeId m : s) {
        if (g.nodes().count(m)) ix.syncMates[b].insert(m);
      }
    }
  }

  // SCC condensation over the direction-adjusted flow relation. Sync-set
  // mates are coupled both ways (a barrier's out depends on its mates' in),
  // so they land in one component and the topological sweep stays valid.
  std::map<NodeId, std::vector<NodeId>> adj;
  for (const auto& [n, v] : ix.notifySucc) adj[n] = v;
  for (const auto& [b, mates] : ix.syncMates) {
    for (NodeId m : mates) {
      if (m != b) adj[b].push_back(m);
    }
  }
  ix.scc = computeSccIndex(g.nodes(), adj);
  for (const auto& [n, s] : ix.scc.sccOf) ix.sccMembers[s].push_back(n);
  for (auto& [s, mem] : ix.sccMembers) {
    std::sort(mem.begin(), mem.end(), [&](NodeId a, NodeId b) {
      return ix.scc.withinOrder.at(a) < ix.scc.withinOrder.at(b);
    });
  }

  const Function& entryFn = p.functions.at(p.entryFunction);
  ix.boundary = fwd ? entryFn.entry : entryFn.exit;
  return ix;
}

std::pair<bool, bool> DataflowAnalysis::processNode(
    NodeId n, const Indices& ix, std::map<NodeId, std::pair<Facts, Facts>>& facts,
    int curScc, const std::set<NodeId>* firstPass) {
  auto valid = [&](NodeId src) {
    if (!firstPass) return true;
    auto it = ix.scc.sccOf.find(src);
    int s = it == ix.scc.sccOf.end() ? -1 : it->second;
    return s != curScc || firstPass->count(src) != 0;
  };
  auto outOf = [&](NodeId m) -> const Facts& {
    static const Facts kTop;
    auto it = facts.find(m);
    return it == facts.end() ? kTop : it->second.second;
  };
  auto inOf = [&](NodeId m) -> const Facts& {
    static const Facts kTop;
    auto it = facts.find(m);
    return it == facts.end() ? kTop : it->second.first;
  };

  Facts in;
  if (auto it = ix.pred.find(n); it != ix.pred.end()) {
    for (NodeId p : it->second) {
      if (valid(p)) in = meetMaps(in, outOf(p));
    }
  }
  if (n == ix.boundary) in = meetMaps(in, Facts(FactMap{}));

  // Ext-1: keywise meet of communicated shared variables along inter-task
  // edges; applies only when the node is reachable.
  if (in.has_value()) {
    if (auto it = ix.ext1.find(n); it != ix.ext1.end()) {
      for (const auto& [src, vars] : it->second) {
        if (!valid(src)) continue;
        const Facts& srcOut = outOf(src);
        if (!srcOut) continue;
        for (const std::string& x : vars) {
          auto sv = srcOut->find(x);
          std::set<std::string> sset = sv == srcOut->end() ? std::set<std::string>{} : sv->second;
          auto dv = in->find(x);
          std::set<std::string> dset = dv == in->end() ? std::set<std::string>{} : dv->second;
          std::set<std::string> merged;
          if (meet_ == MeetOp::Union) {
            merged = dset;
            merged.insert(sset.begin(), sset.end());
          } else {
            std::set_intersection(dset.begin(), dset.end(), sset.begin(), sset.end(),
                                  std::inserter(merged, merged.begin()));
          }
          if (merged.empty()) in->erase(x);
          else (*in)[x] = std::move(merged);
        }
      }
    }
  }

  if (counting_) counters().transferApplications++;
  Facts out = in.has_value() ? transfer(n, in) : Facts{};

  // Ext-2: a barrier's shared facts are the meet over its synchronization
  // set; the private part flows through unchanged.
  if (out.has_value() && prog().has(n) && prog().node(n).kind == NodeKind::Barrier) {
    if (auto it = ix.syncMates.find(n); it != ix.syncMates.end()) {
      auto pred = [&](const std::string& k, const std::set<std::string>& v) {
        return entryIsShared(k, v);
      };
      Facts sharedMeet;
      for (NodeId m : ix.syncMates.at(n)) {
        if (m != n && !valid(m)) continue;
        const Facts& mi = m == n ? in : inOf(m);
        if (!mi) continue;
        sharedMeet = meetMaps(sharedMeet, Facts(filterShared(*mi, pred)));
      }
      for (auto fit = out->begin(); fit != out->end();) {
        fit = pred(fit->first, fit->second) ? out->erase(fit) : std::next(fit);
      }
      if (sharedMeet) {
        for (auto& [k, v] : *sharedMeet) (*out)[k] = std::move(v);
      }
    }
  }

  if (&facts == &facts_ && usesPointerOracle() && prog().has(n) && nodeHasDeref(prog().node(n))) {
    oracleMemo_[n] = oracleSlice(n);
  }

  auto& slot = facts[n];
  bool inChanged = slot.first != in;
  bool outChanged = slot.second != out;
  slot.first = std::move(in);
  slot.second = std::move(out);
  return {inChanged, outChanged};
}

void DataflowAnalysis::solve(const Indices& ix,
                             std::map<NodeId, std::pair<Facts, Facts>>& facts,
                             const std::set<NodeId>& seeds, bool countWork) {
  using Key = std::tuple<int, int, NodeId>;
  std::set<Key> work;
  auto key = [&](NodeId n) -> Key {
    auto s = ix.scc.sccOf.find(n);
    auto w = ix.scc.withinOrder.find(n);
    return {s == ix.scc.sccOf.end() ? 0 : s->second,
            w == ix.scc.withinOrder.end() ? 0 : w->second, n};
  };
  auto push = [&](NodeId n) {
    if (session_.graph().nodes().count(n)) work.insert(key(n));
  };
  for (NodeId n : seeds) push(n);

  size_t budget = (session_.graph().nodes().size() + 8) * (facts.size() + seeds.size() + 64) * 16;
  auto pop = [&](int wantScc, bool any) -> std::optional<NodeId> {
    if (work.empty()) return std::nullopt;
    auto it = work.begin();
    if (!any && std::get<0>(*it) != wantScc) return std::nullopt;
    NodeId n = std::get<2>(*it);
    work.erase(it);
    return n;
  };
  auto afterProcess = [&](NodeId n, std::pair<bool, bool> ch) {
    if (ch.second) {
      if (auto it = ix.notifySucc.find(n); it != ix.notifySucc.end()) {
        for (NodeId m : it->second) push(m);
      }
    }
    if (ch.first) {
      if (auto it = ix.syncMates.find(n); it != ix.syncMates.end()) {
        for (NodeId m : it->second) {
          if (m != n) push(m);
        }
      }
    }
  };

  auto spend = [&] {
    if (budget-- == 0) throw EngineFault("dataflow iteration budget exhausted: " + name_);
    if (countWork) counters().nodesReprocessed++;
  };
  auto hasSelfInput = [&](NodeId n) {
    if (auto it = ix.pred.find(n); it != ix.pred.end()) {
      if (std::find(it->second.begin(), it->second.end(), n) != it->second.end()) return true;
    }
    if (auto it = ix.ext1.find(n); it != ix.ext1.end()) {
      for (const auto& [src, vars] : it->second) {
        if (src == n) return true;
      }
    }
    return false;
  };

  while (!work.empty()) {
    int cur = std::get<0>(*work.begin());
    const std::vector<NodeId>& members = ix.sccMembers.at(cur);
    if (members.size() == 1 && !hasSelfInput(members[0])) {
      NodeId n = *pop(cur, false);
      while (pop(cur, false)) {
      }
      spend();
      afterProcess(n, processNode(n, ix, facts, cur, nullptr));
      continue;
    }
    // A cyclic component is re-solved as a whole. First pass: one sweep in
    // within-component order, ignoring members not yet processed in this
    // pass; this under-approximates every member from inputs of earlier
    // components only. Second pass: standard fixed point with all inputs,
    // which restores exactly the from-scratch solution for the component.
    while (pop(cur, false)) {
    }
    std::set<NodeId> firstPass;
    for (NodeId n : members) {
      spend();
      auto ch = processNode(n, ix, facts, cur, &firstPass);
      firstPass.insert(n);
      afterProcess(n, ch);
    }
    for (NodeId n : members) push(n);
    while (auto n = pop(cur, false)) {
      spend();
      afterProcess(*n, processNode(*n, ix, facts, cur, nullptr));
    }
  }
}

void DataflowAnalysis::compute() {
  Indices ix = buildIndices();
  facts_.clear();
  oracleMemo_.clear();
  counting_ = true;
  solve(ix, facts_, session_.graph().nodes(), /*countWork=*/true);
  counting_ = false;
}

void DataflowAnalysis::handleUpdate(const ElemChange& net) {
  if (net.empty()) return;
  Indices ix = buildIndices();
  bool fwd = dir_ == Direction::Forward;
  const auto& nodes = session_.graph().nodes();

  for (NodeId r : net.removedNodes) facts_.erase(r);

  std::set<NodeId> seeds;
  auto seedNode = [&](NodeId n) {
    if (nodes.count(n)) seeds.insert(n);
  };
  for (const EdgeRec& e : net.removedEdges) seedNode(fwd ? e.dst : e.src);
  for (const EdgeRec& e : net.addedEdges) seedNode(fwd ? e.dst : e.src);
  for (NodeId a : net.addedNodes) {
    seedNode(a);
    if (auto it = ix.notifySucc.find(a); it != ix.notifySucc.end()) {
      for (NodeId m : it->second) seedNode(m);
    }
  }
  for (NodeId b : net.resyncedBarriers) {
    seedNode(b);
    if (auto it = ix.syncMates.find(b); it != ix.syncMates.end()) {
      for (NodeId m : it->second) seedNode(m);
    }
  }
  if (usesPointerOracle()) {
    // Transfers that consult points-to facts can change even when no
    // incident edge did. A dereferencing node needs reprocessing exactly
    // when the oracle slice its last transfer consumed has since changed,
    // so compare against the memoised slice instead of reseeding them all.
    for (NodeId r : net.removedNodes) oracleMemo_.erase(r);
    for (NodeId n : nodes) {
      if (!prog().has(n) || !nodeHasDeref(prog().node(n))) continue;
      auto mit = oracleMemo_.find(n);
      if (mit == oracleMemo_.end() || mit->second != oracleSlice(n)) seeds.insert(n);
    }
  }

  counting_ = true;
  solve(ix, facts_, seeds, /*countWork=*/true);
  counting_ = false;
}

Facts DataflowAnalysis::in(NodeId n) {
  if (!beginQuery()) return std::nullopt;
  auto it = facts_.find(n);
  return it == facts_.end() ? Facts{} : it->second.first;
}

Facts DataflowAnalysis::out(NodeId n) {
  if (!beginQuery()) return std::nullopt;
  auto it = facts_.find(n);
  return it == facts_.end() ? Facts{} : it->second.second;
}

std::map<NodeId, std::pair<Facts, Facts>> DataflowAnalysis::computeFullSnapshot() {
  // Naive round-robin sweeps to a fixed point; deliberately different
  // iteration strategy from solve() so it can serve as an oracle.
  Indices ix = buildIndices();
  std::map<NodeId, std::pair<Facts, Facts>> facts;
  const auto& nodes = session_.graph().nodes();
  size_t sweeps = 0;
  bool changed = true;
  while (changed) {
    if (++sweeps > nodes.size() + 64) {
      throw EngineFault("full-solve sweep budget exhausted: " + name_);
    }
    changed = false;
    for (NodeId n : nodes) {
      auto ch = processNode(n, ix, facts, 0, nullptr);
      changed = changed || ch.first || ch.second;
    }
  }
  return facts;
}

std::map<NodeId, std::pair<Facts, Facts>> DataflowAnalysis::snapshotFacts() {
  std::map<NodeId, std::pair<Facts, Facts>> out;
  for (NodeId n : session_.graph().nodes()) {
    out[n] = {in(n), this->out(n)};
  }
  return out;
}

std::string DataflowAnalysis::dump() {
  std::string s = name_ + "\n";
  auto emit = [&s](const Facts& f) {
    if (!f) {
      s += " T";
      return;
    }
    for (const auto& [k, v] : *f) {
      s += " " + k + "={";
      bool first = true;
      for (const std::string& x : v) {
        if (!first) s += ",";
        first = false;
        s += x;
      }
      s += "}";
    }
  };
  for (NodeId n : session_.graph().nodes()) {
    Facts i = in(n), o = out(n);
    s += "n" + std::to_string(n) + " in:";
    emit(i);
    s += " out:";
    emit(o);
    s += "\n";
  }
  return s;
}

namespace {

class PointsTo final : public DataflowAnalysis {
 public:
  explicit PointsTo(Session& s)
      : DataflowAnalysis("pta", Direction::Forward, MeetOp::Union, s) {}

 protected:
  Facts transfer(NodeId id, const Facts& input) override {
    FactMap m = *input;
    const ProgramNode& n = prog().node(id);
    if (n.kind == NodeKind::Decl) {
      m.erase(locate(id, n.declName));
      return m;
    }
    if (n.kind != NodeKind::Assign || n.derefLhs) return m;
    std::string dst = locate(id, n.lhs);
    if (n.rhs.k == Expr::K::AddrOf) {
      m[dst] = {locate(id, n.rhs.name)};
    } else if (n.rhs.k == Expr::K::Var) {
      std::string src = locate(id, n.rhs.name);
      auto it = m.find(src);
      if (it == m.end()) m.erase(dst);
      else m[dst] = it->second;
    } else {
      // Arithmetic, literals and loads produce integers, never pointers.
      m.erase(dst);
    }
    return m;
  }
};

// Common helpers for the pointer-consuming analyses.
struct PtaClient {
  DataflowAnalysis* pta;

  std::set<std::string> pointees(Session& s, NodeId id, const std::string& p) {
    Facts f = pta->in(id);
    if (!f) return {};
    auto it = f->find(s.program().location(s.program().functionOf(id), p));
    return it == f->end() ? std::set<std::string>{} : it->second;
  }

  std::map<std::string, std::set<std::string>> sliceAt(Session& s, NodeId id) {
    std::map<std::string, std::set<std::string>> out;
    for (const std::string& p : nodeDerefNames(s.program().node(id))) {
      out[p] = pointees(s, id, p);
    }
    return out;
  }
};

class ReachingDefs final : public DataflowAnalysis, PtaClient {
 public:
  ReachingDefs(Session& s, DataflowAnalysis* pta)
      : DataflowAnalysis("rd", Direction::Forward, MeetOp::Union, s), PtaClient{pta},
        session2_(s) {}

 protected:
  bool usesPointerOracle() const override { return true; }
  std::map<std::string, std::set<std::string>> oracleSlice(NodeId id) override {
    return sliceAt(session2_, id);
  }

  Facts transfer(NodeId id, const Facts& input) override {
    FactMap m = *input;
    const ProgramNode& n = prog().node(id);
    std::set<std::string> writes;
    bool definite = false;
    if (n.kind == NodeKind::Decl) {
      writes = {locate(id, n.declName)};
      definite = true;
    } else if (n.kind == NodeKind::Assign) {
      if (n.derefLhs) {
        writes = pointees(session2_, id, n.lhs);
        definite = writes.size() == 1;
      } else {
        writes = {locate(id, n.lhs)};
        definite = true;
      }
    } else {
      return m;
    }
    std::string tok = std::to_string(id);
    for (const std::string& w : writes) {
      if (definite) m[w] = {tok};
      else m[w].insert(tok);
    }
    return m;
  }

 private:
  Session& session2_;
};

class Liveness final : public DataflowAnalysis, PtaClient {
 public:
  Liveness(Session& s, DataflowAnalysis* pta)
      : DataflowAnalysis("lv", Direction::Backward, MeetOp::Union, s), PtaClient{pta},
        session2_(s) {}

 protected:
  bool usesPointerOracle() const override { return true; }
  std::map<std::string, std::set<std::string>> oracleSlice(NodeId id) override {
    return sliceAt(session2_, id);
  }

  Facts transfer(NodeId id, const Facts& input) override {
    FactMap m = *input;  // live after (in flow direction: facts before the node)
    const ProgramNode& n = prog().node(id);
    std::set<std::string> kill, gen;
    switch (n.kind) {
      case NodeKind::Decl:
        kill.insert(locate(id, n.declName));
        break;
      case NodeKind::Assign: {
        if (n.derefLhs) {
          auto pts = pointees(session2_, id, n.lhs);
          if (pts.size() == 1) kill.insert(*pts.begin());
          gen.insert(locate(id, n.lhs));
        } else {
          kill.insert(locate(id, n.lhs));
        }
        std::set<std::string> reads;
        n.rhs.readVars(reads);
        for (const std::string& v : reads) gen.insert(locate(id, v));
        if (n.rhs.k == Expr::K::Deref) {
          for (const std::string& t : pointees(session2_, id, n.rhs.name)) gen.insert(t);
        }
        break;
      }
      case NodeKind::If:
      case NodeKind::While: {
        std::set<std::string> reads;
        n.cond.readVars(reads);
        for (const std::string& v : reads) gen.insert(locate(id, v));
        break;
      }
      default:
        return m;
    }
    for (const std::string& k : kill) m.erase(k);
    for (const std::string& g : gen) m[g] = {"*"};
    return m;
  }

 private:
  Session& session2_;
};

class CopyProp final : public DataflowAnalysis, PtaClient {
 public:
  CopyProp(Session& s, DataflowAnalysis* pta)
      : DataflowAnalysis("cp", Direction::Forward, MeetOp::Intersect, s), PtaClient{pta},
        session2_(s) {}

 protected:
  bool usesPointerOracle() const override { return true; }
  std::map<std::string, std::set<std::string>> oracleSlice(NodeId id) override {
    return sliceAt(session2_, id);
  }

  bool entryIsShared(const std::string& key, const std::set<std::string>& vals) const override {
    if (isSharedLoc(key)) return true;
    for (const std::string& v : vals) {
      if (isSharedLoc(v)) return true;
    }
    return false;
  }

  Facts transfer(NodeId id, const Facts& input) override {
    FactMap m = *input;
    const ProgramNode& n = prog().node(id);
    auto killLoc = [&m](const std::string& loc) {
      m.erase(loc);
      for (auto it = m.begin(); it != m.end();) {
        it->second.erase(loc);
        it = it->second.empty() ? m.erase(it) : std::next(it);
      }
    };
    if (n.kind == NodeKind::Decl) {
      killLoc(locate(id, n.declName));
      return m;
    }
    if (n.kind != NodeKind::Assign) return m;
    if (n.derefLhs) {
      for (const std::string& t : pointees(session2_, id, n.lhs)) killLoc(t);
      return m;
    }
    std::string dst = locate(id, n.lhs);
    killLoc(dst);
    if (n.rhs.k == Expr::K::Var) {
      std::string src = locate(id, n.rhs.name);
      if (src != dst) m[dst] = {src};
    }
    return m;
  }

 private:
  Session& session2_;
};

}  // namespace

std::unique_ptr<DataflowAnalysis> makePointsTo(Session& s) {
  return std::make_unique<PointsTo>(s);
}
std::unique_ptr<DataflowAnalysis> makeReachingDefs(Session& s, DataflowAnalysis* pta) {
  return std::make_unique<ReachingDefs>(s, pta);
}
std::unique_ptr<DataflowAnalysis> makeLiveness(Session& s, DataflowAnalysis* pta) {
  return std::make_unique<Liveness>(s, pta);
}
std::unique_ptr<DataflowAnalysis> makeCopyProp(Session& s, DataflowAnalysis* pta) {
  return std::make_unique<CopyProp>(s, pta);
}

}  // namespace homeo

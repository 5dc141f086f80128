#include "homeo/barrelim.hpp"

#include <algorithm>
#include <optional>

namespace homeo {
namespace {

struct Site {
  NodeId block = 0;
  size_t index = 0;
};

// Block and index holding a directly attached statement.
std::optional<Site> siteOf(const Program& p, NodeId stmt) {
  NodeId parent = p.node(stmt).parent;
  if (parent == 0 || p.node(parent).kind != NodeKind::Block) return std::nullopt;
  const auto& stmts = p.node(parent).stmts;
  for (size_t i = 0; i < stmts.size(); ++i) {
    if (stmts[i] == stmt) return Site{parent, i};
  }
  return std::nullopt;
}

bool attachedToFunction(const Program& p, NodeId n) { return !p.functionOf(n).empty(); }

std::set<std::string> sharedOnly(const Program& p, const std::set<std::string>& locs) {
  std::set<std::string> out;
  for (const std::string& l : locs) {
    if (p.isShared(l)) out.insert(l);
  }
  return out;
}

// --- redundant barrier removal -------------------------------------------

// The barrier-free segments around b, straight from phase structure: phases
// ending at b precede it, phases starting at b follow it.
void segmentsAround(const PhaseInfo& info, NodeId b, std::set<NodeId>& before,
                    std::set<NodeId>& after) {
  for (const Phase& ph : info.phases) {
    if (ph.end.count(b)) before.insert(ph.nodes.begin(), ph.nodes.end());
    if (ph.start.count(b)) after.insert(ph.nodes.begin(), ph.nodes.end());
  }
}

bool removeOneRedundantBarrier(BarrElimContext& ctx) {
  Program& p = ctx.session.program();
  const PhaseInfo& info = ctx.session.phaseInfo();
  std::set<std::string> addrTaken = p.addressTakenLocations();

  for (NodeId b : ctx.session.graph().nodes()) {
    if (p.node(b).kind != NodeKind::Barrier) continue;
    auto site = siteOf(p, b);
    if (!site) continue;
    // Boundary barriers delimit the region itself; they are not candidates
    // (fork and join already synchronize there, and merging depends on them).
    NodeId owner = p.node(site->block).parent;
    const auto& siblings = p.node(site->block).stmts;
    if (owner != 0 && p.node(owner).kind == NodeKind::Parallel &&
        (site->index == 0 || site->index + 1 == siblings.size())) {
      continue;
    }

    std::set<NodeId> segBefore, segAfter;
    segmentsAround(info, b, segBefore, segAfter);

    std::set<std::string> writesBeforeSyn, readsBefore, writesAfter, readsLaterSyn;
    for (NodeId n : segBefore) {
      if (n == b || !p.has(n)) continue;
      auto r = sharedOnly(p, p.readSet(n, addrTaken));
      readsBefore.insert(r.begin(), r.end());
      auto w = sharedOnly(p, p.writeSet(n, addrTaken));
      writesBeforeSyn.insert(w.begin(), w.end());
    }
    for (NodeId n : segAfter) {
      if (n == b || !p.has(n)) continue;
      auto w = sharedOnly(p, p.writeSet(n, addrTaken));
      writesAfter.insert(w.begin(), w.end());
    }
    // Liveness past b can reach well beyond the next segment, so the
    // syntactic consumer set takes every read outside the preceding segment.
    for (NodeId n : ctx.session.graph().nodes()) {
      if (n == b || segBefore.count(n) || !p.has(n)) continue;
      auto r = sharedOnly(p, p.readSet(n, addrTaken));
      readsLaterSyn.insert(r.begin(), r.end());
    }

    auto intersects = [](const std::set<std::string>& a, const std::set<std::string>& c) {
      return std::any_of(a.begin(), a.end(),
                         [&c](const std::string& x) { return c.count(x) != 0; });
    };
    // b synchronizes something when a value written on one side is consumed
    // or overwritten on the other; otherwise it is redundant. The syntactic
    // sets conservatively settle the common conflicted cases without touching
    // any analysis getter; only survivors pay for the precise check.
    if (intersects(writesBeforeSyn, readsLaterSyn) ||
        intersects(writesBeforeSyn, writesAfter) ||
        intersects(readsBefore, writesAfter)) {
      continue;
    }

    // Shared variables with a reaching definition from the segment before b.
    // Without a syntactic write in the segment there is nothing to reach, so
    // the reaching-definitions facts are only consulted when one exists.
    std::set<std::string> writesBefore;
    Facts rdIn = writesBeforeSyn.empty() ? Facts{} : ctx.rd.in(b);
    if (rdIn) {
      for (const auto& [loc, defs] : *rdIn) {
        if (!p.isShared(loc)) continue;
        for (const std::string& tok : defs) {
          NodeId def = std::stoi(tok);
          if (segBefore.count(def)) {
            writesBefore.insert(loc);
            break;
          }
        }
      }
    }
    bool conflict = intersects(writesBefore, writesAfter) ||
                    intersects(readsBefore, writesAfter);
    if (!conflict && !writesBefore.empty()) {
      // Liveness is only decisive for values actually written before b.
      std::set<std::string> readsAfterLive;
      Facts lvAfter = ctx.lv.in(b);  // backward analysis: facts past the node
      if (lvAfter) {
        for (const auto& [loc, marks] : *lvAfter) {
          if (p.isShared(loc)) readsAfterLive.insert(loc);
        }
      }
      conflict = intersects(writesBefore, readsAfterLive);
    }
    if (conflict) continue;

    ctx.session.removeAt(site->block, site->index);
    return true;
  }
  return false;
}

// --- merging adjacent parallel regions ------------------------------------

// Statements safe to pull into a merged region: straight-line writes to
// non-escaping private storage. After the first region's closing barrier all
// threads observe the same state, so executing them per thread is equivalent.
bool neutralBetweenRegions(const Program& p, NodeId n, const std::set<std::string>& addrTaken) {
  const ProgramNode& s = p.node(n);
  if (s.kind == NodeKind::Decl) return !s.sharedDecl;
  if (s.kind != NodeKind::Assign || s.derefLhs) return false;
  if (p.isShared(s.lhs)) return false;
  std::string loc = p.location(p.functionOf(n), s.lhs);
  if (addrTaken.count(loc)) return false;
  std::set<std::string> esc;
  s.rhs.addressTaken(esc);
  return esc.empty();
}

bool regionEndsWithBarrier(const Program& p, NodeId parallel, bool atStart) {
  const auto& stmts = p.node(p.node(parallel).body).stmts;
  if (stmts.empty()) return false;
  NodeId edge = atStart ? stmts.front() : stmts.back();
  return p.node(edge).kind == NodeKind::Barrier;
}

bool mergeOneAdjacentPair(BarrElimContext& ctx) {
  Program& p = ctx.session.program();
  std::set<std::string> addrTaken = p.addressTakenLocations();

  for (const auto& [blkId, blk] : p.nodes) {
    if (blk.kind != NodeKind::Block || !attachedToFunction(p, blkId)) continue;
    const auto& stmts = blk.stmts;
    for (size_t i = 0; i < stmts.size(); ++i) {
      if (p.node(stmts[i]).kind != NodeKind::Parallel) continue;
      for (size_t j = i + 1; j < stmts.size(); ++j) {
        NodeId cand = stmts[j];
        if (p.node(cand).kind == NodeKind::Parallel) {
          if (!regionEndsWithBarrier(p, stmts[i], false) ||
              !regionEndsWithBarrier(p, cand, true)) {
            break;
          }
          std::vector<NodeId> merged;
          for (NodeId s : p.node(p.node(stmts[i]).body).stmts) {
            merged.push_back(p.cloneSubtree(s));
          }
          for (size_t k = i + 1; k < j; ++k) merged.push_back(p.cloneSubtree(stmts[k]));
          for (NodeId s : p.node(p.node(cand).body).stmts) {
            merged.push_back(p.cloneSubtree(s));
          }
          NodeId body = detachedBlock(p, merged);
          NodeId region = detachedParallel(p, body);
          for (size_t k = j; k > i; --k) ctx.session.removeAt(blkId, k);
          ctx.session.replaceAt(blkId, i, region);
          return true;
        }
        if (!neutralBetweenRegions(p, cand, addrTaken)) break;
      }
    }
  }
  return false;
}

// --- inlining calls that hide barriers ------------------------------------

std::set<std::string> recursiveFunctions(const Program& p) {
  std::map<std::string, std::set<std::string>> calls;
  for (const auto& [name, fn] : p.functions) {
    for (NodeId n : p.subtree(fn.body)) {
      if (p.node(n).kind == NodeKind::Call) calls[name].insert(p.node(n).callee);
    }
  }
  std::set<std::string> out;
  for (const auto& [root, direct] : calls) {
    std::set<std::string> seen;
    std::vector<std::string> work(direct.begin(), direct.end());
    while (!work.empty()) {
      std::string f = work.back();
      work.pop_back();
      if (f == root) {
        out.insert(root);
        break;
      }
      if (!seen.insert(f).second) continue;
      auto it = calls.find(f);
      if (it != calls.end()) work.insert(work.end(), it->second.begin(), it->second.end());
    }
  }
  return out;
}

bool subtreeHas(const Program& p, NodeId root, NodeKind k) {
  for (NodeId n : p.subtree(root)) {
    if (p.node(n).kind == k) return true;
  }
  return false;
}

void collectNames(const Expr& e, std::set<std::string>& out) {
  if (!e.name.empty()) out.insert(e.name);
  for (const Expr& kid : e.kids) collectNames(kid, out);
}

bool inlineOneCall(BarrElimContext& ctx) {
  Program& p = ctx.session.program();
  std::set<std::string> recursive = recursiveFunctions(p);

  for (NodeId c : ctx.session.graph().nodes()) {
    if (p.node(c).kind != NodeKind::Call) continue;
    auto site = siteOf(p, c);
    if (!site) continue;
    const std::string& callee = p.node(c).callee;
    if (recursive.count(callee)) continue;
    auto fit = p.functions.find(callee);
    if (fit == p.functions.end()) continue;
    NodeId body = fit->second.body;
    if (!subtreeHas(p, body, NodeKind::Barrier)) continue;
    if (subtreeHas(p, body, NodeKind::Return)) continue;

    std::map<std::string, std::string> rename;
    std::set<std::string> names;
    for (NodeId n : p.subtree(body)) {
      const ProgramNode& s = p.node(n);
      if (!s.declName.empty()) names.insert(s.declName);
      if (!s.lhs.empty()) names.insert(s.lhs);
      collectNames(s.cond, names);
      collectNames(s.rhs, names);
    }
    for (const std::string& n : names) {
      if (!p.isShared(n)) rename[n] = callee + "__" + std::to_string(c) + "_" + n;
    }

    std::vector<NodeId> clones;
    for (NodeId s : p.node(body).stmts) clones.push_back(p.cloneSubtree(s, rename));
    for (size_t k = 0; k < clones.size(); ++k) {
      ctx.session.insertAt(site->block, site->index + 1 + k, clones[k]);
    }
    ctx.session.removeAt(site->block, site->index);
    return true;
  }
  return false;
}

}  // namespace

OptReport runBarrElim(BarrElimContext ctx) {
  OptReport rep;
  for (int r = 0; r < ctx.maxRounds; ++r) {
    rep.rounds++;
    if (ctx.changePoint) ctx.changePoint("inspect");
    if (removeOneRedundantBarrier(ctx)) {
      rep.barriersRemoved++;
      continue;
    }
    if (mergeOneAdjacentPair(ctx)) {
      rep.regionsMerged++;
      continue;
    }
    if (inlineOneCall(ctx)) {
      rep.callsInlined++;
      continue;
    }
    break;
  }
  return rep;
}

}  // namespace homeo

#include "homeo/session.hpp"

#include <algorithm>

namespace homeo {

Session::Session(Program p, Mode mode, bool strictRp)
    : p_(std::move(p)), stab_(mode, log_, strictRp) {
  g_.rebuild(p_);
  phase_.computeAll(p_, g_);
  g_.setInterTaskEdges(phase_.info().interTaskPairs());
}

Session::Snapshot Session::snapshot() const {
  Snapshot s;
  s.nodes = g_.nodes();
  for (const Edge& e : g_.edges()) {
    if (e.kind == EdgeKind::InterTask) continue;
    s.edges.insert({e.src, e.dst, e.kind, {}});
  }
  for (const InterTaskEdge& e : phase_.info().interTask) {
    s.edges.insert({e.from, e.to, EdgeKind::InterTask, e.vars});
  }
  return s;
}

void Session::checkBlockIndex(NodeId block, size_t idx, bool forInsert) const {
  if (!p_.has(block) || p_.node(block).kind != NodeKind::Block) {
    throw IrError("transformation target is not a block");
  }
  size_t n = p_.node(block).stmts.size();
  if (idx > n || (!forInsert && idx == n)) {
    throw IrError("statement index out of range");
  }
}

void Session::checkPayload(NodeId payload, bool mustBeBlock) const {
  if (!p_.has(payload)) throw IrError("payload does not exist");
  const ProgramNode& n = p_.node(payload);
  if (n.parent != 0) throw IrError("payload is attached elsewhere");
  for (const auto& [name, fn] : p_.functions) {
    if (fn.body == payload || fn.entry == payload || fn.exit == payload) {
      throw IrError("payload is attached elsewhere");
    }
  }
  bool isBlock = n.kind == NodeKind::Block;
  if (isBlock != mustBeBlock) {
    throw IrError(mustBeBlock ? "slot payload must be a block"
                              : "statement payload must not be a bare block");
  }
  if (n.kind == NodeKind::Entry || n.kind == NodeKind::Exit) {
    throw IrError("entry/exit nodes cannot be inserted");
  }
}

bool Session::subtreeIsStructural(NodeId root) const {
  for (NodeId n : p_.subtree(root)) {
    NodeKind k = p_.node(n).kind;
    if (k == NodeKind::Barrier || k == NodeKind::Parallel) return true;
  }
  return false;
}

void Session::finish(const Snapshot& before, bool structural) {
  g_.rebuild(p_);
  std::set<NodeId> resynced = phase_.stabilizeOnChange(p_, g_, structural);
  g_.setInterTaskEdges(phase_.info().interTaskPairs());
  Snapshot after = snapshot();

  ElemChange c;
  c.resyncedBarriers = std::move(resynced);
  std::set_difference(after.nodes.begin(), after.nodes.end(), before.nodes.begin(),
                      before.nodes.end(), std::inserter(c.addedNodes, c.addedNodes.begin()));
  std::set_difference(before.nodes.begin(), before.nodes.end(), after.nodes.begin(),
                      after.nodes.end(), std::inserter(c.removedNodes, c.removedNodes.begin()));
  std::set_difference(after.edges.begin(), after.edges.end(), before.edges.begin(),
                      before.edges.end(), std::inserter(c.addedEdges, c.addedEdges.begin()));
  std::set_difference(before.edges.begin(), before.edges.end(), after.edges.begin(),
                      after.edges.end(), std::inserter(c.removedEdges, c.removedEdges.begin()));
  log_.append(std::move(c));
  stab_.notify();
}

void Session::insertAt(NodeId block, size_t idx, NodeId payload) {
  checkBlockIndex(block, idx, /*forInsert=*/true);
  checkPayload(payload, /*mustBeBlock=*/false);
  bool structural = subtreeIsStructural(payload);
  Snapshot before = snapshot();
  auto& stmts = p_.node(block).stmts;
  stmts.insert(stmts.begin() + static_cast<long>(idx), payload);
  p_.node(payload).parent = block;
  finish(before, structural);
}

void Session::removeAt(NodeId block, size_t idx) {
  checkBlockIndex(block, idx, /*forInsert=*/false);
  NodeId victim = p_.node(block).stmts[idx];
  bool structural = subtreeIsStructural(victim);
  Snapshot before = snapshot();
  auto& stmts = p_.node(block).stmts;
  stmts.erase(stmts.begin() + static_cast<long>(idx));
  p_.eraseSubtree(victim);
  finish(before, structural);
}

void Session::replaceAt(NodeId block, size_t idx, NodeId payload) {
  checkBlockIndex(block, idx, /*forInsert=*/false);
  checkPayload(payload, /*mustBeBlock=*/false);
  NodeId victim = p_.node(block).stmts[idx];
  if (victim == payload) throw IrError("payload is attached elsewhere");
  bool structural = subtreeIsStructural(victim) || subtreeIsStructural(payload);
  Snapshot before = snapshot();
  p_.node(block).stmts[idx] = payload;
  p_.node(payload).parent = block;
  p_.eraseSubtree(victim);
  finish(before, structural);
}

void Session::replaceSlot(NodeId owner, Slot slot, NodeId payload) {
  if (!p_.has(owner)) throw IrError("slot owner does not exist");
  checkPayload(payload, /*mustBeBlock=*/true);
  ProgramNode& o = p_.node(owner);
  NodeId* field = nullptr;
  switch (slot) {
    case Slot::IfThen:
      if (o.kind == NodeKind::If) field = &o.thenBlk;
      break;
    case Slot::IfElse:
      if (o.kind == NodeKind::If && o.elseBlk) field = &o.elseBlk;
      break;
    case Slot::WhileBody:
      if (o.kind == NodeKind::While) field = &o.body;
      break;
    case Slot::ParallelBody:
      if (o.kind == NodeKind::Parallel) field = &o.body;
      break;
  }
  if (!field) throw IrError("slot not present on this node");
  NodeId victim = *field;
  bool structural = subtreeIsStructural(victim) || subtreeIsStructural(payload);
  Snapshot before = snapshot();
  *field = payload;
  p_.node(payload).parent = owner;
  p_.eraseSubtree(victim);
  finish(before, structural);
}

NodeId detachedAssign(Program& p, std::string lhs, Expr rhs, bool derefLhs) {
  NodeId id = p.makeNode(NodeKind::Assign);
  ProgramNode& n = p.node(id);
  n.lhs = std::move(lhs);
  n.rhs = std::move(rhs);
  n.derefLhs = derefLhs;
  return id;
}

NodeId detachedDecl(Program& p, bool shared, std::string name) {
  NodeId id = p.makeNode(NodeKind::Decl);
  ProgramNode& n = p.node(id);
  n.sharedDecl = shared;
  n.declName = std::move(name);
  if (shared) p.sharedDecls.insert(n.declName);
  return id;
}

NodeId detachedBarrier(Program& p) { return p.makeNode(NodeKind::Barrier); }
NodeId detachedFlush(Program& p) { return p.makeNode(NodeKind::Flush); }

NodeId detachedCall(Program& p, std::string callee) {
  NodeId id = p.makeNode(NodeKind::Call);
  p.node(id).callee = std::move(callee);
  return id;
}

NodeId detachedReturn(Program& p) { return p.makeNode(NodeKind::Return); }

NodeId detachedBlock(Program& p, const std::vector<NodeId>& stmts) {
  NodeId id = p.makeNode(NodeKind::Block);
  for (NodeId s : stmts) {
    p.node(id).stmts.push_back(s);
    p.node(s).parent = id;
  }
  return id;
}

NodeId detachedIf(Program& p, Expr cond, NodeId thenBlk, NodeId elseBlk) {
  NodeId id = p.makeNode(NodeKind::If);
  ProgramNode& n = p.node(id);
  n.cond = std::move(cond);
  n.thenBlk = thenBlk;
  n.elseBlk = elseBlk;
  p.node(thenBlk).parent = id;
  if (elseBlk) p.node(elseBlk).parent = id;
  return id;
}

NodeId detachedWhile(Program& p, Expr cond, NodeId bodyBlk) {
  NodeId id = p.makeNode(NodeKind::While);
  ProgramNode& n = p.node(id);
  n.cond = std::move(cond);
  n.body = bodyBlk;
  p.node(bodyBlk).parent = id;
  return id;
}

NodeId detachedParallel(Program& p, NodeId bodyBlk) {
  NodeId id = p.makeNode(NodeKind::Parallel);
  p.node(id).body = bodyBlk;
  p.node(bodyBlk).parent = id;
  return id;
}

}  // namespace homeo

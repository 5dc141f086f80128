#include "homeo/ast.hpp"

#include <algorithm>
#include <functional>

namespace homeo {

const char* kindName(NodeKind k) {
  switch (k) {
    case NodeKind::Entry: return "Entry";
    case NodeKind::Exit: return "Exit";
    case NodeKind::Decl: return "Decl";
    case NodeKind::Assign: return "Assign";
    case NodeKind::If: return "If";
    case NodeKind::While: return "While";
    case NodeKind::Block: return "Block";
    case NodeKind::Parallel: return "Parallel";
    case NodeKind::Barrier: return "Barrier";
    case NodeKind::Flush: return "Flush";
    case NodeKind::Call: return "Call";
    case NodeKind::Return: return "Return";
  }
  return "?";
}

Expr Expr::intLit(long v) {
  Expr e;
  e.k = K::Int;
  e.num = v;
  return e;
}

Expr Expr::var(std::string n) {
  Expr e;
  e.k = K::Var;
  e.name = std::move(n);
  return e;
}

Expr Expr::addrOf(std::string n) {
  Expr e;
  e.k = K::AddrOf;
  e.name = std::move(n);
  return e;
}

Expr Expr::deref(std::string n) {
  Expr e;
  e.k = K::Deref;
  e.name = std::move(n);
  return e;
}

Expr Expr::bin(std::string op, Expr a, Expr b) {
  Expr e;
  e.k = K::Bin;
  e.op = std::move(op);
  e.kids.push_back(std::move(a));
  e.kids.push_back(std::move(b));
  return e;
}

bool Expr::operator==(const Expr& o) const {
  return k == o.k && num == o.num && name == o.name && op == o.op && kids == o.kids;
}

void Expr::readVars(std::set<std::string>& out) const {
  switch (k) {
    case K::Int:
      break;
    case K::Var:
    case K::Deref:
      out.insert(name);
      break;
    case K::AddrOf:
      break;
    case K::Bin:
      for (const Expr& e : kids) e.readVars(out);
      break;
  }
}

void Expr::addressTaken(std::set<std::string>& out) const {
  if (k == K::AddrOf) out.insert(name);
  for (const Expr& e : kids) e.addressTaken(out);
}

std::vector<NodeId> ProgramNode::children() const {
  std::vector<NodeId> out;
  switch (kind) {
    case NodeKind::Block:
      out = stmts;
      break;
    case NodeKind::If:
      out.push_back(thenBlk);
      if (elseBlk) out.push_back(elseBlk);
      break;
    case NodeKind::While:
    case NodeKind::Parallel:
      out.push_back(body);
      break;
    default:
      break;
  }
  return out;
}

NodeId Program::makeNode(NodeKind k) {
  NodeId id = nextId_++;
  ProgramNode n;
  n.id = id;
  n.kind = k;
  nodes.emplace(id, std::move(n));
  return id;
}

ProgramNode& Program::node(NodeId id) {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw IrError("no such node: " + std::to_string(id));
  return it->second;
}

const ProgramNode& Program::node(NodeId id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw IrError("no such node: " + std::to_string(id));
  return it->second;
}

std::set<NodeId> Program::subtree(NodeId id) const {
  std::set<NodeId> out;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    if (!out.insert(cur).second) continue;
    for (NodeId c : node(cur).children()) stack.push_back(c);
  }
  return out;
}

void Program::eraseSubtree(NodeId id) {
  for (NodeId n : subtree(id)) nodes.erase(n);
}

NodeId Program::cloneSubtree(NodeId id, const std::map<std::string, std::string>& rename) {
  auto ren = [&rename](const std::string& n) {
    auto it = rename.find(n);
    return it == rename.end() ? n : it->second;
  };
  std::function<void(Expr&)> renExpr = [&](Expr& e) {
    if (!e.name.empty()) e.name = ren(e.name);
    for (Expr& k : e.kids) renExpr(k);
  };
  std::function<NodeId(NodeId)> go = [&](NodeId src) -> NodeId {
    const ProgramNode old = node(src);
    NodeId fresh = makeNode(old.kind);
    ProgramNode& n = node(fresh);
    n.cond = old.cond;
    n.derefLhs = old.derefLhs;
    n.lhs = ren(old.lhs);
    n.rhs = old.rhs;
    n.sharedDecl = old.sharedDecl;
    n.declName = ren(old.declName);
    n.callee = old.callee;
    renExpr(n.cond);
    renExpr(n.rhs);
    for (NodeId c : old.stmts) {
      NodeId cc = go(c);
      n.stmts.push_back(cc);
      node(cc).parent = fresh;
    }
    if (old.thenBlk) {
      n.thenBlk = go(old.thenBlk);
      node(n.thenBlk).parent = fresh;
    }
    if (old.elseBlk) {
      n.elseBlk = go(old.elseBlk);
      node(n.elseBlk).parent = fresh;
    }
    if (old.body) {
      n.body = go(old.body);
      node(n.body).parent = fresh;
    }
    return fresh;
  };
  return go(id);
}

std::string Program::functionOf(NodeId id) const {
  // Entry/Exit are synthetic and not part of the tree.
  for (const auto& [name, fn] : functions) {
    if (fn.entry == id || fn.exit == id) return name;
  }
  NodeId cur = id;
  while (true) {
    const ProgramNode& n = node(cur);
    if (n.parent == 0) break;
    cur = n.parent;
  }
  for (const auto& [name, fn] : functions) {
    if (fn.body == cur) return name;
  }
  return "";
}

std::string Program::location(const std::string& fn, const std::string& name) const {
  if (isShared(name)) return name;
  return fn + "::" + name;
}

std::set<std::string> Program::addressTakenLocations() const {
  std::set<std::string> out;
  for (const auto& [id, n] : nodes) {
    std::string fn = functionOf(id);
    if (fn.empty()) continue;
    std::set<std::string> names;
    n.cond.addressTaken(names);
    n.rhs.addressTaken(names);
    for (const std::string& v : names) out.insert(location(fn, v));
  }
  return out;
}

std::set<std::string> Program::readSet(NodeId id) const {
  return readSet(id, addressTakenLocations());
}

std::set<std::string> Program::writeSet(NodeId id) const {
  return writeSet(id, addressTakenLocations());
}

std::set<std::string> Program::readSet(NodeId id, const std::set<std::string>& addrTaken) const {
  const ProgramNode& n = node(id);
  std::string fn = functionOf(id);
  std::set<std::string> names;
  std::set<std::string> out;
  switch (n.kind) {
    case NodeKind::Assign:
      n.rhs.readVars(names);
      if (n.derefLhs) names.insert(n.lhs);
      break;
    case NodeKind::If:
    case NodeKind::While:
      n.cond.readVars(names);
      break;
    default:
      return out;
  }
  bool hasDeref = n.kind == NodeKind::Assign && n.rhs.k == Expr::K::Deref;
  for (const std::string& v : names) out.insert(location(fn, v));
  if (hasDeref) {
    // x = *p reads whatever p may point at; conservative expansion.
    out.insert(addrTaken.begin(), addrTaken.end());
  }
  return out;
}

std::set<std::string> Program::writeSet(NodeId id, const std::set<std::string>& addrTaken) const {
  const ProgramNode& n = node(id);
  std::set<std::string> out;
  if (n.kind == NodeKind::Decl) {
    out.insert(location(functionOf(id), n.declName));
    return out;
  }
  if (n.kind != NodeKind::Assign) return out;
  if (n.derefLhs) {
    out.insert(addrTaken.begin(), addrTaken.end());
  } else {
    out.insert(location(functionOf(id), n.lhs));
  }
  return out;
}

bool Program::nodeEqual(NodeId a, const Program& other, NodeId b) const {
  const ProgramNode& x = node(a);
  const ProgramNode& y = other.node(b);
  if (x.kind != y.kind) return false;
  if (!(x.cond == y.cond) || !(x.rhs == y.rhs)) return false;
  if (x.derefLhs != y.derefLhs || x.lhs != y.lhs) return false;
  if (x.sharedDecl != y.sharedDecl || x.declName != y.declName) return false;
  if (x.callee != y.callee) return false;
  auto xc = x.children();
  auto yc = y.children();
  if (xc.size() != yc.size()) return false;
  for (size_t i = 0; i < xc.size(); ++i) {
    if (!nodeEqual(xc[i], other, yc[i])) return false;
  }
  return true;
}

bool Program::structurallyEqual(const Program& other) const {
  if (sharedDecls != other.sharedDecls) return false;
  if (entryFunction != other.entryFunction) return false;
  if (functions.size() != other.functions.size()) return false;
  for (const auto& [name, fn] : functions) {
    auto it = other.functions.find(name);
    if (it == other.functions.end()) return false;
    if (!nodeEqual(fn.body, other, it->second.body)) return false;
  }
  return true;
}

}  // namespace homeo

#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace homeo {

using NodeId = int;

enum class NodeKind {
  Entry,
  Exit,
  Decl,
  Assign,
  If,
  While,
  Block,
  Parallel,
  Barrier,
  Flush,
  Call,
  Return,
};

const char* kindName(NodeKind k);

// Expressions are plain value data; they are not program nodes and cannot be
// edited in place (replace the owning statement instead).
struct Expr {
  enum class K { Int, Var, AddrOf, Deref, Bin };
  K k = K::Int;
  long num = 0;
  std::string name;      // Var / AddrOf / Deref
  std::string op;        // Bin: one of + - < ==
  std::vector<Expr> kids;  // Bin: exactly two

  static Expr intLit(long v);
  static Expr var(std::string n);
  static Expr addrOf(std::string n);
  static Expr deref(std::string n);
  static Expr bin(std::string op, Expr a, Expr b);

  bool operator==(const Expr& o) const;
  // Variable names read when evaluating this expression. &x does not read x.
  void readVars(std::set<std::string>& out) const;
  // Names whose address is taken somewhere in this expression.
  void addressTaken(std::set<std::string>& out) const;
};

struct ProgramNode {
  NodeId id = 0;
  NodeKind kind = NodeKind::Block;
  NodeId parent = 0;  // 0 = detached or synthetic root

  std::vector<NodeId> stmts;  // Block
  Expr cond;                  // If / While
  NodeId thenBlk = 0;         // If
  NodeId elseBlk = 0;         // If (0 = absent)
  NodeId body = 0;            // While / Parallel
  bool derefLhs = false;      // Assign: *x = ...
  std::string lhs;            // Assign
  Expr rhs;                   // Assign
  bool sharedDecl = false;    // Decl
  std::string declName;       // Decl
  std::string callee;         // Call
  int line = 0;

  std::vector<NodeId> children() const;
};

struct Function {
  std::string name;
  NodeId entry = 0;
  NodeId exit = 0;
  NodeId body = 0;  // root Block
};

class Program {
 public:
  std::map<NodeId, ProgramNode> nodes;
  std::map<std::string, Function> functions;
  std::set<std::string> sharedDecls;  // unqualified shared variable names
  std::string entryFunction = "main";

  NodeId makeNode(NodeKind k);
  ProgramNode& node(NodeId id);
  const ProgramNode& node(NodeId id) const;
  bool has(NodeId id) const { return nodes.count(id) != 0; }

  // All nodes of the subtree rooted at id (including id).
  std::set<NodeId> subtree(NodeId id) const;
  void eraseSubtree(NodeId id);

  // Deep copy with fresh ids; renames identifiers via the map when nonempty
  // (used by inlining to qualify callee locals).
  NodeId cloneSubtree(NodeId id, const std::map<std::string, std::string>& rename = {});

  // Name of the function structurally containing id ("" if detached).
  std::string functionOf(NodeId id) const;

  bool isShared(const std::string& name) const { return sharedDecls.count(name) != 0; }
  // Abstract location for variable `name` used inside function `fn`.
  std::string location(const std::string& fn, const std::string& name) const;

  // All address-taken abstract locations in the program.
  std::set<std::string> addressTakenLocations() const;

  // Conservative per-node read/write sets over abstract locations.
  // Deref accesses expand to every address-taken location. The overloads
  // taking a precomputed address-taken set avoid rescanning the program.
  std::set<std::string> readSet(NodeId id) const;
  std::set<std::string> writeSet(NodeId id) const;
  std::set<std::string> readSet(NodeId id, const std::set<std::string>& addrTaken) const;
  std::set<std::string> writeSet(NodeId id, const std::set<std::string>& addrTaken) const;

  bool structurallyEqual(const Program& other) const;

  int peekNextId() const { return nextId_; }

 private:
  int nextId_ = 1;
  bool nodeEqual(NodeId a, const Program& other, NodeId b) const;
};

struct IrError : std::runtime_error {
  explicit IrError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace homeo

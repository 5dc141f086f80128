#include "homeo/graph.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace homeo {
namespace {

using Source = std::pair<NodeId, EdgeKind>;

struct CfgBuilder {
  const Program& p;
  std::set<Edge>& edges;
  const Function* fn = nullptr;

  void connect(const std::set<Source>& sources, NodeId first) {
    for (const auto& [n, kind] : sources) edges.insert({n, first, kind});
  }

  std::set<Source> wireSeq(const std::vector<NodeId>& stmts, std::set<Source> sources) {
    for (NodeId s : stmts) sources = wireStmt(s, std::move(sources));
    return sources;
  }

  std::set<Source> wireStmt(NodeId id, std::set<Source> sources) {
    const ProgramNode& n = p.node(id);
    connect(sources, id);
    switch (n.kind) {
      case NodeKind::Decl:
      case NodeKind::Assign:
      case NodeKind::Barrier:
      case NodeKind::Flush:
        return {{id, EdgeKind::Cfg}};
      case NodeKind::Call: {
        const Function& callee = p.functions.at(n.callee);
        edges.insert({id, callee.entry, EdgeKind::Call});
        return {{callee.exit, EdgeKind::Call}};
      }
      case NodeKind::Return:
        edges.insert({id, fn->exit, EdgeKind::Cfg});
        return {};
      case NodeKind::If: {
        std::set<Source> out = wireSeq(p.node(n.thenBlk).stmts, {{id, EdgeKind::Cfg}});
        if (n.elseBlk) {
          auto elseOut = wireSeq(p.node(n.elseBlk).stmts, {{id, EdgeKind::Cfg}});
          out.insert(elseOut.begin(), elseOut.end());
        } else {
          out.insert({id, EdgeKind::Cfg});
        }
        return out;
      }
      case NodeKind::While: {
        auto bodyOut = wireSeq(p.node(n.body).stmts, {{id, EdgeKind::Cfg}});
        connect(bodyOut, id);  // back edge(s)
        return {{id, EdgeKind::Cfg}};
      }
      case NodeKind::Parallel:
        return wireSeq(p.node(n.body).stmts, {{id, EdgeKind::Cfg}});
      default:
        throw IrError("unexpected node kind in CFG construction");
    }
  }
};

}  // namespace

std::set<Edge> buildCfgCallEdges(const Program& p) {
  std::set<Edge> edges;
  for (const auto& [name, fn] : p.functions) {
    CfgBuilder b{p, edges, &fn};
    auto out = b.wireSeq(p.node(fn.body).stmts, {{fn.entry, EdgeKind::Cfg}});
    b.connect(out, fn.exit);
  }
  return edges;
}

void Supergraph::rebuild(const Program& p) {
  std::set<Edge> keptInterTask;
  for (const Edge& e : edges_) {
    if (e.kind == EdgeKind::InterTask) keptInterTask.insert(e);
  }
  edges_ = buildCfgCallEdges(p);
  nodes_.clear();
  for (const auto& [name, fn] : p.functions) {
    nodes_.insert(fn.entry);
    nodes_.insert(fn.exit);
    for (NodeId n : p.subtree(fn.body)) {
      if (p.node(n).kind != NodeKind::Block) nodes_.insert(n);
    }
  }
  for (const Edge& e : keptInterTask) {
    if (nodes_.count(e.src) && nodes_.count(e.dst)) edges_.insert(e);
  }
  invalidate();
}

void Supergraph::setInterTaskEdges(const std::set<std::pair<NodeId, NodeId>>& edges) {
  for (auto it = edges_.begin(); it != edges_.end();) {
    it = it->kind == EdgeKind::InterTask ? edges_.erase(it) : std::next(it);
  }
  for (const auto& [a, b] : edges) edges_.insert({a, b, EdgeKind::InterTask});
  invalidate();
}

void Supergraph::invalidate() const {
  adjFresh_ = false;
  fwdFresh_ = false;
  revFresh_ = false;
}

void Supergraph::ensureAdj() const {
  if (adjFresh_) return;
  succ_.clear();
  pred_.clear();
  for (NodeId n : nodes_) {
    succ_[n];
    pred_[n];
  }
  for (const Edge& e : edges_) {
    succ_[e.src].push_back(e.dst);
    pred_[e.dst].push_back(e.src);
  }
  for (auto& [n, v] : succ_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  for (auto& [n, v] : pred_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  adjFresh_ = true;
}

std::vector<NodeId> Supergraph::successors(NodeId n) const {
  ensureAdj();
  auto it = succ_.find(n);
  return it == succ_.end() ? std::vector<NodeId>{} : it->second;
}

std::vector<NodeId> Supergraph::predecessors(NodeId n) const {
  ensureAdj();
  auto it = pred_.find(n);
  return it == pred_.end() ? std::vector<NodeId>{} : it->second;
}

SccIndex Supergraph::computeScc(const std::set<NodeId>& nodes,
                                const std::map<NodeId, std::vector<NodeId>>& adj) {
  return computeSccIndex(nodes, adj);
}

SccIndex computeSccIndex(const std::set<NodeId>& nodes,
                         const std::map<NodeId, std::vector<NodeId>>& adj) {
  // Iterative Tarjan; SCCs complete in reverse topological order.
  SccIndex idx;
  std::map<NodeId, int> index, lowlink;
  std::set<NodeId> onStack;
  std::vector<NodeId> stack;
  int counter = 0;
  std::vector<std::vector<NodeId>> sccs;

  struct Frame {
    NodeId n;
    size_t childIx;
  };
  for (NodeId root : nodes) {
    if (index.count(root)) continue;
    std::vector<Frame> frames{{root, 0}};
    index[root] = lowlink[root] = counter++;
    stack.push_back(root);
    onStack.insert(root);
    while (!frames.empty()) {
      Frame& f = frames.back();
      auto it = adj.find(f.n);
      const std::vector<NodeId>& kids = it == adj.end() ? std::vector<NodeId>{} : it->second;
      static const std::vector<NodeId> kEmpty;
      const std::vector<NodeId>& succ = it == adj.end() ? kEmpty : kids;
      if (f.childIx < succ.size()) {
        NodeId w = succ[f.childIx++];
        if (!index.count(w)) {
          index[w] = lowlink[w] = counter++;
          stack.push_back(w);
          onStack.insert(w);
          frames.push_back({w, 0});
        } else if (onStack.count(w)) {
          lowlink[f.n] = std::min(lowlink[f.n], index[w]);
        }
      } else {
        NodeId n = f.n;
        frames.pop_back();
        if (!frames.empty()) {
          lowlink[frames.back().n] = std::min(lowlink[frames.back().n], lowlink[n]);
        }
        if (lowlink[n] == index[n]) {
          std::vector<NodeId> scc;
          while (true) {
            NodeId w = stack.back();
            stack.pop_back();
            onStack.erase(w);
            scc.push_back(w);
            if (w == n) break;
          }
          sccs.push_back(std::move(scc));
        }
      }
    }
  }

  idx.sccCount = static_cast<int>(sccs.size());
  for (size_t i = 0; i < sccs.size(); ++i) {
    int topo = idx.sccCount - 1 - static_cast<int>(i);
    for (NodeId n : sccs[i]) idx.sccOf[n] = topo;
  }

  // Within-SCC order: DFS finishing order with cross-SCC and back edges dropped.
  std::map<int, std::vector<NodeId>> members;
  for (const auto& [n, s] : idx.sccOf) members[s].push_back(n);
  for (auto& [s, mem] : members) {
    std::sort(mem.begin(), mem.end());
    std::set<NodeId> inScc(mem.begin(), mem.end());
    std::vector<NodeId> finish;
    std::set<NodeId> visited;
    std::function<void(NodeId)> dfs = [&](NodeId n) {
      visited.insert(n);
      auto it = adj.find(n);
      if (it != adj.end()) {
        for (NodeId w : it->second) {
          if (inScc.count(w) && !visited.count(w)) dfs(w);
        }
      }
      finish.push_back(n);
    };
    for (NodeId n : mem) {
      if (!visited.count(n)) dfs(n);
    }
    std::reverse(finish.begin(), finish.end());
    for (size_t i = 0; i < finish.size(); ++i) {
      idx.withinOrder[finish[i]] = static_cast<int>(i);
    }
  }
  return idx;
}

const SccIndex& Supergraph::scc(bool reversed) const {
  ensureAdj();
  if (!reversed) {
    if (!fwdFresh_) {
      fwd_ = computeScc(nodes_, succ_);
      fwdFresh_ = true;
    }
    return fwd_;
  }
  if (!revFresh_) {
    rev_ = computeScc(nodes_, pred_);
    revFresh_ = true;
  }
  return rev_;
}

std::string Supergraph::toDot(const Program& p) const {
  std::ostringstream os;
  os << "digraph supergraph {\n";
  for (NodeId n : nodes_) {
    os << "  n" << n << " [label=\"" << n << ":" << kindName(p.node(n).kind) << "\"];\n";
  }
  for (const Edge& e : edges_) {
    os << "  n" << e.src << " -> n" << e.dst;
    switch (e.kind) {
      case EdgeKind::Cfg:
        os << " [color=black]";
        break;
      case EdgeKind::Call:
        os << " [color=blue]";
        break;
      case EdgeKind::InterTask:
        os << " [style=dashed]";
        break;
    }
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace homeo

#include "homeo/interp.hpp"

#include <random>
#include <vector>

namespace homeo {
namespace {

struct Value {
  long num = 0;
  std::string addr;  // nonempty: the value is a location address
  bool isAddr() const { return !addr.empty(); }
  bool operator==(const Value&) const = default;

  std::string render() const {
    return isAddr() ? "&" + addr : std::to_string(num);
  }
};

struct Frame {
  NodeId block = 0;
  size_t idx = 0;
  bool fnRoot = false;    // popping past this frame leaves a callee
  bool loopOwner = 0;     // owned by a While: re-test condition on block end
  NodeId loop = 0;
};

struct Thread {
  std::vector<Frame> stack;
  std::map<std::string, Value> priv;
  std::map<std::string, Value> wbuf, rcache;
  bool atBarrier = false;
  bool done() const { return stack.empty(); }
};

struct Machine {
  const Program& p;
  int nthreads;
  std::mt19937 rng;
  long budget;
  std::map<std::string, Value> committed;

  struct Halt {
    std::string reason;
  };

  Value sharedRead(Thread& t, const std::string& loc) {
    if (auto it = t.wbuf.find(loc); it != t.wbuf.end()) return it->second;
    if (auto it = t.rcache.find(loc); it != t.rcache.end()) return it->second;
    Value v = committed[loc];
    t.rcache[loc] = v;
    return v;
  }

  void flush(Thread& t) {
    for (auto& [loc, v] : t.wbuf) committed[loc] = v;
    t.wbuf.clear();
    t.rcache.clear();
  }

  Value readVar(Thread& t, NodeId site, const std::string& name) {
    std::string loc = p.location(p.functionOf(site), name);
    return readLoc(t, loc);
  }

  Value readLoc(Thread& t, const std::string& loc) {
    if (p.isShared(loc)) return sharedRead(t, loc);
    return t.priv[loc];
  }

  void writeLoc(Thread& t, const std::string& loc, Value v) {
    if (p.isShared(loc)) t.wbuf[loc] = std::move(v);
    else t.priv[loc] = std::move(v);
  }

  Value eval(Thread& t, NodeId site, const Expr& e) {
    switch (e.k) {
      case Expr::K::Int:
        return {e.num, ""};
      case Expr::K::Var:
        return readVar(t, site, e.name);
      case Expr::K::AddrOf:
        return {0, p.location(p.functionOf(site), e.name)};
      case Expr::K::Deref: {
        Value ptr = readVar(t, site, e.name);
        if (!ptr.isAddr()) return {0, ""};
        Value cell = readLoc(t, ptr.addr);
        // Memory cells reached through pointers hold integers.
        return {cell.isAddr() ? 0 : cell.num, ""};
      }
      case Expr::K::Bin: {
        long a = eval(t, site, e.kids[0]).num;
        long b = eval(t, site, e.kids[1]).num;
        if (e.op == "+") return {a + b, ""};
        if (e.op == "-") return {a - b, ""};
        if (e.op == "<") return {a < b ? 1 : 0, ""};
        return {a == b ? 1 : 0, ""};
      }
    }
    return {};
  }

  // Unwinds finished blocks (re-testing loop conditions); returns the next
  // statement or 0 when the thread is done.
  NodeId fetch(Thread& t) {
    while (!t.stack.empty()) {
      Frame& f = t.stack.back();
      const auto& stmts = p.node(f.block).stmts;
      if (f.idx < stmts.size()) return stmts[f.idx];
      if (f.loopOwner) {
        if (--budget < 0) throw Halt{"step budget exhausted"};
        if (eval(t, f.loop, p.node(f.loop).cond).num != 0) {
          f.idx = 0;
          continue;
        }
      }
      t.stack.pop_back();
    }
    return 0;
  }

  // Executes one statement; returns false when the thread hit a Parallel
  // node (only the serial master ever does; the caller runs the region).
  bool step(Thread& t, NodeId* parallelOut) {
    if (--budget < 0) throw Halt{"step budget exhausted"};
    NodeId id = fetch(t);
    if (id == 0) return true;
    Frame& f = t.stack.back();
    const ProgramNode& n = p.node(id);
    switch (n.kind) {
      case NodeKind::Decl: {
        f.idx++;
        writeLoc(t, p.location(p.functionOf(id), n.declName), {0, ""});
        break;
      }
      case NodeKind::Assign: {
        f.idx++;
        Value v = eval(t, id, n.rhs);
        if (n.derefLhs) {
          Value ptr = readVar(t, id, n.lhs);
          if (ptr.isAddr()) writeLoc(t, ptr.addr, {v.isAddr() ? 0 : v.num, ""});
        } else {
          writeLoc(t, p.location(p.functionOf(id), n.lhs), std::move(v));
        }
        break;
      }
      case NodeKind::If: {
        f.idx++;
        bool taken = eval(t, id, n.cond).num != 0;
        NodeId blk = taken ? n.thenBlk : n.elseBlk;
        if (blk) t.stack.push_back({blk, 0, false, false, 0});
        break;
      }
      case NodeKind::While: {
        f.idx++;
        if (eval(t, id, n.cond).num != 0) {
          t.stack.push_back({n.body, 0, false, true, id});
        }
        break;
      }
      case NodeKind::Call: {
        f.idx++;
        const Function& fn = p.functions.at(n.callee);
        t.stack.push_back({fn.body, 0, true, false, 0});
        break;
      }
      case NodeKind::Return: {
        while (!t.stack.empty()) {
          bool root = t.stack.back().fnRoot;
          t.stack.pop_back();
          if (root) break;
        }
        break;
      }
      case NodeKind::Flush: {
        f.idx++;
        flush(t);
        break;
      }
      case NodeKind::Barrier: {
        f.idx++;
        flush(t);  // commit on arrival; caches clear on release
        t.atBarrier = true;
        break;
      }
      case NodeKind::Parallel: {
        f.idx++;
        *parallelOut = id;
        return false;
      }
      default:
        throw Halt{"unexpected statement kind"};
    }
    return true;
  }

  void runRegion(Thread& master, NodeId region) {
    flush(master);
    std::vector<Thread> kids(static_cast<size_t>(nthreads));
    for (Thread& k : kids) {
      k.priv = master.priv;
      k.stack.push_back({p.node(region).body, 0, false, false, 0});
    }
    while (true) {
      std::vector<size_t> runnable;
      bool allDone = true, anyDone = false;
      for (size_t i = 0; i < kids.size(); ++i) {
        if (kids[i].done()) {
          anyDone = true;
          continue;
        }
        allDone = false;
        if (!kids[i].atBarrier) runnable.push_back(i);
      }
      if (allDone) break;
      if (runnable.empty()) {
        if (anyDone) throw Halt{"barrier deadlock"};
        for (Thread& k : kids) {
          k.atBarrier = false;
          k.rcache.clear();
        }
        continue;
      }
      size_t pick = runnable[std::uniform_int_distribution<size_t>(
          0, runnable.size() - 1)(rng)];
      NodeId unusedRegion = 0;
      Thread& k = kids[pick];
      step(k, &unusedRegion);
      if (k.done()) flush(k);  // closing implicit barrier
    }
    master.priv = kids[0].priv;
    master.rcache.clear();
  }

  RunResult run() {
    for (const std::string& s : p.sharedDecls) committed[s] = {0, ""};
    Thread master;
    const Function& entry = p.functions.at(p.entryFunction);
    master.stack.push_back({entry.body, 0, true, false, 0});
    RunResult res;
    try {
      while (!master.done()) {
        NodeId region = 0;
        if (!step(master, &region)) runRegion(master, region);
        if (master.atBarrier) throw Halt{"barrier outside parallel region"};
      }
      flush(master);
      res.ok = true;
    } catch (const Halt& h) {
      res.ok = false;
      res.error = h.reason;
    }
    for (const auto& [loc, v] : committed) res.shared[loc] = v.render();
    return res;
  }
};

}  // namespace

std::string RunResult::toString() const {
  std::string s = ok ? "ok" : "error:" + error;
  for (const auto& [k, v] : shared) s += " " + k + "=" + v;
  return s;
}

RunResult interpret(const Program& p, int threads, unsigned seed, long stepBudget) {
  Machine m{p, threads, std::mt19937(seed), stepBudget, {}};
  return m.run();
}

}  // namespace homeo

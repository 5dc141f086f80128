#include "homeo/corpus.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace homeo {
namespace {

struct Gen {
  GenConfig cfg;
  std::mt19937 rng;
  std::ostringstream os;
  int emitted = 0;
  int indent = 0;
  int barriersLeft = 0;

  std::vector<std::string> stable;   // shared, written only in the preamble
  std::vector<std::string> priv;     // general private scratch
  std::vector<std::string> taint;    // scratch for racy flush-window reads
  std::string ptrTarget;             // address-taken private

  explicit Gen(const GenConfig& c) : cfg(c), rng(c.seed) {}

  int r(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
  bool chance(int pct) { return r(100) < pct; }

  void line(const std::string& s) {
    os << std::string(static_cast<size_t>(indent) * 2, ' ') << s << "\n";
    emitted++;
  }

  std::string pick(const std::vector<std::string>& v) { return v[static_cast<size_t>(r(static_cast<int>(v.size())))]; }

  // Expressions every thread evaluates identically: literals, privates and
  // the shared variables handed in as safely readable.
  std::string expr(const std::vector<std::string>& readable, int depth = 0) {
    int c = r(depth > 1 ? 3 : 4);
    switch (c) {
      case 0:
        return std::to_string(r(17));
      case 1:
        return pick(priv);
      case 2:
        return readable.empty() ? pick(priv) : pick(readable);
      default:
        return expr(readable, depth + 1) + " " + (chance(70) ? "+" : "-") + " " +
               expr(readable, depth + 1);
    }
  }

  void privWork(const std::vector<std::string>& readable) {
    switch (r(4)) {
      case 0:
        line(pick(priv) + " = " + expr(readable) + ";");
        break;
      case 1: {
        std::string p = pick(priv);
        line("if (" + p + " < " + std::to_string(1 + r(9)) + ") {");
        indent++;
        line(pick(priv) + " = " + expr(readable) + ";");
        indent--;
        line("}");
        break;
      }
      case 2: {
        std::string i = pick(priv);
        line(i + " = 0;");
        line("while (" + i + " < " + std::to_string(2 + r(3)) + ") {");
        indent++;
        line(i + " = " + i + " + 1;");
        line(pick(priv) + " = " + pick(priv) + " + " + expr(readable) + ";");
        indent--;
        line("}");
        break;
      }
      default:
        line("pp = &" + ptrTarget + ";");
        line("*pp = " + expr(readable) + ";");
        line(pick(priv) + " = *pp;");
        break;
    }
  }

  // One phase body. Shared writes are confined to `writable`; reads may use
  // `readable` (stable vars plus earlier-phase vars of this region).
  void phaseBody(const std::vector<std::string>& writable,
                 const std::vector<std::string>& readable, bool allowCall, int helpers) {
    int stmts = 2 + r(4);
    for (int i = 0; i < stmts; ++i) {
      int c = r(10);
      if (c < 4) {
        privWork(readable);
      } else if (c < 7 && !writable.empty()) {
        line(pick(writable) + " = " + expr(readable) + ";");
      } else if (c < 8 && !writable.empty()) {
        // Flush window: the late read races with sibling commits, so the
        // value lands in a scratch private that never reaches shared state.
        std::string v = pick(writable);
        line(v + " = " + expr(readable) + ";");
        line("flush;");
        line(pick(priv) + " = " + expr(readable) + ";");
        line("flush;");
        line(pick(taint) + " = " + v + " + " + pick(taint) + ";");
      } else if (c < 9 && allowCall && helpers > 0 && barriersLeft > 1) {
        line("call h" + std::to_string(r(helpers)) + "();");
        barriersLeft -= 1;
      } else {
        privWork(readable);
      }
    }
  }

  std::string run() {
    int helpers = cfg.nodes >= 60 ? 2 : 1;
    barriersLeft = std::max(cfg.barriers, cfg.parallelRegions);
    int nShared = 3 + r(3) + cfg.parallelRegions;
    std::vector<std::string> shared;
    for (int i = 0; i < nShared; ++i) shared.push_back("s" + std::to_string(i));
    stable.assign(shared.begin(), shared.begin() + 2);
    std::vector<std::string> phased(shared.begin() + 2, shared.end());

    for (int i = 0; i < 6; ++i) priv.push_back("p" + std::to_string(i));
    for (int i = 0; i < 2; ++i) taint.push_back("t" + std::to_string(i));
    ptrTarget = "pv";

    // Helpers: barrier-carrying callees that are legal only in parallel
    // context; they make inlining worthwhile.
    for (int h = 0; h < helpers; ++h) {
      line("func h" + std::to_string(h) + "() {");
      indent++;
      line("private hx;");
      line("hx = " + std::to_string(1 + r(9)) + ";");
      line("barrier;");
      line("hx = hx + " + pick(stable) + ";");
      indent--;
      line("}");
    }

    line("func main() {");
    indent++;
    for (const std::string& s : shared) line("shared " + s + ";");
    for (const std::string& p : priv) line("private " + p + ";");
    for (const std::string& t : taint) line("private " + t + ";");
    line("private " + ptrTarget + ";");
    line("private pp;");
    for (const std::string& p : priv) line(p + " = " + std::to_string(r(10)) + ";");
    for (const std::string& s : stable) line(s + " = " + std::to_string(1 + r(20)) + ";");

    // Distribute the phased shared variables across regions.
    std::vector<std::vector<std::string>> regionVars(static_cast<size_t>(cfg.parallelRegions));
    for (size_t i = 0; i < phased.size(); ++i) {
      regionVars[i % regionVars.size()].push_back(phased[i]);
    }

    int regionBudget =
        std::max(8, (cfg.nodes - emitted - 4 * cfg.parallelRegions) / std::max(1, cfg.parallelRegions));
    for (int reg = 0; reg < cfg.parallelRegions; ++reg) {
      bool mergeable = reg + 1 < cfg.parallelRegions && chance(60);
      const auto& vars = regionVars[static_cast<size_t>(reg)];
      int phases = std::max(1, std::min<int>(static_cast<int>(vars.size()),
                                             1 + barriersLeft / std::max(1, cfg.parallelRegions - reg)));
      line("parallel {");
      indent++;
      line("barrier;");
      std::vector<std::string> readable = stable;
      int start = emitted;
      for (int ph = 0; ph < phases; ++ph) {
        std::vector<std::string> writable;
        for (size_t i = static_cast<size_t>(ph); i < vars.size(); i += static_cast<size_t>(phases)) {
          writable.push_back(vars[i]);
        }
        while (emitted - start < regionBudget * (ph + 1) / phases) {
          phaseBody(writable, readable, /*allowCall=*/reg % 2 == 0, helpers);
        }
        if (ph + 1 < phases) {
          line("barrier;");
          barriersLeft--;
          if (chance(50)) line("barrier;");  // redundant on purpose
        }
        readable.insert(readable.end(), writable.begin(), writable.end());
      }
      line("barrier;");
      indent--;
      line("}");
      if (reg + 1 < cfg.parallelRegions) {
        if (mergeable) {
          line(pick(priv) + " = " + expr(stable) + ";");
        } else {
          line(pick(stable) + " = " + expr({}) + ";");
        }
      }
    }
    indent--;
    line("}");
    return os.str();
  }
};

std::vector<std::string> knownNames(const Program& p) {
  std::set<std::string> names;
  std::function<void(const Expr&)> walk = [&](const Expr& e) {
    if (!e.name.empty()) names.insert(e.name);
    for (const Expr& k : e.kids) walk(k);
  };
  for (const auto& [id, n] : p.nodes) {
    if (!n.declName.empty()) names.insert(n.declName);
    if (!n.lhs.empty()) names.insert(n.lhs);
    walk(n.cond);
    walk(n.rhs);
  }
  return {names.begin(), names.end()};
}

}  // namespace

std::string generateSource(const GenConfig& cfg) { return Gen(cfg).run(); }

std::string randomDelta(Session& s, std::mt19937& rng) {
  Program& p = s.program();
  auto r = [&rng](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };

  std::vector<NodeId> blocks;
  for (const auto& [id, n] : p.nodes) {
    if (n.kind == NodeKind::Block && !p.functionOf(id).empty()) blocks.push_back(id);
  }
  std::vector<std::string> names = knownNames(p);
  if (names.empty()) names.push_back("x");
  auto name = [&] { return names[static_cast<size_t>(r(static_cast<int>(names.size())))]; };
  auto smallExpr = [&]() -> Expr {
    switch (r(4)) {
      case 0:
        return Expr::intLit(r(21));
      case 1:
        return Expr::var(name());
      case 2:
        return Expr::bin(r(2) ? "+" : "-", Expr::var(name()), Expr::intLit(r(9)));
      default:
        return Expr::bin("<", Expr::var(name()), Expr::intLit(1 + r(9)));
    }
  };

  NodeId blk = blocks[static_cast<size_t>(r(static_cast<int>(blocks.size())))];
  size_t len = p.node(blk).stmts.size();
  int op = r(100);

  if (op < 30 && len > 0) {
    size_t idx = static_cast<size_t>(r(static_cast<int>(len)));
    s.removeAt(blk, idx);
    return "remove@" + std::to_string(blk) + ":" + std::to_string(idx);
  }
  if (op < 45 && len > 0) {
    size_t idx = static_cast<size_t>(r(static_cast<int>(len)));
    s.replaceAt(blk, idx, detachedAssign(p, name(), smallExpr()));
    return "replace@" + std::to_string(blk) + ":" + std::to_string(idx);
  }
  if (op < 50) {
    std::vector<NodeId> owners;
    for (const auto& [id, n] : p.nodes) {
      if (p.functionOf(id).empty()) continue;
      if (n.kind == NodeKind::While || n.kind == NodeKind::Parallel ||
          n.kind == NodeKind::If) {
        owners.push_back(id);
      }
    }
    if (!owners.empty()) {
      NodeId owner = owners[static_cast<size_t>(r(static_cast<int>(owners.size())))];
      Slot slot = p.node(owner).kind == NodeKind::If
                      ? Slot::IfThen
                      : (p.node(owner).kind == NodeKind::While ? Slot::WhileBody
                                                               : Slot::ParallelBody);
      std::vector<NodeId> stmts{detachedAssign(p, name(), smallExpr())};
      if (p.node(owner).kind == NodeKind::Parallel) {
        stmts.insert(stmts.begin(), detachedBarrier(p));
        stmts.push_back(detachedBarrier(p));
      }
      s.replaceSlot(owner, slot, detachedBlock(p, stmts));
      return "replaceSlot@" + std::to_string(owner);
    }
  }

  size_t idx = static_cast<size_t>(r(static_cast<int>(len) + 1));
  NodeId payload = 0;
  std::string what;
  switch (r(8)) {
    case 0:
      payload = detachedBarrier(p);
      what = "barrier";
      break;
    case 1:
      payload = detachedFlush(p);
      what = "flush";
      break;
    case 2: {
      NodeId body = detachedBlock(p, {detachedAssign(p, name(), smallExpr())});
      payload = detachedIf(p, smallExpr(), body);
      what = "if";
      break;
    }
    case 3: {
      std::string i = name();
      NodeId body = detachedBlock(
          p, {detachedAssign(p, i, Expr::bin("+", Expr::var(i), Expr::intLit(1)))});
      payload = detachedWhile(p, Expr::bin("<", Expr::var(i), Expr::intLit(3)), body);
      what = "while";
      break;
    }
    case 4: {
      std::string v = name();
      payload = detachedAssign(p, v, Expr::addrOf(name()));
      what = "addrof";
      break;
    }
    case 5:
      payload = detachedAssign(p, name(), Expr::deref(name()));
      what = "deref-read";
      break;
    default:
      payload = detachedAssign(p, name(), smallExpr());
      what = "assign";
      break;
  }
  s.insertAt(blk, idx, payload);
  return "insert-" + what + "@" + std::to_string(blk) + ":" + std::to_string(idx);
}

}  // namespace homeo

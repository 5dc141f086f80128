#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "homeo/corpus.hpp"
#include "homeo/interp.hpp"
#include "homeo/parser.hpp"
#include "homeo/pipeline.hpp"

using namespace homeo;

// Each criterion accumulates into `ok` and reports one summary line.
#define ACC(cond)                 \
  do {                            \
    bool acc_v = (cond);          \
    CHECK(acc_v);                 \
    if (!acc_v) ok = false;       \
  } while (0)

namespace {

void report(int criterion, bool ok) {
  std::printf("[ACCEPT] criterion %d: %s\n", criterion, ok ? "PASS" : "FAIL");
  std::fflush(stdout);
  CHECK(ok);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> corpus(int count, unsigned seedBase, int nodes, int regions,
                                int barriers) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) {
    GenConfig gc{seedBase + static_cast<unsigned>(i), nodes, regions, barriers};
    out.push_back(generateSource(gc));
  }
  return out;
}

std::map<std::string, std::set<std::string>> sharedPart(const Program& p, const Facts& f) {
  std::map<std::string, std::set<std::string>> out;
  if (!f) return out;
  for (const auto& [k, v] : *f) {
    if (p.isShared(k)) out[k] = v;
  }
  return out;
}

}  // namespace

TEST_CASE("criterion 1: getters always answer with exact, fresh facts in every mode") {
  bool ok = true;
  auto t0 = std::chrono::steady_clock::now();
  auto programs = corpus(20, 100, 50, 2, 4);
  const int tracesPerMode = 1000;  // one trace = one mutation + full-corpus audit
  int perProgram = tracesPerMode / static_cast<int>(programs.size());
  for (Mode m : allModes()) {
    for (size_t pi = 0; pi < programs.size() && ok; ++pi) {
      Session s(parse(programs[pi]), m);
      AnalysisSet set = buildAnalyses(s, {"pta", "rd", "lv", "cp"});
      std::mt19937 rng(static_cast<unsigned>(1000 + pi));
      for (int d = 0; d < perProgram; ++d) {
        randomDelta(s, rng);
        if (isRelevantPoint(m)) s.stabilizeNow();
        std::string err = verifyAnalysesExact(set);
        if (!err.empty()) {
          CAPTURE(modeName(m));
          CAPTURE(pi);
          CAPTURE(d);
          CAPTURE(err);
          ACC(false);
          break;
        }
      }
    }
  }
  ACC(seconds_since(t0) < 600.0);
  report(1, ok);
}

TEST_CASE("criterion 2: incremental updates equal from-scratch solves, loops included") {
  bool ok = true;
  // Fuzzed: 100 deltas per program under every update discipline.
  for (Mode m : {Mode::EGUPD, Mode::RPUPD, Mode::LZUPD}) {
    for (unsigned seed : {300u, 301u, 302u}) {
      GenConfig gc{seed, 60, 2, 5};
      Session s(parse(generateSource(gc)), m);
      AnalysisSet set = buildAnalyses(s, {"pta", "rd", "lv", "cp"});
      std::mt19937 rng(seed * 31);
      for (int d = 0; d < 100; ++d) {
        randomDelta(s, rng);
        if (isRelevantPoint(m)) s.stabilizeNow();
        std::string err = verifyAnalysesExact(set);
        if (!err.empty()) {
          CAPTURE(modeName(m));
          CAPTURE(seed);
          CAPTURE(d);
          CAPTURE(err);
          ACC(false);
          break;
        }
      }
    }
  }

  // Crafted loop cases: facts circulating around a cycle must drain or grow
  // exactly when the statement feeding the cycle changes.
  const char* loopSrc =
      "func main() {\n"
      "  shared x;\n"
      "  shared y;\n"
      "  shared p;\n"
      "  private i;\n"
      "  p = &x;\n"
      "  x = 5;\n"
      "  i = 0;\n"
      "  while (i < 3) {\n"
      "    y = x;\n"
      "    x = y;\n"
      "    i = i + 1;\n"
      "    while (i < 2) { y = *p; i = i + 1; }\n"
      "  }\n"
      "  y = x;\n"
      "}\n";
  int crafted = 0;
  for (Mode m : {Mode::EGUPD, Mode::LZUPD}) {
    Session s(parse(loopSrc), m);
    AnalysisSet set = buildAnalyses(s, {"pta", "rd", "lv", "cp"});
    NodeId body = s.program().functions.at("main").body;
    auto indexOf = [&s, body](auto pred) {
      const auto& stmts = s.program().node(body).stmts;
      for (size_t i = 0; i < stmts.size(); ++i) {
        if (pred(s.program().node(stmts[i]))) return i;
      }
      REQUIRE(false);
      return size_t{0};
    };
    // 1: remove the def feeding the loop.
    s.removeAt(body, indexOf([](const ProgramNode& n) {
      return n.kind == NodeKind::Assign && n.lhs == "x" && n.rhs.k == Expr::K::Int;
    }));
    ACC(verifyAnalysesExact(set).empty());
    crafted++;
    // 2: insert a def inside the outer loop body.
    NodeId outer = 0;
    for (const auto& [id, node] : s.program().nodes)
      if (node.kind == NodeKind::While && node.cond.kids.size() == 2 &&
          node.cond.kids[1].num == 3)
        outer = node.body;
    REQUIRE(outer != 0);
    s.insertAt(outer, 0, detachedAssign(s.program(), "x", Expr::intLit(8)));
    ACC(verifyAnalysesExact(set).empty());
    crafted++;
    // 3: retarget the pointer read by the inner loop.
    size_t ptrIdx = indexOf([](const ProgramNode& n) {
      return n.kind == NodeKind::Assign && n.lhs == "p";
    });
    s.replaceAt(body, ptrIdx, detachedAssign(s.program(), "p", Expr::addrOf("y")));
    ACC(verifyAnalysesExact(set).empty());
    crafted++;
    // 4: remove the copy that closes the x/y cycle.
    s.removeAt(outer, 2);  // the x = y after the inserted def
    ACC(verifyAnalysesExact(set).empty());
    crafted++;
    // 5: swap the whole outer loop body for a fresh block.
    NodeId blk = detachedBlock(
        s.program(), {detachedAssign(s.program(), "y", Expr::var("x")),
                      detachedAssign(s.program(), "i", Expr::bin("+", Expr::var("i"),
                                                                 Expr::intLit(1)))});
    NodeId outerWhile = s.program().node(outer).parent;
    s.replaceSlot(outerWhile, Slot::WhileBody, blk);
    ACC(verifyAnalysesExact(set).empty());
    crafted++;
  }
  ACC(crafted >= 5);
  report(2, ok);
}

TEST_CASE("criterion 3: all six disciplines produce identical results") {
  bool ok = true;
  for (unsigned seed : {400u, 401u, 402u, 403u, 404u}) {
    GenConfig gc{seed, 120, 3, 6};
    std::string src = generateSource(gc);
    std::optional<RunReport> first;
    for (Mode m : allModes()) {
      RunConfig cfg;
      cfg.mode = m;
      RunReport rep = runPipeline(src, cfg);
      if (!first) {
        first = rep;
        continue;
      }
      CAPTURE(seed);
      CAPTURE(modeName(m));
      ACC(rep.factsDigest == first->factsDigest);
      ACC(rep.optimizedSource == first->optimizedSource);
      ACC(rep.opt == first->opt);
    }
  }
  report(3, ok);
}

TEST_CASE("criterion 4: optimization preserves observable semantics") {
  bool ok = true;
  for (unsigned seed : {500u, 501u, 502u, 503u, 504u}) {
    GenConfig gc{seed, 90, 2, 5};
    std::string src = generateSource(gc);
    RunConfig cfg;
    cfg.mode = Mode::EGUPD;
    RunReport rep = runPipeline(src, cfg);
    Program before = parse(src);
    Program after = parse(rep.optimizedSource);
    for (int threads : {2, 3, 4}) {
      RunResult baseline = interpret(before, threads, 0);
      CAPTURE(seed);
      CAPTURE(threads);
      ACC(baseline.ok);
      for (unsigned schedSeed = 0; schedSeed < 8; ++schedSeed) {
        CAPTURE(schedSeed);
        ACC(interpret(before, threads, schedSeed) == baseline);
        ACC(interpret(after, threads, schedSeed) == baseline);
      }
    }
  }
  report(4, ok);
}

TEST_CASE("criterion 5: stabilization cost separates the disciplines") {
  bool ok = true;
  for (unsigned seed : {600u}) {
    GenConfig gc{seed, 1000, 4, 12};
    std::string src = generateSource(gc);
    std::map<Mode, RunReport> reps;
    for (Mode m : {Mode::LZUPD, Mode::RPUPD, Mode::RPINV, Mode::EGINV}) {
      RunConfig cfg;
      cfg.mode = m;
      auto t0 = std::chrono::steady_clock::now();
      reps[m] = runPipeline(src, cfg);
      CAPTURE(modeName(m));
      ACC(seconds_since(t0) < 120.0);
      ACC(reps[m].countersConsistent);
    }
    const OptReport& opt = reps[Mode::LZUPD].opt;
    int opportunities = opt.barriersRemoved + opt.regionsMerged + opt.callsInlined;
    CAPTURE(opportunities);
    ACC(opportunities >= 10);
    long lzupd = reps[Mode::LZUPD].total.transferApplications;
    long rpupd = reps[Mode::RPUPD].total.transferApplications;
    long rpinv = reps[Mode::RPINV].total.transferApplications;
    long eginv = reps[Mode::EGINV].total.transferApplications;
    CAPTURE(lzupd);
    CAPTURE(rpupd);
    CAPTURE(rpinv);
    CAPTURE(eginv);
    ACC(2 * lzupd <= rpupd);
    ACC(2 * rpupd <= rpinv);
    ACC(rpinv <= eginv);
  }
  report(5, ok);
}

TEST_CASE("criterion 6: net changes equal the before/after snapshot difference") {
  bool ok = true;
  std::mt19937 rng(777);
  for (int trial = 0; trial < 10000; ++trial) {
    ChangeLog log;
    std::set<NodeId> nodes;
    std::set<EdgeRec> edges;
    for (NodeId n = 1; n <= 5; ++n)
      if (rng() % 2) nodes.insert(n);
    for (NodeId a = 1; a <= 3; ++a)
      if (rng() % 2) edges.insert({a, a + 1, EdgeKind::Cfg, {}});
    std::set<NodeId> nodes0 = nodes;
    std::set<EdgeRec> edges0 = edges;

    int steps = 1 + static_cast<int>(rng() % 7);
    for (int s = 0; s < steps; ++s) {
      ElemChange c;
      for (NodeId n = 1; n <= 5; ++n) {
        if (rng() % 3 != 0) continue;
        if (nodes.count(n)) {
          c.removedNodes.insert(n);
          nodes.erase(n);
        } else {
          c.addedNodes.insert(n);
          nodes.insert(n);
        }
      }
      for (NodeId a = 1; a <= 3; ++a) {
        if (rng() % 3 != 0) continue;
        EdgeRec e{a, a + 1, EdgeKind::Cfg, {}};
        if (edges.count(e)) {
          c.removedEdges.insert(e);
          edges.erase(e);
        } else {
          c.addedEdges.insert(e);
          edges.insert(e);
        }
      }
      log.append(c);
    }

    // Snapshot-diff oracle: membership differences between the first and
    // last snapshot, nothing else.
    ElemChange oracle;
    for (NodeId n = 1; n <= 5; ++n) {
      if (nodes.count(n) && !nodes0.count(n)) oracle.addedNodes.insert(n);
      if (!nodes.count(n) && nodes0.count(n)) oracle.removedNodes.insert(n);
    }
    for (NodeId a = 1; a <= 3; ++a) {
      EdgeRec e{a, a + 1, EdgeKind::Cfg, {}};
      if (edges.count(e) && !edges0.count(e)) oracle.addedEdges.insert(e);
      if (!edges.count(e) && edges0.count(e)) oracle.removedEdges.insert(e);
    }
    if (!(log.netChanges(0) == oracle)) {
      CAPTURE(trial);
      ACC(false);
      break;
    }
  }
  report(6, ok);
}

TEST_CASE("criterion 7: the optimizer source never touches the stabilization machinery") {
  bool ok = true;
  std::ifstream in(std::string(HOMEO_SOURCE_DIR) + "/src/barrelim.cpp");
  ACC(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  ACC(!text.empty());
  for (const char* token :
       {"stabilize", "Stabilizer", "notify", "handleUpdate", "registerAnalysis",
        "ensureStable", "netChanges", "ChangeLog", "ElemChange", "beginQuery",
        "Unstable", "cursor", "computeFullSnapshot", "compute()", "Mode::",
        "resetCounters", "changelog.hpp", "stabilizer.hpp"}) {
    if (text.find(token) != std::string::npos) {
      CAPTURE(token);
      ACC(false);
    }
  }
  report(7, ok);
}

TEST_CASE("criterion 8: phase information stays exact under every fuzzed delta") {
  bool ok = true;
  for (unsigned seed : {800u, 801u, 802u, 803u, 804u}) {
    GenConfig gc{seed, 60, 3, 6};
    Session s(parse(generateSource(gc)), Mode::LZINV);
    std::mt19937 rng(seed + 13);
    for (int d = 0; d < 50; ++d) {
      randomDelta(s, rng);
      PhaseInfo fresh = computePhases(s.program(), s.graph());
      if (!(s.phaseInfo() == fresh)) {
        CAPTURE(seed);
        CAPTURE(d);
        ACC(false);
        break;
      }
    }
  }
  report(8, ok);
}

TEST_CASE("criterion 9: phase-aware extensions shape the fixpoint") {
  bool ok = true;

  // Communication witness: the definition reaches the reader only over the
  // inter-task edge between the flush pair; no control path carries it.
  {
    Session s(parse(
                    "func main() {\n"
                    "  shared x;\n"
                    "  private c;\n"
                    "  private t;\n"
                    "  c = 0;\n"
                    "  parallel {\n"
                    "    if (c == 0) { x = 1; flush; } else { flush; t = x; }\n"
                    "  }\n"
                    "}\n"),
              Mode::EGINV);
    AnalysisSet set = buildAnalyses(s, {"pta", "rd"});
    NodeId def = 0, use = 0;
    for (const auto& [id, node] : s.program().nodes) {
      if (node.kind == NodeKind::Assign && node.lhs == "x") def = id;
      if (node.kind == NodeKind::Assign && node.lhs == "t") use = id;
    }
    REQUIRE(def != 0);
    REQUIRE(use != 0);
    Facts f = set.rd->in(use);
    ACC(f.has_value());
    ACC(f && f->count("x") && f->at("x").count(std::to_string(def)) == 1);
    ACC(!s.phaseInfo().interTask.empty());
    ACC(verifyAnalysesExact(set).empty());
  }

  // Uniformity: over a generated corpus, the shared part of OUT is identical
  // for every pair of barriers sharing a synchronization set.
  for (unsigned seed : {900u, 901u, 902u}) {
    GenConfig gc{seed, 80, 3, 6};
    Session s(parse(generateSource(gc)), Mode::EGINV);
    AnalysisSet set = buildAnalyses(s, {"pta", "rd", "lv", "cp"});
    const Program& p = s.program();
    for (const SyncSet& ss2 : s.phaseInfo().syncSets) {
      if (ss2.size() < 2) continue;
      for (DataflowAnalysis* a : {set.rd, set.lv, set.cp}) {
        std::optional<std::map<std::string, std::set<std::string>>> firstPart;
        for (NodeId b : ss2) {
          auto part = sharedPart(p, a->out(b));
          if (!firstPart) firstPart = part;
          else if (!(part == *firstPart)) {
            CAPTURE(seed);
            CAPTURE(a->name());
            CAPTURE(b);
            ACC(false);
          }
        }
      }
    }
  }
  report(9, ok);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "homeo/barrelim.hpp"
#include "homeo/parser.hpp"
#include "homeo/pipeline.hpp"

using namespace homeo;

namespace {

int countKind(const Program& p, NodeKind k) {
  int n = 0;
  for (const auto& [id, node] : p.nodes)
    if (node.kind == k) n++;
  return n;
}

struct Rig {
  Session session;
  AnalysisSet set;

  explicit Rig(const std::string& src, Mode m = Mode::EGUPD)
      : session(parse(src), m), set(buildAnalyses(session, {"pta", "rd", "lv"})) {}

  OptReport optimize() {
    BarrElimContext ctx{session, *set.rd, *set.lv, {}, 10000};
    return runBarrElim(ctx);
  }
};

}  // namespace

TEST_CASE("a doubled barrier is removed, the synchronizing one stays") {
  Rig r(
      "func main() {\n"
      "  shared x;\n"
      "  private t;\n"
      "  parallel { x = 1; barrier; barrier; t = x; }\n"
      "}\n");
  OptReport rep = r.optimize();
  CHECK(rep.barriersRemoved == 1);
  // Boundary pair + the one real synchronization barrier remain.
  CHECK(countKind(r.session.program(), NodeKind::Barrier) == 3);
  // Idempotent: nothing further to do.
  OptReport again = r.optimize();
  CHECK(again.barriersRemoved == 0);
  CHECK(again.regionsMerged == 0);
  CHECK(again.callsInlined == 0);
}

TEST_CASE("a barrier ordering a write before a read is kept") {
  Rig r(
      "func main() {\n"
      "  shared x;\n"
      "  private t;\n"
      "  parallel { x = 1; barrier; t = x; }\n"
      "}\n");
  OptReport rep = r.optimize();
  CHECK(rep.barriersRemoved == 0);
  CHECK(countKind(r.session.program(), NodeKind::Barrier) == 3);
}

TEST_CASE("a barrier ordering two writes to the same variable is kept") {
  Rig r(
      "func main() {\n"
      "  shared x;\n"
      "  parallel { x = 1; barrier; x = 2; }\n"
      "}\n");
  CHECK(r.optimize().barriersRemoved == 0);
}

TEST_CASE("a barrier separating accesses to unrelated variables is removed") {
  Rig r(
      "func main() {\n"
      "  shared x;\n"
      "  shared y;\n"
      "  parallel { x = 1; barrier; y = 2; }\n"
      "}\n");
  CHECK(r.optimize().barriersRemoved == 1);
}

TEST_CASE("pointer aliasing blocks removal even without a syntactic conflict") {
  Rig r(
      "func main() {\n"
      "  shared x;\n"
      "  shared p;\n"
      "  private t;\n"
      "  p = &x;\n"
      "  parallel { x = 1; barrier; t = *p; }\n"
      "}\n");
  // *p reads x, so the barrier orders a write before a read.
  CHECK(r.optimize().barriersRemoved == 0);
}

TEST_CASE("adjacent regions merge across neutral statements") {
  Rig r(
      "func main() {\n"
      "  shared x;\n"
      "  shared y;\n"
      "  private t;\n"
      "  parallel { x = 1; }\n"
      "  t = 5;\n"
      "  parallel { y = t; }\n"
      "}\n");
  OptReport rep = r.optimize();
  CHECK(rep.regionsMerged == 1);
  CHECK(countKind(r.session.program(), NodeKind::Parallel) == 1);
  // The junction's back-to-back barriers collapse once inside one region
  // (x and y are unrelated).
  CHECK(rep.barriersRemoved >= 1);
  // t = 5 moved inside the region.
  const Program& p = r.session.program();
  NodeId tAssign = 0;
  for (const auto& [id, node] : p.nodes)
    if (node.kind == NodeKind::Assign && node.lhs == "t") tAssign = id;
  REQUIRE(tAssign != 0);
  NodeId cur = tAssign;
  bool insideParallel = false;
  while (cur != 0) {
    if (p.node(cur).kind == NodeKind::Parallel) insideParallel = true;
    cur = p.node(cur).parent;
  }
  CHECK(insideParallel);
}

TEST_CASE("a shared statement between regions blocks the merge") {
  Rig r(
      "func main() {\n"
      "  shared x;\n"
      "  shared y;\n"
      "  parallel { x = 1; }\n"
      "  y = 5;\n"
      "  parallel { x = y; }\n"
      "}\n");
  OptReport rep = r.optimize();
  CHECK(rep.regionsMerged == 0);
  CHECK(countKind(r.session.program(), NodeKind::Parallel) == 2);
}

TEST_CASE("calls hiding barriers are inlined with renamed locals") {
  Rig r(
      "func work() {\n"
      "  private t;\n"
      "  t = 3;\n"
      "  x = t;\n"
      "  barrier;\n"
      "  y = x;\n"
      "}\n"
      "func main() {\n"
      "  shared x;\n"
      "  shared y;\n"
      "  parallel { call work(); }\n"
      "}\n");
  OptReport rep = r.optimize();
  CHECK(rep.callsInlined == 1);
  const Program& p = r.session.program();
  // The call site is gone; work() itself still exists.
  CHECK(countKind(p, NodeKind::Call) == 0);
  CHECK(p.functions.count("work") == 1);
  // The inlined private got a call-site-qualified name; shared names did not.
  bool renamed = false;
  for (const auto& [id, node] : p.nodes) {
    if (node.kind == NodeKind::Decl && node.declName.rfind("work__", 0) == 0) renamed = true;
  }
  CHECK(renamed);
  // The inlined barrier orders x = t before y = x: it must survive.
  CHECK(countKind(p, NodeKind::Barrier) == 3);
  // Still a valid program.
  CHECK_NOTHROW(parse(print(p)));
}

TEST_CASE("recursive and returning callees are left alone") {
  Rig r(
      "func rec() { x = 1; barrier; call rec(); }\n"
      "func ret() { x = 2; barrier; return; }\n"
      "func main() {\n"
      "  shared x;\n"
      "  parallel { call rec(); call ret(); }\n"
      "}\n");
  CHECK(r.optimize().callsInlined == 0);
  CHECK(countKind(r.session.program(), NodeKind::Call) == 3);
}

TEST_CASE("optimization reaches a fixpoint on a combined program") {
  Rig r(
      "func helper() { a = a + 1; barrier; barrier; b = a; }\n"
      "func main() {\n"
      "  shared a;\n"
      "  shared b;\n"
      "  private t;\n"
      "  parallel { call helper(); }\n"
      "  t = 1;\n"
      "  parallel { a = t; barrier; barrier; b = 7; }\n"
      "}\n");
  OptReport rep = r.optimize();
  CHECK(rep.callsInlined == 1);
  CHECK(rep.regionsMerged == 1);
  CHECK(rep.barriersRemoved >= 2);
  CHECK(rep.rounds < 10000);
  OptReport again = r.optimize();
  CHECK(again == OptReport{0, 0, 0, again.rounds});
  CHECK_NOTHROW(parse(print(r.session.program())));
}

TEST_CASE("the change-point callback fires every round") {
  Rig r(
      "func main() { shared x; parallel { x = 1; barrier; barrier; x = 2; } }\n");
  int points = 0;
  BarrElimContext ctx{r.session, *r.set.rd, *r.set.lv,
                      [&points](const std::string&) { points++; }, 10000};
  OptReport rep = runBarrElim(ctx);
  CHECK(points == rep.rounds);
  CHECK(rep.rounds >= 2);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "homeo/parser.hpp"

using namespace homeo;

namespace {

int countKind(const Program& p, NodeKind k) {
  int n = 0;
  for (const auto& [id, node] : p.nodes)
    if (node.kind == k) n++;
  return n;
}

}  // namespace

TEST_CASE("parse round-trips through print") {
  std::string src =
      "func helper() {\n"
      "  private t;\n"
      "  t = x + 1;\n"
      "  x = t;\n"
      "}\n"
      "func main() {\n"
      "  shared x;\n"
      "  shared p;\n"
      "  private i;\n"
      "  i = 0;\n"
      "  p = &x;\n"
      "  while (i < 3) {\n"
      "    i = i + 1;\n"
      "    if (i == 2) {\n"
      "      *p = 7;\n"
      "    } else {\n"
      "      call helper();\n"
      "    }\n"
      "  }\n"
      "  parallel {\n"
      "    barrier;\n"
      "    x = 1;\n"
      "    flush;\n"
      "    barrier;\n"
      "  }\n"
      "}\n";
  Program p1 = parse(src);
  std::string printed = print(p1);
  Program p2 = parse(printed);
  CHECK(p1.structurallyEqual(p2));
  CHECK(print(p2) == printed);
}

TEST_CASE("implicit parallel boundary barriers are materialized once") {
  Program p = parse(
      "func main() {\n"
      "  shared x;\n"
      "  parallel { x = 1; }\n"
      "}\n");
  // One barrier inserted at each end of the parallel body.
  CHECK(countKind(p, NodeKind::Barrier) == 2);
  NodeId par = 0;
  for (const auto& [id, node] : p.nodes)
    if (node.kind == NodeKind::Parallel) par = id;
  REQUIRE(par != 0);
  const auto& body = p.node(p.node(par).body);
  REQUIRE(body.stmts.size() == 3);
  CHECK(p.node(body.stmts.front()).kind == NodeKind::Barrier);
  CHECK(p.node(body.stmts.back()).kind == NodeKind::Barrier);

  // Re-parsing the printed form must not double the boundary barriers.
  Program p2 = parse(print(p));
  CHECK(countKind(p2, NodeKind::Barrier) == 2);
}

TEST_CASE("explicit boundary barriers are kept as-is") {
  Program p = parse(
      "func main() {\n"
      "  shared x;\n"
      "  parallel { barrier; x = 1; barrier; }\n"
      "}\n");
  CHECK(countKind(p, NodeKind::Barrier) == 2);
}

TEST_CASE("shared and private declarations map to locations") {
  Program p = parse(
      "func main() {\n"
      "  shared g;\n"
      "  private t;\n"
      "  t = g;\n"
      "  g = t;\n"
      "}\n");
  CHECK(p.isShared("g"));
  CHECK_FALSE(p.isShared("t"));
  CHECK(p.location("main", "g") == "g");
  CHECK(p.location("main", "t") == "main::t");
}

TEST_CASE("validation rejects bad programs") {
  CHECK_THROWS_AS(parse("func main() { call nosuch(); }\n"), ParseError);
  CHECK_THROWS_AS(parse("func main() { parallel { parallel { } } }\n"), ParseError);
  CHECK_THROWS_AS(parse("func main() { barrier; }\n"), ParseError);
  CHECK_THROWS_AS(parse("func main() { flush; }\n"), ParseError);
  // A function containing a parallel region may not be called from inside one.
  CHECK_THROWS_AS(parse("func f() { shared x; parallel { x = 1; } }\n"
                        "func main() { parallel { call f(); } }\n"),
                  ParseError);
  CHECK_THROWS_AS(parse("func main() { x = 1 }\n"), ParseError); // missing ;
  CHECK_THROWS_AS(parse("func main() { y = undeclared caret; }\n"), ParseError);
}

TEST_CASE("expression precedence and read/write sets") {
  Program p = parse(
      "func main() {\n"
      "  shared a;\n"
      "  shared b;\n"
      "  shared q;\n"
      "  q = &a;\n"
      "  b = *q + a;\n"
      "}\n");
  NodeId assignB = 0;
  for (const auto& [id, node] : p.nodes)
    if (node.kind == NodeKind::Assign && node.lhs == "b") assignB = id;
  REQUIRE(assignB != 0);
  auto reads = p.readSet(assignB);
  CHECK(reads.count("q") == 1);
  CHECK(reads.count("a") == 1);  // via deref of q (a is address-taken)
  auto writes = p.writeSet(assignB);
  CHECK(writes == std::set<std::string>{"b"});
}

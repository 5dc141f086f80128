#pragma once

#include <string>

#include "homeo/ast.hpp"

namespace homeo {

struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(int l, int c, const std::string& m)
      : std::runtime_error("parse error at " + std::to_string(l) + ":" + std::to_string(c) +
                           ": " + m),
        line(l),
        col(c) {}
};

// Parses mini-language source. Materializes implicit parallel entry/exit
// barriers (idempotently: only when the boundary statement is not already a
// barrier), then validates callee resolution, nesting, and barrier contexts.
Program parse(const std::string& text);

std::string print(const Program& p);

}  // namespace homeo

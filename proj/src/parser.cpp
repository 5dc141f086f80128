#include "homeo/parser.hpp"

#include <cctype>
#include <functional>
#include <sstream>

namespace homeo {
namespace {

struct Token {
  enum class T { Ident, Int, Punct, End };
  T t = T::End;
  std::string text;
  long num = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : src_(s) { advance(); }

  const Token& peek() const { return cur_; }

  Token take() {
    Token t = cur_;
    advance();
    return t;
  }

 private:
  void advance() {
    skipWs();
    cur_ = Token{};
    cur_.line = line_;
    cur_.col = col_;
    if (pos_ >= src_.size()) {
      cur_.t = Token::T::End;
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        bump();
      cur_.t = Token::T::Ident;
      cur_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
      cur_.t = Token::T::Int;
      cur_.text = src_.substr(start, pos_ - start);
      cur_.num = std::stol(cur_.text);
      return;
    }
    if (c == '=' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
      cur_.t = Token::T::Punct;
      cur_.text = "==";
      bump();
      bump();
      return;
    }
    cur_.t = Token::T::Punct;
    cur_.text = std::string(1, c);
    bump();
  }

  void skipWs() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token cur_;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lex_(text) {}

  Program run() {
    while (lex_.peek().t != Token::T::End) parseFunc();
    if (prog_.functions.empty()) fail("empty program");
    if (!prog_.functions.count("main")) fail("no `main` function");
    prog_.entryFunction = "main";
    validate();
    return std::move(prog_);
  }

 private:
  [[noreturn]] void fail(const std::string& m) {
    const Token& t = lex_.peek();
    throw ParseError(t.line, t.col, m);
  }

  void expectPunct(const std::string& p) {
    Token t = lex_.take();
    if (t.t != Token::T::Punct || t.text != p) {
      throw ParseError(t.line, t.col, "expected `" + p + "`, got `" + t.text + "`");
    }
  }

  bool peekPunct(const std::string& p) {
    return lex_.peek().t == Token::T::Punct && lex_.peek().text == p;
  }

  bool peekIdent(const std::string& w) {
    return lex_.peek().t == Token::T::Ident && lex_.peek().text == w;
  }

  std::string expectIdent() {
    Token t = lex_.take();
    if (t.t != Token::T::Ident) throw ParseError(t.line, t.col, "expected identifier");
    return t.text;
  }

  void parseFunc() {
    if (!peekIdent("func")) fail("expected `func`");
    lex_.take();
    std::string name = expectIdent();
    if (prog_.functions.count(name)) fail("redeclared function `" + name + "`");
    expectPunct("(");
    expectPunct(")");
    curFunc_ = name;
    declared_[name] = {};
    NodeId body = parseBlock(/*inParallel=*/false);
    Function fn;
    fn.name = name;
    fn.body = body;
    fn.entry = prog_.makeNode(NodeKind::Entry);
    fn.exit = prog_.makeNode(NodeKind::Exit);
    prog_.functions[name] = fn;
  }

  NodeId parseBlock(bool inParallel) {
    expectPunct("{");
    NodeId blk = prog_.makeNode(NodeKind::Block);
    while (!peekPunct("}")) {
      NodeId s = parseStmt(inParallel);
      prog_.node(s).parent = blk;
      prog_.node(blk).stmts.push_back(s);
    }
    expectPunct("}");
    return blk;
  }

  NodeId parseStmt(bool inParallel) {
    int line = lex_.peek().line;
    NodeId id = 0;
    if (peekIdent("shared") || peekIdent("private")) {
      bool shared = lex_.take().text == "shared";
      std::string name = expectIdent();
      if (!declared_[curFunc_].insert(name).second) {
        fail("redeclared variable `" + name + "` in same scope");
      }
      expectPunct(";");
      id = prog_.makeNode(NodeKind::Decl);
      prog_.node(id).sharedDecl = shared;
      prog_.node(id).declName = name;
      if (shared) prog_.sharedDecls.insert(name);
    } else if (peekIdent("if")) {
      lex_.take();
      expectPunct("(");
      Expr c = parseExpr();
      expectPunct(")");
      id = prog_.makeNode(NodeKind::If);
      prog_.node(id).cond = c;
      NodeId th = parseBlock(inParallel);
      prog_.node(th).parent = id;
      prog_.node(id).thenBlk = th;
      if (peekIdent("else")) {
        lex_.take();
        NodeId el = parseBlock(inParallel);
        prog_.node(el).parent = id;
        prog_.node(id).elseBlk = el;
      }
    } else if (peekIdent("while")) {
      lex_.take();
      expectPunct("(");
      Expr c = parseExpr();
      expectPunct(")");
      id = prog_.makeNode(NodeKind::While);
      prog_.node(id).cond = c;
      NodeId b = parseBlock(inParallel);
      prog_.node(b).parent = id;
      prog_.node(id).body = b;
    } else if (peekIdent("parallel")) {
      if (inParallel) fail("nested parallel regions are not supported");
      lex_.take();
      id = prog_.makeNode(NodeKind::Parallel);
      NodeId b = parseBlock(/*inParallel=*/true);
      prog_.node(b).parent = id;
      prog_.node(id).body = b;
      materializeImplicitBarriers(b);
    } else if (peekIdent("barrier")) {
      lex_.take();
      expectPunct(";");
      id = prog_.makeNode(NodeKind::Barrier);
    } else if (peekIdent("flush")) {
      lex_.take();
      expectPunct(";");
      id = prog_.makeNode(NodeKind::Flush);
    } else if (peekIdent("call")) {
      lex_.take();
      std::string callee = expectIdent();
      expectPunct("(");
      expectPunct(")");
      expectPunct(";");
      id = prog_.makeNode(NodeKind::Call);
      prog_.node(id).callee = callee;
    } else if (peekIdent("return")) {
      lex_.take();
      expectPunct(";");
      id = prog_.makeNode(NodeKind::Return);
    } else {
      // assign := ("*"? IDENT) "=" expr ";"
      bool deref = false;
      if (peekPunct("*")) {
        lex_.take();
        deref = true;
      }
      std::string lhs = expectIdent();
      expectPunct("=");
      Expr rhs = parseExpr();
      expectPunct(";");
      id = prog_.makeNode(NodeKind::Assign);
      prog_.node(id).derefLhs = deref;
      prog_.node(id).lhs = lhs;
      prog_.node(id).rhs = rhs;
    }
    prog_.node(id).line = line;
    return id;
  }

  Expr parsePrimary() {
    if (peekPunct("(")) {
      lex_.take();
      Expr e = parseExpr();
      expectPunct(")");
      return e;
    }
    if (peekPunct("&")) {
      lex_.take();
      return Expr::addrOf(expectIdent());
    }
    if (peekPunct("*")) {
      lex_.take();
      return Expr::deref(expectIdent());
    }
    Token t = lex_.take();
    if (t.t == Token::T::Int) return Expr::intLit(t.num);
    if (t.t == Token::T::Ident) return Expr::var(t.text);
    throw ParseError(t.line, t.col, "expected expression");
  }

  Expr parseExpr() {
    Expr e = parsePrimary();
    while (peekPunct("+") || peekPunct("-") || peekPunct("<") || peekPunct("==")) {
      std::string op = lex_.take().text;
      Expr r = parsePrimary();
      e = Expr::bin(op, std::move(e), std::move(r));
    }
    return e;
  }

  void materializeImplicitBarriers(NodeId body) {
    ProgramNode& b = prog_.node(body);
    bool needFront = b.stmts.empty() || prog_.node(b.stmts.front()).kind != NodeKind::Barrier;
    bool needBack = b.stmts.empty() || prog_.node(b.stmts.back()).kind != NodeKind::Barrier ||
                    (b.stmts.size() == 1 && needFront);
    if (needFront) {
      NodeId nb = prog_.makeNode(NodeKind::Barrier);
      prog_.node(nb).parent = body;
      prog_.node(body).stmts.insert(prog_.node(body).stmts.begin(), nb);
    }
    if (needBack) {
      NodeId nb = prog_.makeNode(NodeKind::Barrier);
      prog_.node(nb).parent = body;
      prog_.node(body).stmts.push_back(nb);
    }
  }

  void validate() {
    // Callee resolution plus consistent serial/parallel calling contexts.
    std::map<std::string, std::set<std::string>> callsSerial, callsParallel;
    std::map<std::string, bool> hasBarrier, hasParallel;
    for (const auto& [name, fn] : prog_.functions) {
      std::function<void(NodeId, bool)> walk = [&](NodeId id, bool par) {
        const ProgramNode& n = prog_.node(id);
        if (n.kind == NodeKind::Call) {
          if (!prog_.functions.count(n.callee)) {
            throw ParseError(n.line, 1, "unresolved callee `" + n.callee + "`");
          }
          (par ? callsParallel : callsSerial)[name].insert(n.callee);
        }
        if (n.kind == NodeKind::Barrier || n.kind == NodeKind::Flush) hasBarrier[name] = true;
        if (n.kind == NodeKind::Parallel) {
          hasParallel[name] = true;
          walk(n.body, true);
          return;
        }
        for (NodeId c : n.children()) walk(c, par);
      };
      walk(fn.body, false);
    }
    // Propagate calling contexts.
    std::map<std::string, int> ctx;  // bit 1 = serial, bit 2 = parallel
    ctx[prog_.entryFunction] = 1;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [name, fn] : prog_.functions) {
        int c = ctx[name];
        if (c == 0) continue;
        for (const std::string& callee : callsSerial[name]) {
          if ((ctx[callee] | c) != ctx[callee]) {
            ctx[callee] |= c;
            changed = true;
          }
        }
        for (const std::string& callee : callsParallel[name]) {
          if ((ctx[callee] | 2) != ctx[callee]) {
            ctx[callee] |= 2;
            changed = true;
          }
        }
      }
    }
    for (const auto& [name, fn] : prog_.functions) {
      bool barrierOrFlush = hasBarrier.count(name) && hasBarrier[name];
      bool lexParallel = hasParallel.count(name) && hasParallel[name];
      bool calledParallel = (ctx[name] & 2) != 0;
      bool calledSerial = (ctx[name] & 1) != 0;
      if (lexParallel && calledParallel) {
        throw ParseError(1, 1, "function `" + name + "` with a parallel region called from a parallel region");
      }
      // A bare barrier/flush (outside any lexical parallel block) is legal only
      // in functions reachable exclusively from parallel regions.
      bool bareSync = false;
      std::function<void(NodeId, bool)> walk2 = [&](NodeId id, bool par) {
        const ProgramNode& n = prog_.node(id);
        if ((n.kind == NodeKind::Barrier || n.kind == NodeKind::Flush) && !par) bareSync = true;
        if (n.kind == NodeKind::Parallel) {
          walk2(n.body, true);
          return;
        }
        for (NodeId c : n.children()) walk2(c, par);
      };
      walk2(fn.body, false);
      (void)barrierOrFlush;
      if (bareSync && calledSerial) {
        throw ParseError(1, 1, "function `" + name + "` uses barrier/flush but is reachable from serial context");
      }
    }
  }

  Lexer lex_;
  Program prog_;
  std::string curFunc_;
  std::map<std::string, std::set<std::string>> declared_;
};

void printExpr(std::ostream& os, const Expr& e, bool nested) {
  switch (e.k) {
    case Expr::K::Int:
      os << e.num;
      break;
    case Expr::K::Var:
      os << e.name;
      break;
    case Expr::K::AddrOf:
      os << "&" << e.name;
      break;
    case Expr::K::Deref:
      os << "*" << e.name;
      break;
    case Expr::K::Bin:
      if (nested) os << "(";
      printExpr(os, e.kids[0], true);
      os << " " << e.op << " ";
      printExpr(os, e.kids[1], true);
      if (nested) os << ")";
      break;
  }
}

void printStmt(std::ostream& os, const Program& p, NodeId id, int depth);

void printBlock(std::ostream& os, const Program& p, NodeId blk, int depth) {
  os << "{\n";
  for (NodeId s : p.node(blk).stmts) printStmt(os, p, s, depth + 1);
  for (int i = 0; i < depth; ++i) os << "  ";
  os << "}";
}

void printStmt(std::ostream& os, const Program& p, NodeId id, int depth) {
  const ProgramNode& n = p.node(id);
  for (int i = 0; i < depth; ++i) os << "  ";
  switch (n.kind) {
    case NodeKind::Decl:
      os << (n.sharedDecl ? "shared " : "private ") << n.declName << ";\n";
      break;
    case NodeKind::Assign:
      if (n.derefLhs) os << "*";
      os << n.lhs << " = ";
      printExpr(os, n.rhs, false);
      os << ";\n";
      break;
    case NodeKind::If:
      os << "if (";
      printExpr(os, n.cond, false);
      os << ") ";
      printBlock(os, p, n.thenBlk, depth);
      if (n.elseBlk) {
        os << " else ";
        printBlock(os, p, n.elseBlk, depth);
      }
      os << "\n";
      break;
    case NodeKind::While:
      os << "while (";
      printExpr(os, n.cond, false);
      os << ") ";
      printBlock(os, p, n.body, depth);
      os << "\n";
      break;
    case NodeKind::Parallel:
      os << "parallel ";
      printBlock(os, p, n.body, depth);
      os << "\n";
      break;
    case NodeKind::Barrier:
      os << "barrier;\n";
      break;
    case NodeKind::Flush:
      os << "flush;\n";
      break;
    case NodeKind::Call:
      os << "call " << n.callee << "();\n";
      break;
    case NodeKind::Return:
      os << "return;\n";
      break;
    default:
      throw IrError("unprintable node kind");
  }
}

}  // namespace

Program parse(const std::string& text) { return Parser(text).run(); }

std::string print(const Program& p) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [name, fn] : p.functions) {
    if (!first) os << "\n";
    first = false;
    os << "func " << name << "() ";
    printBlock(os, p, fn.body, 0);
    os << "\n";
  }
  return os.str();
}

}  // namespace homeo

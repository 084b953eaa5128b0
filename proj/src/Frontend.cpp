//===- Frontend.cpp -------------------------------------------------------==//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "polyred/Frontend.h"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <memory>
#include <sstream>

namespace polyred {

namespace {

//===----------------------------------------------------------------------===//
// Lexer
//===----------------------------------------------------------------------===//

enum class Tok {
  Ident, Int,
  LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Comma, Semi, Colon,
  Plus, Minus, Star, Slash, Amp, Pipe, Caret,
  Lt, Le, Assign, PlusPlus,
  PlusAssign, MinusAssign, StarAssign, AmpAssign, PipeAssign, CaretAssign,
  Eof
};

struct Token {
  Tok kind;
  std::string text;
  int64_t value = 0;
  int line, col;
};

class Lexer {
public:
  explicit Lexer(const std::string &src) : src_(src) { next(); }

  const Token &peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    next();
    return t;
  }

private:
  void next() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n')
          ++pos_;
        continue;
      }
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
        continue;
      }
      break;
    }
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::Eof;
      tok_.text = "<eof>";
      return;
    }
    char c = src_[pos_];
    auto single = [&](Tok k) {
      tok_.kind = k;
      tok_.text = std::string(1, c);
      advance(1);
    };
    auto withAssign = [&](Tok plain, Tok assign) {
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
        tok_.kind = assign;
        tok_.text = std::string(1, c) + "=";
        advance(2);
      } else {
        single(plain);
      }
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        advanceOne();
      tok_.kind = Tok::Ident;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advanceOne();
      tok_.kind = Tok::Int;
      tok_.text = src_.substr(start, pos_ - start);
      tok_.value = std::stoll(tok_.text);
      return;
    }
    switch (c) {
    case '(': return single(Tok::LParen);
    case ')': return single(Tok::RParen);
    case '{': return single(Tok::LBrace);
    case '}': return single(Tok::RBrace);
    case '[': return single(Tok::LBracket);
    case ']': return single(Tok::RBracket);
    case ',': return single(Tok::Comma);
    case ';': return single(Tok::Semi);
    case ':': return single(Tok::Colon);
    case '/': return withAssign(Tok::Slash, Tok::Eof); // "/=" unsupported
    case '&': return withAssign(Tok::Amp, Tok::AmpAssign);
    case '|': return withAssign(Tok::Pipe, Tok::PipeAssign);
    case '^': return withAssign(Tok::Caret, Tok::CaretAssign);
    case '*': return withAssign(Tok::Star, Tok::StarAssign);
    case '-': return withAssign(Tok::Minus, Tok::MinusAssign);
    case '+':
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '+') {
        tok_.kind = Tok::PlusPlus;
        tok_.text = "++";
        advance(2);
        return;
      }
      return withAssign(Tok::Plus, Tok::PlusAssign);
    case '<':
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
        tok_.kind = Tok::Le;
        tok_.text = "<=";
        advance(2);
        return;
      }
      return single(Tok::Lt);
    case '=': return single(Tok::Assign);
    default:
      throw ParseError(std::string("unexpected character '") + c + "'", line_,
                       col_);
    }
  }

  void advanceOne() {
    ++pos_;
    ++col_;
  }
  void advance(size_t n) {
    pos_ += n;
    col_ += static_cast<int>(n);
  }

  const std::string &src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

//===----------------------------------------------------------------------===//
// Expression trees (pre-lowering)
//===----------------------------------------------------------------------===//

struct ExprNode;
using ExprPtr = std::unique_ptr<ExprNode>;

struct ExprNode {
  enum class Kind { Literal, Param, Access, Bin } kind;
  int64_t literal = 0;
  std::string name; // param or array
  std::vector<AffineExpr> subscripts;
  OpKind op = OpKind::Add;
  ExprPtr lhs, rhs;
};

struct SourceStmt {
  std::string label; // empty when unlabeled
  std::string array;
  std::vector<AffineExpr> subscripts;
  std::optional<OpKind> compound; // for "+=" and friends
  ExprPtr rhs;
  int line, col;
};

struct BodyItem {
  enum class Kind { Loop, Stmt } kind;
  size_t index;
};

struct LoopInfo {
  std::string iterator;
  AffineExpr upper; // exclusive, normalized
  std::vector<BodyItem> items;
  std::vector<size_t> children; // loop indices
};

//===----------------------------------------------------------------------===//
// Parser
//===----------------------------------------------------------------------===//

class Parser {
public:
  explicit Parser(const std::string &src) : lex_(src) {}

  Scop run(const ParseOptions &opts);

private:
  [[noreturn]] void fail(const std::string &msg) {
    throw ParseError(msg, lex_.peek().line, lex_.peek().col);
  }
  Token expect(Tok kind, const std::string &what) {
    if (lex_.peek().kind != kind)
      fail("expected " + what + ", found '" + lex_.peek().text + "'");
    return lex_.take();
  }
  bool accept(Tok kind) {
    if (lex_.peek().kind != kind)
      return false;
    lex_.take();
    return true;
  }

  void parseBlock(size_t loopIndex);
  void parseLoop(size_t parentLoop);
  void parseStmt(size_t parentLoop);

  // Affine expressions: iterators are resolved through the normalization
  // substitution, so every occurrence of a loop counter stands for the
  // zero-based counter plus the original lower bound.
  AffineExpr parseAffine() { return parseAffineAdd(); }
  AffineExpr parseAffineAdd();
  AffineExpr parseAffineMul();
  AffineExpr parseAffineUnary();

  ExprPtr parseExpr() { return parseOr(); }
  ExprPtr parseOr();
  ExprPtr parseXor();
  ExprPtr parseAnd();
  ExprPtr parseAdd();
  ExprPtr parseMul();
  ExprPtr parseUnary();
  ExprPtr parsePrimary();

  bool isIterator(const std::string &n) const {
    return substitution_.count(n) != 0;
  }
  bool isParam(const std::string &n) const {
    return std::find(params_.begin(), params_.end(), n) != params_.end();
  }

  void noteArray(const std::string &name, size_t rank, int line, int col) {
    if (isParam(name) || isIterator(name))
      throw ParseError("'" + name + "' cannot be used as an array", line, col);
    auto [it, inserted] = arrays_.emplace(name, rank);
    if (!inserted && it->second != rank)
      throw ParseError("array '" + name + "' used with inconsistent rank",
                       line, col);
  }

  Lexer lex_;
  std::string scopName_;
  std::vector<std::string> params_;
  std::map<std::string, size_t> arrays_;
  std::map<std::string, AffineExpr> substitution_; // iterator -> value
  std::vector<std::string> activeIters_;
  std::vector<Constraint> activeBounds_;

  std::vector<LoopInfo> loops_; // loops_[0] is the root
  std::vector<SourceStmt> stmts_;
  std::vector<std::vector<std::string>> stmtIters_;
  std::vector<std::vector<Constraint>> stmtBounds_;

  friend Scop buildScop(Parser &p, const ParseOptions &opts);
};

AffineExpr Parser::parseAffineAdd() {
  AffineExpr e = parseAffineMul();
  while (true) {
    if (accept(Tok::Plus))
      e = e + parseAffineMul();
    else if (accept(Tok::Minus))
      e = e - parseAffineMul();
    else
      return e;
  }
}

AffineExpr Parser::parseAffineMul() {
  AffineExpr e = parseAffineUnary();
  while (lex_.peek().kind == Tok::Star) {
    Token t = lex_.take();
    AffineExpr f = parseAffineUnary();
    if (e.isConstant())
      e = f * e.constant();
    else if (f.isConstant())
      e = e * f.constant();
    else
      throw ParseError("non-affine product", t.line, t.col);
  }
  return e;
}

AffineExpr Parser::parseAffineUnary() {
  if (accept(Tok::Minus))
    return -parseAffineUnary();
  if (lex_.peek().kind == Tok::Int)
    return AffineExpr(lex_.take().value);
  if (accept(Tok::LParen)) {
    AffineExpr e = parseAffineAdd();
    expect(Tok::RParen, "')'");
    return e;
  }
  Token t = expect(Tok::Ident, "identifier or literal");
  if (isIterator(t.text))
    return substitution_.at(t.text);
  if (isParam(t.text))
    return AffineExpr::var(t.text);
  throw ParseError("unknown identifier '" + t.text +
                       "' in affine expression (not an iterator or parameter)",
                   t.line, t.col);
}

ExprPtr Parser::parseOr() {
  ExprPtr e = parseXor();
  while (lex_.peek().kind == Tok::Pipe) {
    lex_.take();
    auto n = std::make_unique<ExprNode>();
    n->kind = ExprNode::Kind::Bin;
    n->op = OpKind::Or;
    n->lhs = std::move(e);
    n->rhs = parseXor();
    e = std::move(n);
  }
  return e;
}

ExprPtr Parser::parseXor() {
  ExprPtr e = parseAnd();
  while (lex_.peek().kind == Tok::Caret) {
    lex_.take();
    auto n = std::make_unique<ExprNode>();
    n->kind = ExprNode::Kind::Bin;
    n->op = OpKind::Xor;
    n->lhs = std::move(e);
    n->rhs = parseAnd();
    e = std::move(n);
  }
  return e;
}

ExprPtr Parser::parseAnd() {
  ExprPtr e = parseAdd();
  while (lex_.peek().kind == Tok::Amp) {
    lex_.take();
    auto n = std::make_unique<ExprNode>();
    n->kind = ExprNode::Kind::Bin;
    n->op = OpKind::And;
    n->lhs = std::move(e);
    n->rhs = parseAdd();
    e = std::move(n);
  }
  return e;
}

ExprPtr Parser::parseAdd() {
  ExprPtr e = parseMul();
  while (true) {
    OpKind op;
    if (lex_.peek().kind == Tok::Plus)
      op = OpKind::Add;
    else if (lex_.peek().kind == Tok::Minus)
      op = OpKind::Sub;
    else
      return e;
    lex_.take();
    auto n = std::make_unique<ExprNode>();
    n->kind = ExprNode::Kind::Bin;
    n->op = op;
    n->lhs = std::move(e);
    n->rhs = parseMul();
    e = std::move(n);
  }
}

ExprPtr Parser::parseMul() {
  ExprPtr e = parseUnary();
  while (true) {
    OpKind op;
    if (lex_.peek().kind == Tok::Star)
      op = OpKind::Mul;
    else if (lex_.peek().kind == Tok::Slash)
      op = OpKind::Div;
    else
      return e;
    lex_.take();
    auto n = std::make_unique<ExprNode>();
    n->kind = ExprNode::Kind::Bin;
    n->op = op;
    n->lhs = std::move(e);
    n->rhs = parseUnary();
    e = std::move(n);
  }
}

ExprPtr Parser::parseUnary() {
  if (accept(Tok::Minus)) {
    // -e lowers as 0 - e
    auto n = std::make_unique<ExprNode>();
    n->kind = ExprNode::Kind::Bin;
    n->op = OpKind::Sub;
    n->lhs = std::make_unique<ExprNode>();
    n->lhs->kind = ExprNode::Kind::Literal;
    n->lhs->literal = 0;
    n->rhs = parseUnary();
    return n;
  }
  return parsePrimary();
}

ExprPtr Parser::parsePrimary() {
  if (lex_.peek().kind == Tok::Int) {
    auto n = std::make_unique<ExprNode>();
    n->kind = ExprNode::Kind::Literal;
    n->literal = lex_.take().value;
    return n;
  }
  if (accept(Tok::LParen)) {
    ExprPtr e = parseExpr();
    expect(Tok::RParen, "')'");
    return e;
  }
  Token t = expect(Tok::Ident, "expression");
  if (t.text == "min" || t.text == "max") {
    expect(Tok::LParen, "'('");
    auto n = std::make_unique<ExprNode>();
    n->kind = ExprNode::Kind::Bin;
    n->op = t.text == "min" ? OpKind::Min : OpKind::Max;
    n->lhs = parseExpr();
    expect(Tok::Comma, "','");
    n->rhs = parseExpr();
    expect(Tok::RParen, "')'");
    return n;
  }
  if (isIterator(t.text))
    throw ParseError("iterator '" + t.text + "' cannot be used as a value",
                     t.line, t.col);
  if (isParam(t.text)) {
    auto n = std::make_unique<ExprNode>();
    n->kind = ExprNode::Kind::Param;
    n->name = t.text;
    return n;
  }
  // Array access; a bare identifier is a rank-0 (scalar) array.
  auto n = std::make_unique<ExprNode>();
  n->kind = ExprNode::Kind::Access;
  n->name = t.text;
  while (accept(Tok::LBracket)) {
    n->subscripts.push_back(parseAffine());
    expect(Tok::RBracket, "']'");
  }
  noteArray(n->name, n->subscripts.size(), t.line, t.col);
  return n;
}

void Parser::parseStmt(size_t parentLoop) {
  SourceStmt s;
  s.line = lex_.peek().line;
  s.col = lex_.peek().col;
  Token first = expect(Tok::Ident, "statement");
  if (lex_.peek().kind == Tok::Colon) {
    lex_.take();
    s.label = first.text;
    first = expect(Tok::Ident, "assignment target");
  }
  s.array = first.text;
  while (accept(Tok::LBracket)) {
    s.subscripts.push_back(parseAffine());
    expect(Tok::RBracket, "']'");
  }
  noteArray(s.array, s.subscripts.size(), first.line, first.col);
  switch (lex_.peek().kind) {
  case Tok::Assign: break;
  case Tok::PlusAssign: s.compound = OpKind::Add; break;
  case Tok::MinusAssign: s.compound = OpKind::Sub; break;
  case Tok::StarAssign: s.compound = OpKind::Mul; break;
  case Tok::AmpAssign: s.compound = OpKind::And; break;
  case Tok::PipeAssign: s.compound = OpKind::Or; break;
  case Tok::CaretAssign: s.compound = OpKind::Xor; break;
  default: fail("expected assignment operator");
  }
  lex_.take();
  s.rhs = parseExpr();
  expect(Tok::Semi, "';'");

  stmts_.push_back(std::move(s));
  stmtIters_.push_back(activeIters_);
  stmtBounds_.push_back(activeBounds_);
  loops_[parentLoop].items.push_back(
      {BodyItem::Kind::Stmt, stmts_.size() - 1});
}

void Parser::parseLoop(size_t parentLoop) {
  expect(Tok::LParen, "'('");
  Token iter = expect(Tok::Ident, "loop iterator");
  if (isIterator(iter.text) || isParam(iter.text) || arrays_.count(iter.text))
    throw ParseError("iterator '" + iter.text + "' shadows an existing name",
                     iter.line, iter.col);
  expect(Tok::Assign, "'='");
  AffineExpr lb = parseAffine();
  expect(Tok::Semi, "';'");
  Token cmpVar = expect(Tok::Ident, "loop iterator");
  if (cmpVar.text != iter.text)
    throw ParseError("loop condition must test '" + iter.text + "'",
                     cmpVar.line, cmpVar.col);
  bool inclusive;
  if (accept(Tok::Lt))
    inclusive = false;
  else if (accept(Tok::Le))
    inclusive = true;
  else
    fail("expected '<' or '<='");
  AffineExpr ub = parseAffine();
  if (inclusive)
    ub = ub + 1;
  expect(Tok::Semi, "';'");
  Token incVar = expect(Tok::Ident, "loop iterator");
  if (incVar.text != iter.text)
    throw ParseError("loop increment must update '" + iter.text + "'",
                     incVar.line, incVar.col);
  expect(Tok::PlusPlus, "'++'");
  expect(Tok::RParen, "')'");

  // Normalize to a zero-based counter: the source iterator denotes
  // counter + lb from here on, and the trip count becomes ub - lb.
  AffineExpr upper = ub - lb;

  loops_.push_back(LoopInfo{iter.text, upper, {}, {}});
  size_t self = loops_.size() - 1;
  loops_[parentLoop].children.push_back(self);
  loops_[parentLoop].items.push_back(
      {BodyItem::Kind::Loop, loops_[parentLoop].children.size() - 1});

  substitution_[iter.text] = AffineExpr::var(iter.text) + lb;
  activeIters_.push_back(iter.text);
  activeBounds_.push_back(ge0(AffineExpr::var(iter.text)));
  activeBounds_.push_back(ge0(upper - AffineExpr::var(iter.text) - 1));

  expect(Tok::LBrace, "'{'");
  parseBlock(self);

  substitution_.erase(iter.text);
  activeIters_.pop_back();
  activeBounds_.pop_back();
  activeBounds_.pop_back();
}

void Parser::parseBlock(size_t loopIndex) {
  while (!accept(Tok::RBrace)) {
    if (lex_.peek().kind == Tok::Eof)
      fail("unexpected end of input (missing '}')");
    if (lex_.peek().kind == Tok::Ident && lex_.peek().text == "for") {
      lex_.take();
      parseLoop(loopIndex);
    } else {
      parseStmt(loopIndex);
    }
  }
}

//===----------------------------------------------------------------------===//
// Lowering
//===----------------------------------------------------------------------===//

ValueRef lowerExpr(const ExprNode &node, std::vector<Instruction> &out) {
  switch (node.kind) {
  case ExprNode::Kind::Literal:
    return node.literal;
  case ExprNode::Kind::Param:
    return ParamRef{node.name};
  case ExprNode::Kind::Access: {
    int id = static_cast<int>(out.size());
    out.push_back(LoadInst{id, node.name, node.subscripts, false});
    return InstRef{id};
  }
  case ExprNode::Kind::Bin: {
    ValueRef l = lowerExpr(*node.lhs, out);
    ValueRef r = lowerExpr(*node.rhs, out);
    int id = static_cast<int>(out.size());
    out.push_back(BinOpInst{id, node.op, l, r, false});
    return InstRef{id};
  }
  }
  throw std::logic_error("unreachable");
}

std::vector<Instruction> lowerStmt(const SourceStmt &s) {
  std::vector<Instruction> insts;
  ValueRef value;
  if (s.compound) {
    // x op= e  desugars to  x = x op e, loading x first.
    int loadId = static_cast<int>(insts.size());
    insts.push_back(LoadInst{loadId, s.array, s.subscripts, false});
    ValueRef rhs = lowerExpr(*s.rhs, insts);
    int opId = static_cast<int>(insts.size());
    insts.push_back(BinOpInst{opId, *s.compound, InstRef{loadId}, rhs, false});
    value = InstRef{opId};
  } else {
    value = lowerExpr(*s.rhs, insts);
  }
  int storeId = static_cast<int>(insts.size());
  insts.push_back(StoreInst{storeId, value, s.array, s.subscripts});
  return insts;
}

/// Re-ids an instruction list appended at `idOffset`.
void appendShifted(std::vector<Instruction> &dst,
                   const std::vector<Instruction> &src) {
  int offset = static_cast<int>(dst.size());
  auto shiftRef = [&](ValueRef v) -> ValueRef {
    if (const auto *r = std::get_if<InstRef>(&v))
      return InstRef{r->id + offset};
    return v;
  };
  for (Instruction inst : src) {
    std::visit(
        [&](auto &i) {
          i.id += offset;
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, BinOpInst>) {
            i.lhs = shiftRef(i.lhs);
            i.rhs = shiftRef(i.rhs);
          } else if constexpr (std::is_same_v<T, StoreInst>) {
            i.value = shiftRef(i.value);
          }
        },
        inst);
    dst.push_back(std::move(inst));
  }
}

Scop buildScop(Parser &p, const ParseOptions &opts) {
  Scop scop;
  scop.name = p.scopName_;
  scop.parameters = p.params_;
  scop.arrays = p.arrays_;

  // Decide statement grouping: one statement per source statement, or one
  // compound statement per maximal run of adjacent source statements.
  struct Group {
    std::vector<size_t> sources;
  };
  std::vector<Group> groups;
  std::vector<size_t> groupOfSource(p.stmts_.size());

  std::function<void(size_t, LoopNode &)> build = [&](size_t loopIdx,
                                                      LoopNode &node) {
    const LoopInfo &info = p.loops_[loopIdx];
    node.iterator = info.iterator;
    node.upper = info.upper;
    size_t i = 0;
    while (i < info.items.size()) {
      const BodyItem &item = info.items[i];
      if (item.kind == BodyItem::Kind::Loop) {
        node.children.emplace_back();
        node.items.push_back(
            {LoopNode::Item::Kind::Loop, node.children.size() - 1});
        build(info.children[item.index], node.children.back());
        ++i;
        continue;
      }
      Group g;
      g.sources.push_back(item.index);
      if (opts.fuse) {
        while (i + 1 < info.items.size() &&
               info.items[i + 1].kind == BodyItem::Kind::Stmt) {
          ++i;
          g.sources.push_back(info.items[i].index);
        }
      }
      groups.push_back(g);
      for (size_t s : g.sources)
        groupOfSource[s] = groups.size() - 1;
      node.items.push_back({LoopNode::Item::Kind::Stmt, groups.size() - 1});
      ++i;
    }
  };
  scop.root = LoopNode{};
  build(0, scop.root);

  // Materialize statements in group order; assign generated names.
  int anon = 0;
  std::map<std::string, bool> usedNames;
  for (const Group &g : groups) {
    Statement stmt;
    std::vector<std::string> labels;
    for (size_t src : g.sources) {
      const SourceStmt &s = p.stmts_[src];
      labels.push_back(!s.label.empty() ? s.label
                                        : "S" + std::to_string(anon++));
      appendShifted(stmt.instructions, lowerStmt(s));
    }
    std::ostringstream name;
    for (size_t i = 0; i < labels.size(); ++i)
      name << (i ? "_" : "") << labels[i];
    stmt.name = name.str();
    if (usedNames[stmt.name])
      throw ParseError("duplicate statement label '" + stmt.name + "'",
                       p.stmts_[g.sources[0]].line, p.stmts_[g.sources[0]].col);
    usedNames[stmt.name] = true;

    size_t first = g.sources[0];
    stmt.iterators = p.stmtIters_[first];
    stmt.domain = IntSet(Space(stmt.iterators, scop.parameters),
                         p.stmtBounds_[first]);
    scop.statements.push_back(std::move(stmt));
  }

  // Positions within the innermost body.
  std::function<void(const LoopNode &)> positions = [&](const LoopNode &node) {
    for (size_t pos = 0; pos < node.items.size(); ++pos) {
      const LoopNode::Item &item = node.items[pos];
      if (item.kind == LoopNode::Item::Kind::Stmt)
        scop.statements[item.index].textualPosition = static_cast<int>(pos);
      else
        positions(node.children[item.index]);
    }
  };
  positions(scop.root);
  return scop;
}

} // namespace

Scop Parser::run(const ParseOptions &opts) {
  Token kw = expect(Tok::Ident, "'scop'");
  if (kw.text != "scop")
    throw ParseError("expected 'scop'", kw.line, kw.col);
  scopName_ = expect(Tok::Ident, "scop name").text;
  expect(Tok::LParen, "'('");
  if (!accept(Tok::RParen)) {
    while (true) {
      Token t = expect(Tok::Ident, "parameter name");
      if (isParam(t.text))
        throw ParseError("duplicate parameter '" + t.text + "'", t.line, t.col);
      params_.push_back(t.text);
      if (accept(Tok::RParen))
        break;
      expect(Tok::Comma, "','");
    }
  }
  expect(Tok::LBrace, "'{'");
  loops_.push_back(LoopInfo{}); // root pseudo-loop
  parseBlock(0);
  if (lex_.peek().kind != Tok::Eof)
    fail("trailing input after scop");
  if (stmts_.empty())
    fail("scop contains no statements");
  return buildScop(*this, opts);
}

Scop parse(const std::string &text, const ParseOptions &opts) {
  Parser p(text);
  return p.run(opts);
}

//===----------------------------------------------------------------------===//
// Pretty-printing
//===----------------------------------------------------------------------===//

namespace {

int precedenceOf(OpKind op) {
  switch (op) {
  case OpKind::Mul:
  case OpKind::Div: return 5;
  case OpKind::Add:
  case OpKind::Sub: return 4;
  case OpKind::And: return 3;
  case OpKind::Xor: return 2;
  case OpKind::Or:  return 1;
  case OpKind::Min:
  case OpKind::Max: return 6; // call syntax, never needs parens
  }
  return 0;
}

std::string printValue(const Statement &stmt, const ValueRef &v, int parentPrec,
                       bool rightOperand);

std::string printInst(const Statement &stmt, int id, int parentPrec,
                      bool rightOperand) {
  const Instruction &inst = stmt.byId(id);
  if (const auto *l = std::get_if<LoadInst>(&inst)) {
    std::string s = l->array;
    for (const AffineExpr &e : l->subscripts)
      s += "[" + e.str() + "]";
    return s;
  }
  const auto &b = std::get<BinOpInst>(inst);
  if (b.op == OpKind::Min || b.op == OpKind::Max)
    return operatorSymbol(b.op) + "(" + printValue(stmt, b.lhs, 0, false) +
           ", " + printValue(stmt, b.rhs, 0, false) + ")";
  int prec = precedenceOf(b.op);
  std::string s = printValue(stmt, b.lhs, prec, false) + " " +
                  operatorSymbol(b.op) + " " +
                  printValue(stmt, b.rhs, prec, true);
  bool needParens = prec < parentPrec || (prec == parentPrec && rightOperand);
  return needParens ? "(" + s + ")" : s;
}

std::string printValue(const Statement &stmt, const ValueRef &v, int parentPrec,
                       bool rightOperand) {
  if (const auto *lit = std::get_if<int64_t>(&v)) {
    if (*lit < 0)
      return "(0 - " + std::to_string(-*lit) + ")";
    return std::to_string(*lit);
  }
  if (const auto *p = std::get_if<ParamRef>(&v))
    return p->name;
  return printInst(stmt, std::get<InstRef>(v).id, parentPrec, rightOperand);
}

void printBody(const Scop &scop, const LoopNode &node, int indent,
               std::ostringstream &os) {
  std::string pad(indent, ' ');
  for (const LoopNode::Item &item : node.items) {
    if (item.kind == LoopNode::Item::Kind::Loop) {
      const LoopNode &child = node.children[item.index];
      os << pad << "for (" << child.iterator << " = 0; " << child.iterator
         << " < " << child.upper.str() << "; " << child.iterator << "++) {\n";
      printBody(scop, child, indent + 2, os);
      os << pad << "}\n";
    } else {
      const Statement &stmt = scop.statements[item.index];
      size_t storeIdx = 0;
      size_t numStores = stmt.stores().size();
      for (const Instruction &inst : stmt.instructions) {
        const auto *st = std::get_if<StoreInst>(&inst);
        if (!st)
          continue;
        os << pad;
        if (numStores == 1)
          os << stmt.name << ": ";
        else
          os << stmt.name << "_" << storeIdx << ": ";
        os << st->array;
        for (const AffineExpr &e : st->subscripts)
          os << "[" << e.str() << "]";
        os << " = " << printValue(stmt, st->value, 0, false) << ";\n";
        ++storeIdx;
      }
    }
  }
}

} // namespace

std::string prettyPrint(const Scop &scop) {
  std::ostringstream os;
  os << "scop " << scop.name << "(";
  for (size_t i = 0; i < scop.parameters.size(); ++i)
    os << (i ? ", " : "") << scop.parameters[i];
  os << ") {\n";
  printBody(scop, scop.root, 2, os);
  os << "}\n";
  return os.str();
}

} // namespace polyred

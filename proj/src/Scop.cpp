//===- Scop.cpp -----------------------------------------------------------==//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "polyred/Scop.h"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace polyred {

Operator operatorInfo(OpKind kind) {
  switch (kind) {
  case OpKind::Sub:
  case OpKind::Div:
    return {kind, false, false};
  default:
    return {kind, true, true};
  }
}

std::string operatorSymbol(OpKind kind) {
  switch (kind) {
  case OpKind::Add: return "+";
  case OpKind::Mul: return "*";
  case OpKind::Sub: return "-";
  case OpKind::Div: return "/";
  case OpKind::Min: return "min";
  case OpKind::Max: return "max";
  case OpKind::And: return "&";
  case OpKind::Or:  return "|";
  case OpKind::Xor: return "^";
  }
  return "?";
}

int instructionId(const Instruction &inst) {
  return std::visit([](const auto &i) { return i.id; }, inst);
}

std::vector<const LoadInst *> Statement::loads() const {
  std::vector<const LoadInst *> r;
  for (const Instruction &inst : instructions)
    if (const auto *l = std::get_if<LoadInst>(&inst))
      r.push_back(l);
  return r;
}

std::vector<const StoreInst *> Statement::stores() const {
  std::vector<const StoreInst *> r;
  for (const Instruction &inst : instructions)
    if (const auto *s = std::get_if<StoreInst>(&inst))
      r.push_back(s);
  return r;
}

const Statement &Scop::stmt(const std::string &name) const {
  for (const Statement &s : statements)
    if (s.name == name)
      return s;
  throw std::out_of_range("no statement named '" + name + "'");
}

int Scop::stmtIndex(const std::string &name) const {
  for (size_t i = 0; i < statements.size(); ++i)
    if (statements[i].name == name)
      return static_cast<int>(i);
  return -1;
}

//===----------------------------------------------------------------------===//
// Access ranges
//===----------------------------------------------------------------------===//

static AccessRange rangeOf(const std::string &array,
                           const std::vector<AffineExpr> &subscripts,
                           const Statement &stmt) {
  const Space &dspace = stmt.domain.space();
  std::vector<std::string> aNames;
  for (size_t k = 0; k < subscripts.size(); ++k)
    aNames.push_back("a" + std::to_string(k));

  Space combined = dspace;
  combined.dims.insert(combined.dims.end(), aNames.begin(), aNames.end());

  IntSet withAccess(combined);
  for (const BasicSet &piece : stmt.domain.pieces()) {
    BasicSet p(combined);
    for (const Constraint &c : piece.constraints())
      p.addConstraint(c);
    for (size_t k = 0; k < subscripts.size(); ++k)
      p.addConstraint(eq(AffineExpr::var(aNames[k]), subscripts[k]));
    withAccess.addPiece(std::move(p));
  }
  IntSet image = withAccess.projectOut(stmt.iterators)
                     .withSpace(Space(aNames, dspace.params));
  return {array, std::move(image)};
}

AccessRange accessRange(const LoadInst &load, const Statement &stmt) {
  return rangeOf(load.array, load.subscripts, stmt);
}
AccessRange accessRange(const StoreInst &store, const Statement &stmt) {
  return rangeOf(store.array, store.subscripts, stmt);
}
AccessRange accessRangeOf(const Instruction &inst, const Statement &stmt) {
  if (const auto *l = std::get_if<LoadInst>(&inst))
    return accessRange(*l, stmt);
  if (const auto *s = std::get_if<StoreInst>(&inst))
    return accessRange(*s, stmt);
  throw std::invalid_argument("instruction has no memory access");
}

bool rangesOverlap(const AccessRange &a, const AccessRange &b, OverlapMode mode,
                   const std::map<std::string, int64_t> &params) {
  if (a.array != b.array)
    return false;
  assert(a.indices.space().dims.size() == b.indices.space().dims.size() &&
         "one array used at two ranks");
  IntSet meet = a.indices.intersect(b.indices);
  if (mode == OverlapMode::IntegerExact)
    return !meet.isEmptyAt(params);
  return !meet.isEmpty().empty; // uncertain nonempty counts as overlap
}

//===----------------------------------------------------------------------===//
// Original schedule
//===----------------------------------------------------------------------===//

size_t Schedule::paddedDim() const {
  size_t d = 0;
  for (const auto &[name, r] : rows)
    d = std::max(d, r.size());
  return d;
}

std::vector<AffineExpr> Schedule::timestamp(const std::string &stmt) const {
  auto it = rows.find(stmt);
  assert(it != rows.end() && "statement has no schedule row");
  std::vector<AffineExpr> t = it->second;
  t.resize(paddedDim(), AffineExpr(0));
  return t;
}

std::string Schedule::str() const {
  std::ostringstream os;
  for (const auto &[name, r] : rows) {
    os << name << ": (";
    for (size_t i = 0; i < r.size(); ++i)
      os << (i ? ", " : "") << r[i].str();
    os << ")\n";
  }
  return os.str();
}

static void walkOriginal(const LoopNode &node, std::vector<AffineExpr> &prefix,
                         const Scop &scop, Schedule &sched) {
  for (size_t pos = 0; pos < node.items.size(); ++pos) {
    const LoopNode::Item &item = node.items[pos];
    prefix.emplace_back(static_cast<int64_t>(pos));
    if (item.kind == LoopNode::Item::Kind::Stmt) {
      sched.rows[scop.statements[item.index].name] = prefix;
    } else {
      const LoopNode &child = node.children[item.index];
      prefix.push_back(AffineExpr::var(child.iterator));
      walkOriginal(child, prefix, scop, sched);
      prefix.pop_back();
    }
    prefix.pop_back();
  }
}

Schedule originalSchedule(const Scop &scop) {
  Schedule sched;
  std::vector<AffineExpr> prefix;
  walkOriginal(scop.root, prefix, scop, sched);
  assert(sched.rows.size() == scop.statements.size() &&
         "loop tree does not cover all statements");
  return sched;
}

} // namespace polyred

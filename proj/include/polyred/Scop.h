//===- Scop.h - Static control part IR ------------------------*- C++ -*-===//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// In-memory representation of a static control part: statements with integer
// iteration domains, SSA instruction lists over loads/binops/stores, affine
// access functions, and the original loop structure.
//
//===----------------------------------------------------------------------===//

#ifndef POLYRED_SCOP_H
#define POLYRED_SCOP_H

#include "polyred/IntSet.h"

#include <memory>
#include <variant>
#include <vector>

namespace polyred {

enum class OpKind { Add, Mul, Sub, Div, Min, Max, And, Or, Xor };

struct Operator {
  OpKind kind;
  bool isAssociative;
  bool isCommutative;
};

/// The fixed operator table: add/mul/min/max/and/or/xor are associative and
/// commutative, sub/div are neither.
Operator operatorInfo(OpKind kind);
std::string operatorSymbol(OpKind kind);

/// A value feeding an instruction: an earlier instruction in the same
/// statement, an integer literal, or a SCoP parameter.
struct InstRef {
  int id;
  bool operator==(const InstRef &) const = default;
};
struct ParamRef {
  std::string name;
  bool operator==(const ParamRef &) const = default;
};
using ValueRef = std::variant<InstRef, int64_t, ParamRef>;

inline bool isInstruction(const ValueRef &v) {
  return std::holds_alternative<InstRef>(v);
}

struct LoadInst {
  int id;
  std::string array;
  std::vector<AffineExpr> subscripts;
  bool hasOutsideUses = false;
};

struct BinOpInst {
  int id;
  OpKind op;
  ValueRef lhs, rhs;
  bool hasOutsideUses = false;
};

struct StoreInst {
  int id;
  ValueRef value;
  std::string array;
  std::vector<AffineExpr> subscripts;
};

using Instruction = std::variant<LoadInst, BinOpInst, StoreInst>;

int instructionId(const Instruction &inst);

/// A polyhedral statement: an iteration domain and an SSA instruction list.
/// A "simple" statement has exactly one store; a compound statement (built by
/// frontend fusion) may have several.
struct Statement {
  std::string name;
  std::vector<std::string> iterators; // outermost first
  IntSet domain;                      // over iterators + scop parameters
  std::vector<Instruction> instructions;
  int textualPosition = 0; // position among siblings in the innermost body

  size_t depth() const { return iterators.size(); }
  std::vector<const LoadInst *> loads() const;
  std::vector<const StoreInst *> stores() const;
  const Instruction &byId(int id) const { return instructions[id]; }
};

/// Loop structure for the original schedule and code generation. Bounds are
/// normalized to 0 <= iter < upper with stride 1.
struct LoopNode {
  std::string iterator;              // empty for the root
  AffineExpr upper;                  // exclusive upper bound
  struct Item {
    enum class Kind { Loop, Stmt } kind;
    size_t index; // into loops (child nodes) or statement list
  };
  std::vector<Item> items;
  std::vector<LoopNode> children;
};

struct Scop {
  std::string name;
  std::vector<std::string> parameters;
  std::vector<Statement> statements;
  LoopNode root;
  /// Array name -> subscript rank. Scalars are rank-0 arrays.
  std::map<std::string, size_t> arrays;

  const Statement &stmt(const std::string &name) const;
  int stmtIndex(const std::string &name) const;
};

/// The reachable subscript vectors of one memory instruction over its
/// statement's domain, tagged with the array identity. Subscript dims are
/// named a0, a1, ...
struct AccessRange {
  std::string array;
  IntSet indices; // dims a0.. with the scop parameters
};

AccessRange accessRange(const LoadInst &load, const Statement &stmt);
AccessRange accessRange(const StoreInst &store, const Statement &stmt);
AccessRange accessRangeOf(const Instruction &inst, const Statement &stmt);

enum class OverlapMode { Rational, IntegerExact };

/// False for distinct arrays; otherwise non-emptiness of the range
/// intersection. Rational mode reports uncertain intersections as
/// overlapping.
bool rangesOverlap(const AccessRange &a, const AccessRange &b,
                   OverlapMode mode = OverlapMode::Rational,
                   const std::map<std::string, int64_t> &params = {});

//===----------------------------------------------------------------------===//
// Schedules
//===----------------------------------------------------------------------===//

/// Per-statement affine timestamp functions. Execution order of the
/// transformed program is the lexicographic order of (zero-padded)
/// timestamps.
struct Schedule {
  /// Rows are affine in the statement's iterators and the scop parameters.
  std::map<std::string, std::vector<AffineExpr>> rows;

  size_t paddedDim() const;
  /// Timestamp of a statement, zero-padded to the schedule's common length.
  std::vector<AffineExpr> timestamp(const std::string &stmt) const;
  std::string str() const;
};

/// The source-order schedule: 2d+1 rows interleaving textual positions with
/// loop counters, so lexicographic timestamp order equals execution order.
Schedule originalSchedule(const Scop &scop);

} // namespace polyred

#endif // POLYRED_SCOP_H

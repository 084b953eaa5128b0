//===- ReductionDetect.h - Reduction-like computation detection -*- C++ -*-===//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// A data-flow analysis over a statement's SSA instruction list that tracks,
// for every load, how the loaded value flows through computation into each
// instruction. A load that reaches a store through exactly one chain of a
// single associative and commutative operator, and whose range overlaps the
// store's range while no other load touches that shared memory, forms a
// reduction-like computation (statement, load, operator, store).
//
//===----------------------------------------------------------------------===//

#ifndef POLYRED_REDUCTIONDETECT_H
#define POLYRED_REDUCTIONDETECT_H

#include "polyred/Scop.h"

namespace polyred {

/// How a load's value was used up to (and by) some instruction.
struct FlowSymbol {
  enum class Kind {
    Unused,      // not used by the instruction
    Loaded,      // loaded but not yet combined
    Invalidated, // used in a non-reassociable way
    Chain        // exactly one chain of one associative+commutative operator
  };
  Kind kind = Kind::Unused;
  OpKind op = OpKind::Add; // meaningful only for Chain

  bool operator==(const FlowSymbol &o) const {
    return kind == o.kind && (kind != Kind::Chain || op == o.op);
  }
  static FlowSymbol unused() { return {Kind::Unused, OpKind::Add}; }
  static FlowSymbol loaded() { return {Kind::Loaded, OpKind::Add}; }
  static FlowSymbol invalidated() { return {Kind::Invalidated, OpKind::Add}; }
  static FlowSymbol chain(OpKind op) { return {Kind::Chain, op}; }
  std::string str() const;
};

/// Map from each load id in the statement to its flow symbol.
using FlowState = std::map<int, FlowSymbol>;

/// The flow state at one instruction of the statement.
FlowState flow(const Statement &stmt, int instId);

/// A reduction-like computation: the load feeds the store through one chain
/// of `op`, and both access (partially) the same memory.
struct ReductionInfo {
  std::string stmt;
  int loadId;
  OpKind op;
  int storeId;

  bool operator==(const ReductionInfo &) const = default;
};

/// All reduction-like computations of the scop, in deterministic order
/// (statement order, then load order). Compound statements additionally
/// require every other store to be unreached by the load and disjoint from
/// the reduction location.
std::vector<ReductionInfo> detect(const Scop &scop);

std::string accessText(const Statement &stmt, int instId);

} // namespace polyred

#endif // POLYRED_REDUCTIONDETECT_H

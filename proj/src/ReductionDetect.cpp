//===- ReductionDetect.cpp ------------------------------------------------==//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "polyred/ReductionDetect.h"

#include <algorithm>
#include <cassert>

namespace polyred {

std::string FlowSymbol::str() const {
  switch (kind) {
  case Kind::Unused: return "bot";
  case Kind::Loaded: return "up";
  case Kind::Invalidated: return "top";
  case Kind::Chain: return operatorSymbol(op);
  }
  return "?";
}

namespace {

/// Per-statement analysis context with memoized flow states and ranges.
class FlowAnalysis {
public:
  explicit FlowAnalysis(const Statement &stmt) : stmt_(stmt) {
    for (const Instruction &inst : stmt.instructions)
      if (std::holds_alternative<LoadInst>(inst) ||
          std::holds_alternative<StoreInst>(inst))
        ranges_.emplace(instructionId(inst), accessRangeOf(inst, stmt));
  }

  const AccessRange &range(int id) const { return ranges_.at(id); }

  const FlowState &at(int id) {
    auto it = memo_.find(id);
    if (it != memo_.end())
      return it->second;
    return memo_.emplace(id, compute(id)).first->second;
  }

  const Statement &stmt() const { return stmt_; }

private:
  /// The flow state of a value operand: loads map themselves, non-instruction
  /// operands contribute "unused" for every load.
  FlowSymbol operandSymbol(const ValueRef &v, int loadId) {
    if (!isInstruction(v))
      return FlowSymbol::unused();
    return at(std::get<InstRef>(v).id).at(loadId);
  }

  FlowState compute(int id) {
    FlowState state;
    const Instruction &inst = stmt_.byId(id);
    for (const LoadInst *l : stmt_.loads())
      state[l->id] = symbolFor(inst, l->id);
    return state;
  }

  FlowSymbol symbolFor(const Instruction &inst, int loadId) {
    if (const auto *l = std::get_if<LoadInst>(&inst)) {
      if (l->id != loadId)
        return FlowSymbol::unused();
      return l->hasOutsideUses ? FlowSymbol::invalidated()
                               : FlowSymbol::loaded();
    }
    if (const auto *b = std::get_if<BinOpInst>(&inst)) {
      FlowSymbol sy = operandSymbol(b->lhs, loadId);
      FlowSymbol sz = operandSymbol(b->rhs, loadId);
      auto pairIs = [&](FlowSymbol::Kind a, FlowSymbol::Kind bk) {
        return (sy.kind == a && sz.kind == bk) ||
               (sy.kind == bk && sz.kind == a);
      };
      if (sy.kind == FlowSymbol::Kind::Unused &&
          sz.kind == FlowSymbol::Kind::Unused)
        return FlowSymbol::unused();
      Operator op = operatorInfo(b->op);
      if (!(op.isCommutative && op.isAssociative))
        return FlowSymbol::invalidated();
      if (b->hasOutsideUses)
        return FlowSymbol::invalidated();
      if (pairIs(FlowSymbol::Kind::Loaded, FlowSymbol::Kind::Unused))
        return FlowSymbol::chain(b->op);
      if (pairIs(FlowSymbol::Kind::Chain, FlowSymbol::Kind::Unused)) {
        OpKind chainOp =
            sy.kind == FlowSymbol::Kind::Chain ? sy.op : sz.op;
        if (chainOp == b->op)
          return FlowSymbol::chain(b->op);
      }
      return FlowSymbol::invalidated();
    }
    const auto &st = std::get<StoreInst>(inst);
    if (!isInstruction(st.value))
      return FlowSymbol::unused();
    const AccessRange &loadRange = range(loadId);
    const AccessRange &storeRange = range(st.id);
    if (!rangesOverlap(loadRange, storeRange))
      return FlowSymbol::invalidated();
    for (const LoadInst *other : stmt_.loads()) {
      if (other->id == loadId)
        continue;
      if (tripleOverlap(range(other->id), loadRange, storeRange))
        return FlowSymbol::invalidated();
    }
    return operandSymbol(st.value, loadId);
  }

  /// Nonempty ran(a) n ran(b) n ran(c); uncertain intersections count.
  bool tripleOverlap(const AccessRange &a, const AccessRange &b,
                     const AccessRange &c) {
    if (a.array != b.array || b.array != c.array)
      return false;
    IntSet meet = a.indices.intersect(b.indices).intersect(c.indices);
    return !meet.isEmpty().empty;
  }

  const Statement &stmt_;
  std::map<int, AccessRange> ranges_;
  std::map<int, FlowState> memo_;
};

} // namespace

FlowState flow(const Statement &stmt, int instId) {
  FlowAnalysis fa(stmt);
  return fa.at(instId);
}

std::vector<ReductionInfo> detect(const Scop &scop) {
  std::vector<ReductionInfo> result;
  for (const Statement &stmt : scop.statements) {
    FlowAnalysis fa(stmt);
    std::vector<const StoreInst *> stores = stmt.stores();

    std::vector<ReductionInfo> candidates;
    for (const StoreInst *store : stores) {
      const FlowState &state = fa.at(store->id);
      for (const LoadInst *load : stmt.loads()) {
        FlowSymbol sym = state.at(load->id);
        if (sym.kind != FlowSymbol::Kind::Chain)
          continue;
        // Compound statements: the load must not flow into any other store's
        // value, and no other store may touch the reduction location.
        // Uncertain overlap with a different store kills the candidate.
        bool valid = true;
        for (const StoreInst *other : stores) {
          if (other->id == store->id)
            continue;
          if (isInstruction(other->value) &&
              !(fa.at(std::get<InstRef>(other->value).id).at(load->id) ==
                FlowSymbol::unused())) {
            valid = false;
            break;
          }
          if (other->array == load->array) {
            IntSet meet = fa.range(other->id)
                              .indices.intersect(fa.range(store->id).indices)
                              .intersect(fa.range(load->id).indices);
            if (!meet.isEmpty().empty) {
              valid = false;
              break;
            }
          }
        }
        if (valid)
          candidates.push_back({stmt.name, load->id, sym.op, store->id});
      }
    }

    // Multiple reduction-like computations in one statement are kept only
    // when their locations are pairwise disjoint; on overlap the first in
    // instruction order wins.
    std::sort(candidates.begin(), candidates.end(),
              [](const ReductionInfo &a, const ReductionInfo &b) {
                return std::tie(a.loadId, a.storeId) <
                       std::tie(b.loadId, b.storeId);
              });
    std::vector<ReductionInfo> kept;
    for (const ReductionInfo &cand : candidates) {
      bool disjoint = true;
      for (const ReductionInfo &prev : kept) {
        for (int a : {cand.loadId, cand.storeId}) {
          for (int b : {prev.loadId, prev.storeId}) {
            if (rangesOverlap(fa.range(a), fa.range(b)))
              disjoint = false;
          }
        }
      }
      if (disjoint)
        kept.push_back(cand);
    }
    result.insert(result.end(), kept.begin(), kept.end());
  }
  return result;
}

std::string accessText(const Statement &stmt, int instId) {
  const Instruction &inst = stmt.byId(instId);
  std::string array;
  const std::vector<AffineExpr> *subs = nullptr;
  if (const auto *l = std::get_if<LoadInst>(&inst)) {
    array = l->array;
    subs = &l->subscripts;
  } else if (const auto *s = std::get_if<StoreInst>(&inst)) {
    array = s->array;
    subs = &s->subscripts;
  } else {
    return "<no access>";
  }
  std::string r = array;
  for (const AffineExpr &e : *subs)
    r += "[" + e.str() + "]";
  return r;
}

} // namespace polyred

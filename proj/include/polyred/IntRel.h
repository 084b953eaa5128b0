//===- IntRel.h - Integer relations bounded by affine constraints -*- C++ -*-=//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef POLYRED_INTREL_H
#define POLYRED_INTREL_H

#include "polyred/IntSet.h"

namespace polyred {

/// A binary relation on integer points: pairs (x, y) with x over the input
/// dims and y over the output dims, satisfying affine constraints over the
/// concatenated space. Input and output dim names must be disjoint; the
/// relation round-trips losslessly through its IntSet representation.
class IntRel {
public:
  IntRel() = default;
  IntRel(std::vector<std::string> inDims, std::vector<std::string> outDims,
         std::vector<std::string> params);

  /// Wraps a set over [in..., out...] dims as a relation.
  static IntRel fromSet(IntSet set, size_t numIn);

  const std::vector<std::string> &inDims() const { return inDims_; }
  const std::vector<std::string> &outDims() const { return outDims_; }
  const IntSet &asSet() const { return set_; }

  void addPiece(BasicSet piece) { set_.addPiece(std::move(piece)); }
  void addPiece(const std::vector<Constraint> &cons);

  bool hasPieces() const { return set_.hasPieces(); }
  IntSet::EmptinessResult isEmpty() const { return set_.isEmpty(); }
  bool isEmptyAt(const std::map<std::string, int64_t> &params) const {
    return set_.isEmptyAt(params);
  }

  IntRel unite(const IntRel &o) const;
  IntRel intersect(const IntRel &o) const;
  IntRel subtract(const IntRel &o) const;
  IntRel simplify() const;

  /// {x -> z : exists y, x -> y in this and y -> z in o}. Arities must match;
  /// output dims keep o's names (primed further on a clash with the input
  /// names).
  IntRel compose(const IntRel &o) const;

  /// Image of `s` (a set over dims matching the input arity; names are
  /// matched positionally). Result is a set over the output dims.
  IntSet apply(const IntSet &s) const;

  IntRel inverse() const;

  /// Difference vectors {y - x : x -> y}. Requires equal in/out arity.
  /// Result dims are named d0, d1, ...
  IntSet deltas() const;

  /// Restricts inputs / outputs to a set (matched positionally).
  IntRel intersectDomain(const IntSet &s) const;
  IntRel intersectRange(const IntSet &s) const;

  /// Pairs of points, each of arity |in| + |out|.
  std::vector<std::vector<int64_t>>
  enumerate(const std::map<std::string, int64_t> &params = {}) const;

  std::string str() const;

private:
  std::vector<std::string> inDims_, outDims_;
  IntSet set_; // over [inDims..., outDims...] with the params
};

/// The strict lexicographic order {x -> y : x << y} on `d`-dimensional
/// vectors, as a union of d conjunctive pieces. Dims are named x0.. / y0..
/// unless custom names are given.
IntRel lexLt(size_t d);
IntRel lexLt(const std::vector<std::string> &inNames,
             const std::vector<std::string> &outNames);

/// Pads the shorter timestamp vector with zeros (the lexicographic order on
/// mixed-dimension timestamps compares zero-extended vectors).
void padTimestamps(std::vector<AffineExpr> &a, std::vector<AffineExpr> &b);

/// Constraint pieces for "a << b" over already-built timestamp expressions,
/// with decidable constant comparisons pruned. Piece k states a_i = b_i for
/// i < k and a_k < b_k.
std::vector<std::vector<Constraint>>
lexLtPieces(std::vector<AffineExpr> a, std::vector<AffineExpr> b);

/// Constraints for "a = b" on all (zero-padded) dims; nullopt when the
/// equality is decidably false.
std::optional<std::vector<Constraint>>
lexEqConstraints(std::vector<AffineExpr> a, std::vector<AffineExpr> b);

/// Transitive closure of a relation with equal in/out arity, restricted to
/// domain x domain when `domain` is non-null. If every disjunct of deltas(r)
/// pins a constant distance vector, the closure {x -> x + sum_i k_i d_i} is
/// built and flagged exact when the multipliers are affinely recoverable from
/// the distances; otherwise a box-hull over-approximation scaled by k >= 1 is
/// returned with exact = false. The result is always a superset of the true
/// closure.
struct ClosureResult {
  IntRel rel;
  bool exact;
};
ClosureResult transitiveClosure(const IntRel &r, const IntSet *domain = nullptr);

} // namespace polyred

#endif // POLYRED_INTREL_H

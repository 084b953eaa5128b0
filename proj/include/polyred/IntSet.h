//===- IntSet.h - Integer point sets bounded by affine constraints -*- C++ -*-=//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// An IntSet is the set of integer points satisfying a disjunction of
// conjunctive affine constraint systems over a named space. Emptiness is
// decided rationally by Fourier-Motzkin elimination with integer tightening;
// the rational answer can report an integer-empty set as nonempty, which is
// flagged through a certainty bit. An exact decision procedure by enumeration
// is available once all parameters are bound.
//
//===----------------------------------------------------------------------===//

#ifndef POLYRED_INTSET_H
#define POLYRED_INTSET_H

#include "polyred/AffineExpr.h"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace polyred {

struct SpaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnboundedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ordered dimension names: set (iterator-like) dims followed by parameters.
struct Space {
  std::vector<std::string> dims;
  std::vector<std::string> params;

  Space() = default;
  Space(std::vector<std::string> dims, std::vector<std::string> params)
      : dims(std::move(dims)), params(std::move(params)) {}

  bool operator==(const Space &o) const = default;
  bool hasDim(const std::string &name) const;
  bool hasParam(const std::string &name) const;
  bool hasName(const std::string &name) const {
    return hasDim(name) || hasParam(name);
  }
  /// All names, dims first.
  std::vector<std::string> allNames() const;
};

enum class ConstraintKind { GE, EQ }; // expr >= 0 | expr == 0

struct Constraint {
  AffineExpr expr;
  ConstraintKind kind = ConstraintKind::GE;

  bool operator==(const Constraint &o) const = default;
  std::string str() const;
};

inline Constraint ge0(AffineExpr e) { return {std::move(e), ConstraintKind::GE}; }
inline Constraint eq0(AffineExpr e) { return {std::move(e), ConstraintKind::EQ}; }
/// a <= b
inline Constraint le(const AffineExpr &a, const AffineExpr &b) { return ge0(b - a); }
/// a < b
inline Constraint lt(const AffineExpr &a, const AffineExpr &b) {
  return ge0(b - a - 1);
}
inline Constraint eq(const AffineExpr &a, const AffineExpr &b) { return eq0(a - b); }

/// One conjunctive piece: the integer points satisfying every constraint.
class BasicSet {
public:
  BasicSet() = default;
  explicit BasicSet(Space space) : space_(std::move(space)) {}
  BasicSet(Space space, std::vector<Constraint> cons);

  const Space &space() const { return space_; }
  const std::vector<Constraint> &constraints() const { return cons_; }

  void addConstraint(Constraint c);

  /// Divides every constraint by the gcd of its dimension coefficients and
  /// floors the constant (for inequalities). Returns false if a constraint
  /// became unsatisfiable (e.g. an equality whose gcd does not divide the
  /// constant, or a violated constant constraint), i.e. the piece is empty.
  bool tighten();

  /// True if `point` (values for space dims, then params) satisfies all
  /// constraints.
  bool contains(const std::vector<int64_t> &point) const;

  BasicSet renameDim(const std::string &from, const std::string &to) const;
  std::string str() const;

private:
  Space space_;
  std::vector<Constraint> cons_;
  friend class IntSet;
};

/// Union of conjunctive pieces over a common space. No piece list means the
/// empty set; a single piece with no constraints is the universe.
class IntSet {
public:
  IntSet() = default;
  explicit IntSet(Space space) : space_(std::move(space)) {}
  /// Single-piece set.
  IntSet(Space space, std::vector<Constraint> cons);

  static IntSet empty(Space space) { return IntSet(std::move(space)); }
  static IntSet universe(Space space);

  const Space &space() const { return space_; }
  const std::vector<BasicSet> &pieces() const { return pieces_; }
  bool hasPieces() const { return !pieces_.empty(); }

  void addPiece(BasicSet piece);

  /// Points in both sets. Requires identical spaces.
  IntSet intersect(const IntSet &o) const;
  /// Points in either set. Requires identical spaces.
  IntSet unite(const IntSet &o) const;
  /// Points of this set not in `o`. Requires identical spaces.
  IntSet subtract(const IntSet &o) const;

  /// Drops pieces that are rationally empty. Deterministic; points preserved.
  IntSet simplify() const;

  /// The single concrete point a piece pins through unit-coefficient
  /// equalities, if any (all dims pinned, no parameter involvement).
  static std::optional<std::vector<int64_t>> pointOf(const BasicSet &piece);

  /// Single-piece bounding box from constant per-dimension bounds (sides
  /// without a constant bound are left open). A superset of the set.
  IntSet boxHull() const;

  /// Rational emptiness by Fourier-Motzkin elimination (all dims and params
  /// are projected out). `certain` is false only when the rational shadow is
  /// nonempty but no integer witness was found by bounded search.
  struct EmptinessResult {
    bool empty;
    bool certain;
  };
  EmptinessResult isEmpty() const;

  /// Exact integer emptiness with all parameters bound. Throws
  /// UnboundedError if a dimension is unbounded after substitution.
  bool isEmptyAt(const std::map<std::string, int64_t> &params) const;

  bool contains(const std::vector<int64_t> &point) const;

  /// Existentially projects out the given dims (innermost-declared first).
  /// The result space drops them. Rational with integer tightening: never
  /// removes integer points, may add non-points.
  IntSet projectOut(const std::vector<std::string> &names) const;

  /// Substitutes a dimension or parameter by a constant; the name leaves the
  /// space.
  IntSet substitute(const std::string &name, int64_t value) const;
  IntSet substituteParams(const std::map<std::string, int64_t> &bindings) const;

  IntSet renameDim(const std::string &from, const std::string &to) const;
  /// Reorders/retypes the space without touching constraints. All constraint
  /// names must remain present.
  IntSet withSpace(Space space) const;

  /// All integer points, sorted lexicographically. All parameters must be
  /// bound by `params`; throws UnboundedError if the set is unbounded after
  /// substitution.
  std::vector<std::vector<int64_t>>
  enumerate(const std::map<std::string, int64_t> &params = {}) const;

  std::string str() const;

private:
  Space space_;
  std::vector<BasicSet> pieces_;
};

} // namespace polyred

#endif // POLYRED_INTSET_H

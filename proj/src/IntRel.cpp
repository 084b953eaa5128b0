//===- IntRel.cpp ---------------------------------------------------------==//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "polyred/IntRel.h"

#include <algorithm>
#include <cassert>
#include <functional>
#include <set>
#include <sstream>

namespace polyred {

static std::vector<std::string> concatNames(std::vector<std::string> a,
                                            const std::vector<std::string> &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

static std::vector<std::string>
mergeParams(const std::vector<std::string> &a, const std::vector<std::string> &b) {
  std::vector<std::string> r = a;
  for (const std::string &p : b)
    if (std::find(r.begin(), r.end(), p) == r.end())
      r.push_back(p);
  return r;
}

/// Renames each name that occurs in `taken` by appending primes.
static std::vector<std::string>
disjointFrom(std::vector<std::string> names, const std::vector<std::string> &taken) {
  for (std::string &n : names)
    while (std::find(taken.begin(), taken.end(), n) != taken.end() ||
           std::count(names.begin(), names.end(), n) > 1)
      n += "'";
  return names;
}

IntRel::IntRel(std::vector<std::string> inDims, std::vector<std::string> outDims,
               std::vector<std::string> params)
    : inDims_(std::move(inDims)), outDims_(std::move(outDims)) {
  for (const std::string &o : outDims_)
    if (std::find(inDims_.begin(), inDims_.end(), o) != inDims_.end())
      throw SpaceError("relation input/output dim names must be disjoint: '" +
                       o + "'");
  set_ = IntSet(Space(concatNames(inDims_, outDims_), std::move(params)));
}

IntRel IntRel::fromSet(IntSet set, size_t numIn) {
  if (numIn > set.space().dims.size())
    throw SpaceError("fromSet: input arity exceeds set dimensionality");
  IntRel r;
  r.inDims_.assign(set.space().dims.begin(), set.space().dims.begin() + numIn);
  r.outDims_.assign(set.space().dims.begin() + numIn, set.space().dims.end());
  r.set_ = std::move(set);
  return r;
}

void IntRel::addPiece(const std::vector<Constraint> &cons) {
  BasicSet p(set_.space());
  for (const Constraint &c : cons)
    p.addConstraint(c);
  set_.addPiece(std::move(p));
}

IntRel IntRel::unite(const IntRel &o) const {
  IntRel r = *this;
  r.set_ = set_.unite(o.set_);
  return r;
}

IntRel IntRel::intersect(const IntRel &o) const {
  IntRel r = *this;
  r.set_ = set_.intersect(o.set_);
  return r;
}

IntRel IntRel::subtract(const IntRel &o) const {
  IntRel r = *this;
  r.set_ = set_.subtract(o.set_);
  return r;
}

IntRel IntRel::simplify() const {
  IntRel r = *this;
  r.set_ = set_.simplify();
  return r;
}

IntRel IntRel::compose(const IntRel &o) const {
  if (outDims_.size() != o.inDims_.size())
    throw SpaceError("compose: dimension mismatch (" +
                     std::to_string(outDims_.size()) + " vs " +
                     std::to_string(o.inDims_.size()) + ")");
  // Bring o's input dims onto this relation's output dims, and make o's
  // output dims disjoint from this relation's input dims.
  IntSet rhs = o.set_;
  std::vector<std::string> taken = concatNames(inDims_, outDims_);
  // Temporarily move o's dims out of the way to avoid rename collisions.
  std::vector<std::string> tmpIn, tmpOut;
  for (size_t i = 0; i < o.inDims_.size(); ++i) {
    tmpIn.push_back("__in" + std::to_string(i));
    rhs = rhs.renameDim(o.inDims_[i], tmpIn.back());
  }
  for (size_t i = 0; i < o.outDims_.size(); ++i) {
    tmpOut.push_back("__out" + std::to_string(i));
    rhs = rhs.renameDim(o.outDims_[i], tmpOut.back());
  }
  std::vector<std::string> newOut = disjointFrom(o.outDims_, taken);
  for (size_t i = 0; i < o.inDims_.size(); ++i)
    rhs = rhs.renameDim(tmpIn[i], outDims_[i]);
  for (size_t i = 0; i < o.outDims_.size(); ++i)
    rhs = rhs.renameDim(tmpOut[i], newOut[i]);

  std::vector<std::string> params =
      mergeParams(set_.space().params, o.set_.space().params);
  Space combined(concatNames(concatNames(inDims_, outDims_), newOut), params);
  IntSet joint = set_.withSpace(combined).intersect(rhs.withSpace(combined));
  IntSet projected = joint.projectOut(outDims_);

  IntRel r;
  r.inDims_ = inDims_;
  r.outDims_ = newOut;
  r.set_ = projected.withSpace(Space(concatNames(inDims_, newOut), params));
  return r;
}

IntSet IntRel::apply(const IntSet &s) const {
  if (s.space().dims.size() != inDims_.size())
    throw SpaceError("apply: dimension mismatch");
  IntSet arg = s;
  std::vector<std::string> tmp;
  for (size_t i = 0; i < inDims_.size(); ++i) {
    tmp.push_back("__a" + std::to_string(i));
    arg = arg.renameDim(s.space().dims[i], tmp.back());
  }
  for (size_t i = 0; i < inDims_.size(); ++i)
    arg = arg.renameDim(tmp[i], inDims_[i]);

  std::vector<std::string> params =
      mergeParams(set_.space().params, s.space().params);
  Space combined(concatNames(inDims_, outDims_), params);
  IntSet joint = set_.withSpace(combined).intersect(arg.withSpace(combined));
  return joint.projectOut(inDims_).withSpace(Space(outDims_, params));
}

IntRel IntRel::inverse() const {
  IntRel r;
  r.inDims_ = outDims_;
  r.outDims_ = inDims_;
  r.set_ = set_.withSpace(
      Space(concatNames(outDims_, inDims_), set_.space().params));
  return r;
}

IntSet IntRel::deltas() const {
  if (inDims_.size() != outDims_.size())
    throw SpaceError("deltas: relation is not same-dimensional");
  size_t n = inDims_.size();
  std::vector<std::string> dNames;
  for (size_t i = 0; i < n; ++i)
    dNames.push_back("d" + std::to_string(i));
  Space combined(concatNames(concatNames(inDims_, outDims_), dNames),
                 set_.space().params);
  IntSet joint = set_.withSpace(combined);
  IntSet withDelta(combined);
  {
    BasicSet defs(combined);
    for (size_t i = 0; i < n; ++i)
      defs.addConstraint(eq(AffineExpr::var(dNames[i]),
                            AffineExpr::var(outDims_[i]) -
                                AffineExpr::var(inDims_[i])));
    withDelta.addPiece(std::move(defs));
  }
  IntSet both = joint.intersect(withDelta);
  return both.projectOut(concatNames(inDims_, outDims_))
      .withSpace(Space(dNames, set_.space().params));
}

IntRel IntRel::intersectDomain(const IntSet &s) const {
  if (s.space().dims.size() != inDims_.size())
    throw SpaceError("intersectDomain: dimension mismatch");
  IntSet dom = s;
  for (size_t i = 0; i < inDims_.size(); ++i)
    dom = dom.renameDim(dom.space().dims[i], inDims_[i]);
  std::vector<std::string> params =
      mergeParams(set_.space().params, s.space().params);
  Space combined(concatNames(inDims_, outDims_), params);
  IntRel r = *this;
  r.set_ = set_.withSpace(combined).intersect(dom.withSpace(combined));
  return r;
}

IntRel IntRel::intersectRange(const IntSet &s) const {
  return inverse().intersectDomain(s).inverse();
}

std::vector<std::vector<int64_t>>
IntRel::enumerate(const std::map<std::string, int64_t> &params) const {
  return set_.enumerate(params);
}

std::string IntRel::str() const {
  std::ostringstream os;
  if (!set_.space().params.empty()) {
    os << "[";
    for (size_t i = 0; i < set_.space().params.size(); ++i)
      os << (i ? ", " : "") << set_.space().params[i];
    os << "] -> ";
  }
  os << "{ [";
  for (size_t i = 0; i < inDims_.size(); ++i)
    os << (i ? ", " : "") << inDims_[i];
  os << "] -> [";
  for (size_t i = 0; i < outDims_.size(); ++i)
    os << (i ? ", " : "") << outDims_[i];
  os << "]";
  if (!set_.hasPieces()) {
    os << " : false }";
    return os.str();
  }
  bool universe =
      set_.pieces().size() == 1 && set_.pieces()[0].constraints().empty();
  if (!universe) {
    os << " : ";
    for (size_t i = 0; i < set_.pieces().size(); ++i) {
      if (i)
        os << " or ";
      if (set_.pieces().size() > 1)
        os << "(" << set_.pieces()[i].str() << ")";
      else
        os << set_.pieces()[i].str();
    }
  }
  os << " }";
  return os.str();
}

//===----------------------------------------------------------------------===//
// Lexicographic order
//===----------------------------------------------------------------------===//

IntRel lexLt(const std::vector<std::string> &inNames,
             const std::vector<std::string> &outNames) {
  assert(inNames.size() == outNames.size() && !inNames.empty());
  IntRel r(inNames, outNames, {});
  for (size_t k = 0; k < inNames.size(); ++k) {
    std::vector<Constraint> cons;
    for (size_t i = 0; i < k; ++i)
      cons.push_back(eq(AffineExpr::var(inNames[i]), AffineExpr::var(outNames[i])));
    cons.push_back(lt(AffineExpr::var(inNames[k]), AffineExpr::var(outNames[k])));
    r.addPiece(cons);
  }
  return r;
}

IntRel lexLt(size_t d) {
  std::vector<std::string> in, out;
  for (size_t i = 0; i < d; ++i) {
    in.push_back("x" + std::to_string(i));
    out.push_back("y" + std::to_string(i));
  }
  return lexLt(in, out);
}

void padTimestamps(std::vector<AffineExpr> &a, std::vector<AffineExpr> &b) {
  while (a.size() < b.size())
    a.emplace_back(0);
  while (b.size() < a.size())
    b.emplace_back(0);
}

std::vector<std::vector<Constraint>> lexLtPieces(std::vector<AffineExpr> a,
                                                 std::vector<AffineExpr> b) {
  padTimestamps(a, b);
  std::vector<std::vector<Constraint>> pieces;
  std::vector<Constraint> prefix;
  bool prefixFeasible = true;
  for (size_t k = 0; k < a.size() && prefixFeasible; ++k) {
    AffineExpr diff = b[k] - a[k]; // a_k < b_k  <=>  diff - 1 >= 0
    if (diff.isConstant()) {
      if (diff.constant() > 0)
        pieces.push_back(prefix); // strictly smaller here, for sure
    } else {
      std::vector<Constraint> piece = prefix;
      piece.push_back(ge0(diff - 1));
      pieces.push_back(std::move(piece));
    }
    // Extend the prefix with a_k = b_k.
    if (diff.isConstant()) {
      if (diff.constant() != 0)
        prefixFeasible = false;
    } else {
      prefix.push_back(eq0(diff));
    }
  }
  return pieces;
}

std::optional<std::vector<Constraint>>
lexEqConstraints(std::vector<AffineExpr> a, std::vector<AffineExpr> b) {
  padTimestamps(a, b);
  std::vector<Constraint> cons;
  for (size_t k = 0; k < a.size(); ++k) {
    AffineExpr diff = b[k] - a[k];
    if (diff.isConstant()) {
      if (diff.constant() != 0)
        return std::nullopt;
    } else {
      cons.push_back(eq0(diff));
    }
  }
  return cons;
}

//===----------------------------------------------------------------------===//
// Transitive closure
//===----------------------------------------------------------------------===//

/// The constant value a piece forces on dimension `name`, derived from
/// parameter-free single-dimension constraints only; nullopt if not pinned.
static std::optional<int64_t> forcedConstant(const BasicSet &piece,
                                             const std::string &name) {
  std::optional<int64_t> lo, hi;
  for (const Constraint &c : piece.constraints()) {
    int64_t a = c.expr.coeff(name);
    if (a == 0)
      continue;
    AffineExpr rest = c.expr;
    rest.setCoeff(name, 0);
    if (!rest.isConstant())
      continue;
    int64_t k = rest.constant();
    if (c.kind == ConstraintKind::EQ) {
      if (k % a != 0)
        return std::nullopt; // piece is integer-empty; treat as not pinned
      int64_t v = -k / a;
      lo = lo ? std::max(*lo, v) : v;
      hi = hi ? std::min(*hi, v) : v;
    } else if (a > 0) {
      int64_t v = floorDiv(-k + a - 1, a);
      lo = lo ? std::max(*lo, v) : v;
    } else {
      int64_t v = floorDiv(k, -a);
      hi = hi ? std::min(*hi, v) : v;
    }
  }
  if (lo && hi && *lo == *hi)
    return *lo;
  return std::nullopt;
}

/// True when the multipliers k_i of the distance vectors can be recovered as
/// affine functions of y - x: every vector owns a coordinate where it has a
/// +-1 entry and all other vectors vanish.
static bool multipliersRecoverable(const std::vector<std::vector<int64_t>> &d) {
  size_t m = d.size(), n = d.empty() ? 0 : d[0].size();
  std::vector<bool> used(n, false);
  std::function<bool(size_t)> assign = [&](size_t i) -> bool {
    if (i == m)
      return true;
    for (size_t j = 0; j < n; ++j) {
      if (used[j] || (d[i][j] != 1 && d[i][j] != -1))
        continue;
      bool othersZero = true;
      for (size_t i2 = 0; i2 < m && othersZero; ++i2)
        if (i2 != i && d[i2][j] != 0)
          othersZero = false;
      if (!othersZero)
        continue;
      used[j] = true;
      if (assign(i + 1))
        return true;
      used[j] = false;
    }
    return false;
  };
  return assign(0);
}

/// One direction's rational bound over all delta pieces (weakest across the
/// union), as num/den with den > 0; nullopt when some piece is unbounded.
struct RationalBound {
  int64_t num, den;
};

static std::optional<RationalBound>
boxBound(const IntSet &deltas, const std::string &dim, bool lower) {
  std::optional<RationalBound> acc;
  for (const BasicSet &piece : deltas.pieces()) {
    std::vector<std::string> others;
    for (const std::string &d : deltas.space().dims)
      if (d != dim)
        others.push_back(d);
    BasicSet p = piece;
    if (!p.tighten())
      continue;
    std::optional<BasicSet> proj = [&]() -> std::optional<BasicSet> {
      IntSet one(deltas.space());
      one.addPiece(p);
      IntSet r = one.projectOut(others);
      if (!r.hasPieces())
        return std::nullopt;
      return r.pieces()[0];
    }();
    if (!proj)
      continue; // piece empty
    std::optional<RationalBound> best;
    for (const Constraint &c : proj->constraints()) {
      int64_t a = c.expr.coeff(dim);
      if (a == 0)
        continue;
      AffineExpr rest = c.expr;
      rest.setCoeff(dim, 0);
      if (!rest.isConstant())
        continue; // parameter-dependent: unusable for a constant box
      int64_t k = rest.constant();
      // a*dim + k >= 0 (or = 0)
      bool givesLower = (a > 0) || c.kind == ConstraintKind::EQ;
      bool givesUpper = (a < 0) || c.kind == ConstraintKind::EQ;
      if (lower && givesLower) {
        RationalBound b{-k, a > 0 ? a : -a};
        if (a < 0)
          b.num = k; // from equality with a < 0: dim = k / -a
        if (!best || b.num * best->den > best->num * b.den)
          best = b;
      } else if (!lower && givesUpper) {
        RationalBound b{k, a < 0 ? -a : a};
        if (a > 0)
          b.num = -k; // from equality with a > 0: dim = -k / a
        if (!best || b.num * best->den < best->num * b.den)
          best = b;
      }
    }
    if (!best)
      return std::nullopt; // this piece is unbounded in that direction
    if (!acc)
      acc = best;
    else if (lower ? (best->num * acc->den < acc->num * best->den)
                   : (best->num * acc->den > acc->num * best->den))
      acc = best; // weakest bound across the union
  }
  return acc;
}

ClosureResult transitiveClosure(const IntRel &r, const IntSet *domain) {
  if (r.inDims().size() != r.outDims().size())
    throw SpaceError("transitive closure: relation is not same-dimensional");
  const size_t n = r.inDims().size();
  const std::vector<std::string> &params = r.asSet().space().params;

  IntRel result(r.inDims(), r.outDims(), params);
  IntSet dl = r.deltas().simplify();
  if (!dl.hasPieces())
    return {result, true}; // empty relation

  // Chains start at sources of r and end at targets of r, so the closure can
  // always be confined to dom(r) x ran(r) (and to the caller's domain). Large
  // unions (concrete pair lists) are collapsed to their bounding boxes to
  // keep the piece count in check; a box is still a sound restriction.
  IntSet sources = r.asSet().projectOut(r.outDims()).withSpace(
      Space(r.inDims(), params));
  IntSet targets = r.asSet().projectOut(r.inDims()).withSpace(
      Space(r.outDims(), params));
  sources = sources.simplify();
  targets = targets.simplify();
  if (sources.pieces().size() > 8)
    sources = sources.boxHull();
  if (targets.pieces().size() > 8)
    targets = targets.boxHull();
  auto restrictToDomain = [&](IntRel rel) {
    rel = rel.intersectDomain(sources).intersectRange(targets);
    if (!domain)
      return rel;
    return rel.intersectDomain(*domain).intersectRange(*domain);
  };

  // Try the uniform case: every disjunct pins one constant distance vector.
  std::vector<std::vector<int64_t>> vectors;
  std::vector<BasicSet> guards; // parameter residue per vector
  bool uniform = true;
  for (const BasicSet &piece : dl.pieces()) {
    std::vector<int64_t> v;
    for (const std::string &d : dl.space().dims) {
      auto c = forcedConstant(piece, d);
      if (!c) {
        uniform = false;
        break;
      }
      v.push_back(*c);
    }
    if (!uniform)
      break;
    if (std::find(vectors.begin(), vectors.end(), v) != vectors.end())
      continue; // duplicate distance; guards only weaken, keep the first
    IntSet one(dl.space());
    one.addPiece(piece);
    IntSet residue = one.projectOut(dl.space().dims); // params only
    vectors.push_back(v);
    guards.push_back(residue.hasPieces() ? residue.pieces()[0]
                                         : BasicSet(Space({}, params)));
  }

  if (uniform) {
    bool allGuardsTrivial = true;
    for (const BasicSet &g : guards)
      allGuardsTrivial &= g.constraints().empty();

    auto buildCombination = [&](const std::vector<size_t> &subset,
                                bool strictlyPositive) {
      // y = x + sum_i k_i * d_i with k_i >= lower, sum k_i >= 1.
      std::vector<std::string> kNames;
      for (size_t i : subset)
        kNames.push_back("k" + std::to_string(i));
      Space combined(concatNames(concatNames(r.inDims(), r.outDims()), kNames),
                     params);
      BasicSet piece(combined);
      for (size_t j = 0; j < n; ++j) {
        AffineExpr e = AffineExpr::var(r.outDims()[j]) -
                       AffineExpr::var(r.inDims()[j]);
        for (size_t ii = 0; ii < subset.size(); ++ii)
          e = e - AffineExpr::var(kNames[ii]) * vectors[subset[ii]][j];
        piece.addConstraint(eq0(e));
      }
      AffineExpr sum;
      for (const std::string &k : kNames) {
        piece.addConstraint(ge0(AffineExpr::var(k) -
                                (strictlyPositive ? 1 : 0)));
        sum = sum + AffineExpr::var(k);
      }
      if (!strictlyPositive)
        piece.addConstraint(ge0(sum - 1));
      for (size_t i : subset)
        for (const Constraint &c : guards[i].constraints())
          piece.addConstraint(c);
      IntSet one(combined);
      one.addPiece(piece);
      return one.projectOut(kNames).withSpace(
          Space(concatNames(r.inDims(), r.outDims()), params));
    };

    IntSet acc(Space(concatNames(r.inDims(), r.outDims()), params));
    if (allGuardsTrivial) {
      std::vector<size_t> all(vectors.size());
      for (size_t i = 0; i < all.size(); ++i)
        all[i] = i;
      acc = buildCombination(all, /*strictlyPositive=*/false);
    } else {
      // Union over nonempty subsets so each vector's parameter guard applies
      // only when that vector is actually used.
      for (size_t mask = 1; mask < (size_t(1) << vectors.size()); ++mask) {
        std::vector<size_t> subset;
        for (size_t i = 0; i < vectors.size(); ++i)
          if (mask & (size_t(1) << i))
            subset.push_back(i);
        acc = acc.unite(buildCombination(subset, /*strictlyPositive=*/true));
      }
    }
    IntRel rel = IntRel::fromSet(acc, n);
    bool exact = multipliersRecoverable(vectors);
    return {restrictToDomain(rel).simplify(), exact};
  }

  // Over-approximation: box hull of the deltas scaled by k >= 1.
  std::vector<std::string> kName{"k"};
  Space combined(concatNames(concatNames(r.inDims(), r.outDims()), kName),
                 params);
  BasicSet piece(combined);
  piece.addConstraint(ge0(AffineExpr::var("k") - 1));
  for (size_t j = 0; j < n; ++j) {
    const std::string &d = dl.space().dims[j];
    AffineExpr delta =
        AffineExpr::var(r.outDims()[j]) - AffineExpr::var(r.inDims()[j]);
    if (auto lo = boxBound(dl, d, /*lower=*/true))
      piece.addConstraint(ge0(delta * lo->den - AffineExpr::var("k") * lo->num));
    if (auto hi = boxBound(dl, d, /*lower=*/false))
      piece.addConstraint(ge0(AffineExpr::var("k") * hi->num - delta * hi->den));
  }
  IntSet one(combined);
  one.addPiece(piece);
  IntSet acc = one.projectOut(kName).withSpace(
      Space(concatNames(r.inDims(), r.outDims()), params));
  IntRel rel = IntRel::fromSet(acc, n);
  return {restrictToDomain(rel).simplify(), false};
}

} // namespace polyred

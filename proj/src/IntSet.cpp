//===- IntSet.cpp ---------------------------------------------------------==//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "polyred/IntSet.h"

#include <algorithm>
#include <cassert>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace polyred {

static int64_t ceilDiv(int64_t a, int64_t b) {
  assert(b > 0);
  return floorDiv(a + b - 1, b);
}

bool Space::hasDim(const std::string &name) const {
  return std::find(dims.begin(), dims.end(), name) != dims.end();
}
bool Space::hasParam(const std::string &name) const {
  return std::find(params.begin(), params.end(), name) != params.end();
}
std::vector<std::string> Space::allNames() const {
  std::vector<std::string> all = dims;
  all.insert(all.end(), params.begin(), params.end());
  return all;
}

std::string Constraint::str() const {
  return expr.str() + (kind == ConstraintKind::EQ ? " = 0" : " >= 0");
}

//===----------------------------------------------------------------------===//
// BasicSet
//===----------------------------------------------------------------------===//

BasicSet::BasicSet(Space space, std::vector<Constraint> cons)
    : space_(std::move(space)), cons_(std::move(cons)) {
  for (const Constraint &c : cons_)
    for (const auto &[name, coeff] : c.expr.coeffs()) {
      (void)coeff;
      if (!space_.hasName(name))
        throw SpaceError("constraint references dimension '" + name +
                         "' outside the space");
    }
}

void BasicSet::addConstraint(Constraint c) {
  for (const auto &[name, coeff] : c.expr.coeffs()) {
    (void)coeff;
    if (!space_.hasName(name))
      throw SpaceError("constraint references dimension '" + name +
                       "' outside the space");
  }
  cons_.push_back(std::move(c));
}

/// Tightens one constraint in place. Returns false when unsatisfiable.
static bool tightenConstraint(Constraint &c) {
  int64_t g = 0;
  for (const auto &[name, coeff] : c.expr.coeffs()) {
    (void)name;
    g = std::gcd(g, coeff < 0 ? -coeff : coeff);
  }
  if (g == 0) { // constant-only
    if (c.kind == ConstraintKind::EQ)
      return c.expr.constant() == 0;
    return c.expr.constant() >= 0;
  }
  if (g == 1)
    return true;
  AffineExpr e;
  for (const auto &[name, coeff] : c.expr.coeffs())
    e.setCoeff(name, coeff / g);
  if (c.kind == ConstraintKind::EQ) {
    if (c.expr.constant() % g != 0)
      return false;
    e.setConstant(c.expr.constant() / g);
  } else {
    e.setConstant(floorDiv(c.expr.constant(), g));
  }
  c.expr = std::move(e);
  return true;
}

bool BasicSet::tighten() {
  std::vector<Constraint> out;
  for (Constraint &c : cons_) {
    if (!tightenConstraint(c))
      return false;
    if (c.expr.isConstant()) // trivially true after tightenConstraint
      continue;
    out.push_back(std::move(c));
  }
  // Canonical order, then drop duplicates and same-coefficient inequalities
  // dominated by a tighter constant.
  std::sort(out.begin(), out.end(), [](const Constraint &a, const Constraint &b) {
    if (a.kind != b.kind)
      return a.kind == ConstraintKind::EQ;
    if (a.expr.coeffs() != b.expr.coeffs())
      return a.expr.coeffs() < b.expr.coeffs();
    return a.expr.constant() < b.expr.constant();
  });
  cons_.clear();
  for (size_t i = 0; i < out.size(); ++i) {
    bool sameGroupAsPrev = i > 0 && out[i].kind == out[i - 1].kind &&
                           out[i].expr.coeffs() == out[i - 1].expr.coeffs();
    if (sameGroupAsPrev) {
      if (out[i].kind == ConstraintKind::EQ &&
          out[i].expr.constant() != out[i - 1].expr.constant())
        return false; // e+c1 = 0 and e+c2 = 0 with c1 != c2
      continue; // dominated: the smallest constant (kept first) is tightest
    }
    cons_.push_back(out[i]);
  }
  return true;
}

bool BasicSet::contains(const std::vector<int64_t> &point) const {
  std::vector<std::string> names = space_.allNames();
  assert(point.size() == names.size() && "point arity mismatch");
  for (const Constraint &c : cons_) {
    int64_t v = c.expr.constant();
    for (size_t i = 0; i < names.size(); ++i)
      v = checkedAdd(v, checkedMul(c.expr.coeff(names[i]), point[i]));
    if (c.kind == ConstraintKind::EQ ? v != 0 : v < 0)
      return false;
  }
  return true;
}

BasicSet BasicSet::renameDim(const std::string &from,
                             const std::string &to) const {
  BasicSet r;
  r.space_ = space_;
  for (auto &d : r.space_.dims)
    if (d == from)
      d = to;
  for (auto &p : r.space_.params)
    if (p == from)
      p = to;
  for (const Constraint &c : cons_)
    r.cons_.push_back({c.expr.renameDim(from, to), c.kind});
  return r;
}

std::string BasicSet::str() const {
  if (cons_.empty())
    return "true";
  std::ostringstream os;
  for (size_t i = 0; i < cons_.size(); ++i) {
    if (i)
      os << " and ";
    os << cons_[i].str();
  }
  return os.str();
}

//===----------------------------------------------------------------------===//
// Fourier-Motzkin elimination
//===----------------------------------------------------------------------===//

/// Substitutes x := value (from an equality with unit coefficient) into c.
static Constraint substituteInto(const Constraint &c, const std::string &x,
                                 const AffineExpr &value) {
  return {c.expr.substitute(x, value), c.kind};
}

/// Eliminates dimension x from the piece. Rational with integer tightening:
/// exact when an equality with unit coefficient on x exists. Returns nullopt
/// when the piece is detected unsatisfiable.
static std::optional<BasicSet> eliminateDim(const BasicSet &bs,
                                            const std::string &x) {
  const std::vector<Constraint> &cons = bs.constraints();

  Space outSpace = bs.space();
  std::erase(outSpace.dims, x);
  std::erase(outSpace.params, x);

  // Prefer an exact substitution through an equality a*x + e = 0, |a| = 1.
  for (size_t i = 0; i < cons.size(); ++i) {
    if (cons[i].kind != ConstraintKind::EQ)
      continue;
    int64_t a = cons[i].expr.coeff(x);
    if (a != 1 && a != -1)
      continue;
    AffineExpr rest = cons[i].expr;
    rest.setCoeff(x, 0);
    AffineExpr value = (a == 1) ? -rest : rest; // x = value
    BasicSet out(outSpace);
    for (size_t j = 0; j < cons.size(); ++j)
      if (j != i)
        out.addConstraint(substituteInto(cons[j], x, value));
    if (!out.tighten())
      return std::nullopt;
    return out;
  }

  // Rational elimination through an equality with non-unit coefficient.
  for (size_t i = 0; i < cons.size(); ++i) {
    if (cons[i].kind != ConstraintKind::EQ)
      continue;
    int64_t a = cons[i].expr.coeff(x);
    if (a == 0)
      continue;
    int64_t absA = a < 0 ? -a : a;
    int64_t sign = a < 0 ? -1 : 1;
    BasicSet out(outSpace);
    for (size_t j = 0; j < cons.size(); ++j) {
      if (j == i)
        continue;
      int64_t b = cons[j].expr.coeff(x);
      if (b == 0) {
        out.addConstraint(cons[j]);
        continue;
      }
      // |a|*c_j - sign(a)*b*eq has a zero coefficient on x.
      AffineExpr e =
          cons[j].expr * absA - cons[i].expr * checkedMul(sign, b);
      out.addConstraint({e, cons[j].kind});
    }
    if (!out.tighten())
      return std::nullopt;
    return out;
  }

  // Pure Fourier-Motzkin on the inequalities.
  BasicSet out(outSpace);
  std::vector<const Constraint *> lowers, uppers;
  for (const Constraint &c : cons) {
    int64_t a = c.expr.coeff(x);
    if (a == 0)
      out.addConstraint(c);
    else if (a > 0)
      lowers.push_back(&c);
    else
      uppers.push_back(&c);
  }
  for (const Constraint *lo : lowers) {
    for (const Constraint *up : uppers) {
      int64_t a = lo->expr.coeff(x);  // > 0
      int64_t b = up->expr.coeff(x);  // < 0
      AffineExpr e = lo->expr * (-b) + up->expr * a;
      out.addConstraint(ge0(e));
    }
  }
  if (!out.tighten())
    return std::nullopt;
  return out;
}

/// Eliminates several dims, innermost-declared (latest in the space) first.
static std::optional<BasicSet>
eliminateDims(const BasicSet &bs, std::vector<std::string> names) {
  std::vector<std::string> order;
  std::vector<std::string> all = bs.space().allNames();
  for (auto it = all.rbegin(); it != all.rend(); ++it)
    if (std::find(names.begin(), names.end(), *it) != names.end())
      order.push_back(*it);
  BasicSet start = bs;
  if (!start.tighten())
    return std::nullopt;
  std::optional<BasicSet> cur = std::move(start);
  for (const std::string &x : order) {
    cur = eliminateDim(*cur, x);
    if (!cur)
      return std::nullopt;
  }
  return cur;
}

/// Integer bounds of the single remaining dimension x in a piece whose
/// constraints mention x only. Missing bound => nullopt on that side.
struct DimBounds {
  std::optional<int64_t> lo, hi;
  bool infeasible = false;
};

static DimBounds boundsOfSingleDim(const BasicSet &bs, const std::string &x) {
  DimBounds r;
  for (const Constraint &c : bs.constraints()) {
    int64_t a = c.expr.coeff(x);
    AffineExpr rest = c.expr;
    rest.setCoeff(x, 0);
    if (!rest.isConstant())
      continue; // other dims still present; bound not extractable
    int64_t k = rest.constant();
    if (a == 0) {
      if (c.kind == ConstraintKind::EQ ? k != 0 : k < 0)
        r.infeasible = true;
      continue;
    }
    if (c.kind == ConstraintKind::EQ) {
      // a*x + k = 0
      if (k % a != 0) {
        r.infeasible = true;
        continue;
      }
      int64_t v = -k / a;
      r.lo = r.lo ? std::max(*r.lo, v) : v;
      r.hi = r.hi ? std::min(*r.hi, v) : v;
    } else if (a > 0) {
      int64_t v = ceilDiv(-k, a);
      r.lo = r.lo ? std::max(*r.lo, v) : v;
    } else {
      int64_t v = floorDiv(k, -a);
      r.hi = r.hi ? std::min(*r.hi, v) : v;
    }
  }
  if (r.lo && r.hi && *r.lo > *r.hi)
    r.infeasible = true;
  return r;
}

//===----------------------------------------------------------------------===//
// IntSet
//===----------------------------------------------------------------------===//

IntSet::IntSet(Space space, std::vector<Constraint> cons)
    : space_(std::move(space)) {
  pieces_.emplace_back(space_, std::move(cons));
}

IntSet IntSet::universe(Space space) {
  IntSet s(space);
  s.pieces_.emplace_back(std::move(space));
  return s;
}

void IntSet::addPiece(BasicSet piece) {
  if (!(piece.space() == space_))
    throw SpaceError("piece space does not match set space");
  pieces_.push_back(std::move(piece));
}

IntSet IntSet::intersect(const IntSet &o) const {
  if (!(space_ == o.space_))
    throw SpaceError("intersect: space mismatch");
  IntSet r(space_);
  for (const BasicSet &a : pieces_) {
    for (const BasicSet &b : o.pieces_) {
      BasicSet p = a;
      for (const Constraint &c : b.constraints())
        p.addConstraint(c);
      if (p.tighten())
        r.pieces_.push_back(std::move(p));
    }
  }
  return r;
}

IntSet IntSet::unite(const IntSet &o) const {
  if (!(space_ == o.space_))
    throw SpaceError("unite: space mismatch");
  IntSet r = *this;
  r.pieces_.insert(r.pieces_.end(), o.pieces_.begin(), o.pieces_.end());
  return r;
}

/// piece \ negated constraint set, as in PresburgerSet-style set difference:
/// p \ b = union over i of (p and c_1 .. c_{i-1} and not c_i).
static void subtractPiece(const BasicSet &p, const BasicSet &b,
                          std::vector<BasicSet> &out) {
  std::vector<Constraint> prefix;
  auto emit = [&](const Constraint &negated) {
    BasicSet piece = p;
    for (const Constraint &c : prefix)
      piece.addConstraint(c);
    piece.addConstraint(negated);
    if (piece.tighten())
      out.push_back(std::move(piece));
  };
  for (const Constraint &c : b.constraints()) {
    if (c.kind == ConstraintKind::GE) {
      emit(ge0(-c.expr - 1)); // not(e >= 0)  <=>  -e - 1 >= 0
    } else {
      emit(ge0(c.expr - 1));  // e >= 1
      emit(ge0(-c.expr - 1)); // e <= -1
    }
    prefix.push_back(c);
  }
}

IntSet IntSet::subtract(const IntSet &o) const {
  if (!(space_ == o.space_))
    throw SpaceError("subtract: space mismatch");
  IntSet r(space_);
  std::vector<BasicSet> general;
  for (const BasicSet &p : pieces_) {
    // Pieces that pin a single concrete point are settled by a membership
    // test; this keeps unions of concrete pairs (value-based dependences)
    // from exploding under constraint negation.
    if (space_.params.empty()) {
      if (auto pt = pointOf(p)) {
        if (!o.contains(*pt))
          r.pieces_.push_back(p);
        continue;
      }
    }
    general.push_back(p);
  }
  for (const BasicSet &b : o.pieces_) {
    std::vector<BasicSet> next;
    for (const BasicSet &p : general)
      subtractPiece(p, b, next);
    general = std::move(next);
    if (general.empty())
      break;
  }
  r.pieces_.insert(r.pieces_.end(), general.begin(), general.end());
  return r;
}

std::optional<std::vector<int64_t>> IntSet::pointOf(const BasicSet &piece) {
  std::vector<int64_t> pt;
  for (const std::string &d : piece.space().dims) {
    std::optional<int64_t> val;
    for (const Constraint &c : piece.constraints()) {
      if (c.kind != ConstraintKind::EQ)
        continue;
      int64_t a = c.expr.coeff(d);
      if (a != 1 && a != -1)
        continue;
      AffineExpr rest = c.expr;
      rest.setCoeff(d, 0);
      if (!rest.isConstant())
        continue;
      val = a == 1 ? -rest.constant() : rest.constant();
      break;
    }
    if (!val)
      return std::nullopt;
    pt.push_back(*val);
  }
  // The pinned point must actually satisfy the piece (other constraints may
  // still exclude it).
  if (!piece.contains(pt))
    return std::nullopt;
  return pt;
}

IntSet IntSet::boxHull() const {
  BasicSet box((space_));
  for (const std::string &d : space_.dims) {
    std::vector<std::string> others;
    for (const std::string &m : space_.dims)
      if (m != d)
        others.push_back(m);
    for (const std::string &p : space_.params)
      others.push_back(p);
    std::optional<int64_t> lo, hi;
    bool loOpen = false, hiOpen = false, any = false;
    for (const BasicSet &piece : pieces_) {
      auto proj = eliminateDims(piece, others);
      if (!proj)
        continue; // rationally empty piece contributes nothing
      DimBounds b = boundsOfSingleDim(*proj, d);
      if (b.infeasible)
        continue;
      any = true;
      if (b.lo)
        lo = lo ? std::min(*lo, *b.lo) : *b.lo;
      else
        loOpen = true;
      if (b.hi)
        hi = hi ? std::max(*hi, *b.hi) : *b.hi;
      else
        hiOpen = true;
    }
    if (!any || loOpen)
      lo.reset();
    if (!any || hiOpen)
      hi.reset();
    if (lo)
      box.addConstraint(ge0(AffineExpr::var(d) - *lo));
    if (hi)
      box.addConstraint(ge0(AffineExpr(*hi) - AffineExpr::var(d)));
  }
  IntSet r(space_);
  r.addPiece(std::move(box));
  return r;
}

IntSet IntSet::simplify() const {
  IntSet r(space_);
  for (const BasicSet &p : pieces_) {
    if (eliminateDims(p, p.space().allNames()))
      r.pieces_.push_back(p);
  }
  return r;
}

IntSet::EmptinessResult IntSet::isEmpty() const {
  bool sawUncertain = false;
  for (const BasicSet &p : pieces_) {
    if (!eliminateDims(p, p.space().allNames()))
      continue; // rationally empty: certainly no integer point
    // Rational shadow nonempty; look for an integer witness within derived
    // (or clamped) per-dimension bounds.
    std::vector<std::string> names = p.space().allNames();
    if (names.empty())
      return {false, true}; // no dims at all: the constraints held
    std::vector<std::pair<int64_t, int64_t>> box;
    bool exactBox = true;
    int64_t volume = 1;
    for (const std::string &n : names) {
      std::vector<std::string> others;
      for (const std::string &m : names)
        if (m != n)
          others.push_back(m);
      auto proj = eliminateDims(p, others);
      DimBounds b =
          proj ? boundsOfSingleDim(*proj, n) : DimBounds{0, -1, true};
      if (b.infeasible) {
        exactBox = false;
        box.emplace_back(0, -1);
        break;
      }
      int64_t lo = b.lo.value_or(-16), hi = b.hi.value_or(16);
      if (!b.lo || !b.hi)
        exactBox = false;
      if (hi - lo > 64) { // clamp oversized ranges for the probe
        exactBox = false;
        hi = lo + 64;
      }
      box.emplace_back(lo, hi);
      volume = checkedMul(volume, std::max<int64_t>(hi - lo + 1, 0));
      if (volume > 200000) {
        exactBox = false;
        break;
      }
    }
    if (box.size() == names.size() && volume <= 200000) {
      std::vector<int64_t> pt(names.size());
      bool found = false;
      std::function<void(size_t)> walk = [&](size_t k) {
        if (found)
          return;
        if (k == names.size()) {
          if (p.contains(pt))
            found = true;
          return;
        }
        for (int64_t v = box[k].first; v <= box[k].second && !found; ++v) {
          pt[k] = v;
          walk(k + 1);
        }
      };
      walk(0);
      if (found)
        return {false, true};
      if (exactBox)
        continue; // exhaustive over true bounds: piece is integer-empty
    }
    sawUncertain = true;
  }
  if (sawUncertain)
    return {false, false};
  return {true, true};
}

bool IntSet::isEmptyAt(const std::map<std::string, int64_t> &params) const {
  IntSet s = substituteParams(params);
  for (const BasicSet &p : s.pieces_) {
    IntSet one(s.space_);
    one.pieces_.push_back(p);
    if (!one.enumerate().empty())
      return false;
  }
  return true;
}

bool IntSet::contains(const std::vector<int64_t> &point) const {
  for (const BasicSet &p : pieces_)
    if (p.contains(point))
      return true;
  return false;
}

IntSet IntSet::projectOut(const std::vector<std::string> &names) const {
  Space outSpace = space_;
  for (const std::string &n : names) {
    std::erase(outSpace.dims, n);
    std::erase(outSpace.params, n);
  }
  IntSet r(outSpace);
  for (const BasicSet &p : pieces_)
    if (auto q = eliminateDims(p, names))
      r.pieces_.push_back(std::move(*q));
  return r;
}

IntSet IntSet::substitute(const std::string &name, int64_t value) const {
  Space outSpace = space_;
  std::erase(outSpace.dims, name);
  std::erase(outSpace.params, name);
  IntSet r(outSpace);
  for (const BasicSet &p : pieces_) {
    BasicSet q(outSpace);
    for (const Constraint &c : p.constraints())
      q.addConstraint({c.expr.substitute(name, AffineExpr(value)), c.kind});
    if (q.tighten())
      r.pieces_.push_back(std::move(q));
  }
  return r;
}

IntSet
IntSet::substituteParams(const std::map<std::string, int64_t> &bindings) const {
  IntSet r = *this;
  for (const auto &[name, value] : bindings)
    if (r.space_.hasName(name))
      r = r.substitute(name, value);
  return r;
}

IntSet IntSet::renameDim(const std::string &from, const std::string &to) const {
  IntSet r;
  r.space_ = space_;
  for (auto &d : r.space_.dims)
    if (d == from)
      d = to;
  for (auto &p : r.space_.params)
    if (p == from)
      p = to;
  for (const BasicSet &p : pieces_)
    r.pieces_.push_back(p.renameDim(from, to));
  return r;
}

IntSet IntSet::withSpace(Space space) const {
  IntSet r(space);
  for (const BasicSet &p : pieces_) {
    BasicSet q(space);
    for (const Constraint &c : p.constraints())
      q.addConstraint(c);
    r.pieces_.push_back(std::move(q));
  }
  return r;
}

std::vector<std::vector<int64_t>>
IntSet::enumerate(const std::map<std::string, int64_t> &params) const {
  IntSet s = substituteParams(params);
  if (!s.space_.params.empty())
    throw UnboundedError("enumerate: unbound parameters remain (" +
                         s.space_.params.front() + ")");
  std::set<std::vector<int64_t>> points;
  const std::vector<std::string> dims = s.space_.dims;
  for (const BasicSet &piece : s.pieces_) {
    std::vector<int64_t> pt;
    std::function<void(const BasicSet &, size_t)> walk = [&](const BasicSet &bs,
                                                             size_t k) {
      if (k == dims.size()) {
        if (bs.constraints().empty())
          points.insert(pt);
        return;
      }
      std::vector<std::string> rest(dims.begin() + k + 1, dims.end());
      auto proj = eliminateDims(bs, rest);
      if (!proj)
        return; // piece empty under this prefix
      DimBounds b = boundsOfSingleDim(*proj, dims[k]);
      if (b.infeasible)
        return;
      if (!b.lo || !b.hi)
        throw UnboundedError("enumerate: set is unbounded in dimension '" +
                             dims[k] + "'");
      for (int64_t v = *b.lo; v <= *b.hi; ++v) {
        BasicSet sub(Space({}, {}));
        {
          Space sp = bs.space();
          std::erase(sp.dims, dims[k]);
          sub = BasicSet(sp);
          for (const Constraint &c : bs.constraints())
            sub.addConstraint(
                {c.expr.substitute(dims[k], AffineExpr(v)), c.kind});
        }
        if (!sub.tighten())
          continue;
        pt.push_back(v);
        walk(sub, k + 1);
        pt.pop_back();
      }
    };
    BasicSet start = piece;
    if (!start.tighten())
      continue;
    walk(start, 0);
  }
  return {points.begin(), points.end()};
}

std::string IntSet::str() const {
  std::ostringstream os;
  if (!space_.params.empty()) {
    os << "[";
    for (size_t i = 0; i < space_.params.size(); ++i)
      os << (i ? ", " : "") << space_.params[i];
    os << "] -> ";
  }
  os << "{ [";
  for (size_t i = 0; i < space_.dims.size(); ++i)
    os << (i ? ", " : "") << space_.dims[i];
  os << "]";
  if (pieces_.empty()) {
    os << " : false }";
    return os.str();
  }
  bool universe = pieces_.size() == 1 && pieces_[0].constraints().empty();
  if (!universe) {
    os << " : ";
    for (size_t i = 0; i < pieces_.size(); ++i) {
      if (i)
        os << " or ";
      if (pieces_.size() > 1)
        os << "(" << pieces_[i].str() << ")";
      else
        os << pieces_[i].str();
    }
  }
  os << " }";
  return os.str();
}

} // namespace polyred

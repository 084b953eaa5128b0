//===- Codegen.cpp --------------------------------------------------------==//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "polyred/Codegen.h"

#include <algorithm>
#include <cassert>
#include <limits>
#include <sstream>

namespace polyred {

int64_t identityElement(OpKind op) {
  Operator info = operatorInfo(op);
  if (!(info.isAssociative && info.isCommutative))
    throw CodegenError("operator '" + operatorSymbol(op) +
                       "' has no identity for privatization");
  switch (op) {
  case OpKind::Add: return 0;
  case OpKind::Mul: return 1;
  case OpKind::Min: return std::numeric_limits<int64_t>::max();
  case OpKind::Max: return std::numeric_limits<int64_t>::min();
  case OpKind::And: return -1; // all bits set
  case OpKind::Or: return 0;
  case OpKind::Xor: return 0;
  default: break;
  }
  throw CodegenError("no identity element");
}

std::string identityElementCText(OpKind op) {
  switch (op) {
  case OpKind::Min: return "LLONG_MAX";
  case OpKind::Max: return "LLONG_MIN";
  default: return std::to_string(identityElement(op));
  }
}

//===----------------------------------------------------------------------===//
// Planning
//===----------------------------------------------------------------------===//

std::optional<size_t> defaultParallelDim(const Scop &scop,
                                         const Schedule &schedule,
                                         const DimClassification &classification) {
  size_t dims = schedule.paddedDim();
  for (size_t k = 0; k < dims; ++k) {
    bool anyLoop = false, allOk = true;
    for (const Statement &stmt : scop.statements) {
      const std::vector<AffineExpr> &rows = schedule.rows.at(stmt.name);
      if (k >= rows.size() || rows[k].isConstant())
        continue;
      anyLoop = true;
      if (classification.of(stmt.name, k) == DimClass::Sequential)
        allOk = false;
    }
    if (anyLoop && allOk)
      return k;
  }
  return std::nullopt;
}

PrivatizationPlan planPrivatization(const Scop &scop, const Schedule &schedule,
                                    const DimClassification &classification,
                                    size_t targetDim, Placement placement) {
  PrivatizationPlan plan;
  plan.targetDim = targetDim;
  plan.hoistDepth = placement.automatic ? 0 : placement.depth;
  if (plan.hoistDepth < 0 ||
      static_cast<size_t>(2 * plan.hoistDepth) >= targetDim + 1)
    throw CodegenError("placement depth " + std::to_string(plan.hoistDepth) +
                       " hoists beyond the outermost loop");
  plan.boundaryPrefixLen = targetDim - 2 * static_cast<size_t>(plan.hoistDepth);

  std::vector<ReductionInfo> reductions = detect(scop);
  bool anyReductionParallel = false;
  for (const Statement &stmt : scop.statements) {
    const std::vector<AffineExpr> &rows = schedule.rows.at(stmt.name);
    if (targetDim >= rows.size() || rows[targetDim].isConstant())
      continue;
    DimClass cls = classification.of(stmt.name, targetDim);
    if (cls == DimClass::Sequential)
      throw CodegenError("requested parallel dimension " +
                         std::to_string(targetDim) + " is sequential for '" +
                         stmt.name + "'");
    if (cls != DimClass::ReductionParallel)
      continue;
    anyReductionParallel = true;
    for (const ReductionInfo &rc : reductions) {
      if (rc.stmt != stmt.name)
        continue;
      PrivatizationPlan::Entry entry;
      entry.rc = rc;
      entry.identity = identityElement(rc.op);
      const auto *store = std::get_if<StoreInst>(&stmt.byId(rc.storeId));
      entry.bufferName = "priv_" + store->array;
      plan.entries.push_back(std::move(entry));
    }
  }
  if (!anyReductionParallel && placement.automatic)
    return plan; // plain parallel dim: pragma only
  if (plan.entries.empty())
    throw CodegenError("no reduction-parallel statement at dimension " +
                       std::to_string(targetDim) + "; nothing to privatize");
  // Unique buffer names when one array is reduced in several statements.
  std::map<std::string, int> seen;
  for (auto &entry : plan.entries) {
    int n = seen[entry.bufferName]++;
    if (n > 0)
      entry.bufferName += "_" + std::to_string(n);
  }
  return plan;
}

//===----------------------------------------------------------------------===//
// Emission
//===----------------------------------------------------------------------===//

namespace {

//--- small integer matrix inverse (unimodular) ------------------------------

int64_t detOf(const std::vector<std::vector<int64_t>> &m) {
  size_t n = m.size();
  if (n == 0)
    return 1;
  if (n == 1)
    return m[0][0];
  int64_t det = 0;
  for (size_t c = 0; c < n; ++c) {
    std::vector<std::vector<int64_t>> minor;
    for (size_t r = 1; r < n; ++r) {
      std::vector<int64_t> row;
      for (size_t cc = 0; cc < n; ++cc)
        if (cc != c)
          row.push_back(m[r][cc]);
      minor.push_back(std::move(row));
    }
    int64_t term = m[0][c] * detOf(minor);
    det += (c % 2 ? -term : term);
  }
  return det;
}

/// Inverse of a unimodular integer matrix (det +-1), via the adjugate.
std::vector<std::vector<int64_t>>
unimodularInverse(const std::vector<std::vector<int64_t>> &m) {
  size_t n = m.size();
  int64_t det = detOf(m);
  if (det != 1 && det != -1)
    throw CodegenError("schedule is outside the regenerable family (iterator "
                       "transform is not unimodular); use the schedule search "
                       "output");
  std::vector<std::vector<int64_t>> inv(n, std::vector<int64_t>(n, 0));
  for (size_t r = 0; r < n; ++r) {
    for (size_t c = 0; c < n; ++c) {
      std::vector<std::vector<int64_t>> minor;
      for (size_t rr = 0; rr < n; ++rr) {
        if (rr == r)
          continue;
        std::vector<int64_t> row;
        for (size_t cc = 0; cc < n; ++cc)
          if (cc != c)
            row.push_back(m[rr][cc]);
        minor.push_back(std::move(row));
      }
      int64_t cof = detOf(minor);
      if ((r + c) % 2)
        cof = -cof;
      inv[c][r] = cof * det; // adjugate transposed, divided by det (+-1)
    }
  }
  return inv;
}

//--- per-statement emission context ------------------------------------------

struct StmtEmit {
  size_t idx;
  std::vector<AffineExpr> ts;                // over loop vars after substitution
  std::map<std::string, AffineExpr> inverse; // original iterator -> loop vars
  IntSet domain;                             // over loop var names + params
  std::vector<std::pair<size_t, std::string>> loopVars; // (dim, name)
};

/// One loop variable name per schedule dimension: the source iterator when
/// every statement's row there is exactly that iterator (and the name is not
/// reused elsewhere), t<dim> otherwise.
std::map<size_t, std::string> chooseDimNames(const Scop &scop,
                                             const Schedule &schedule) {
  std::map<size_t, std::string> names;
  std::set<std::string> used;
  size_t dims = schedule.paddedDim();
  for (size_t k = 0; k < dims; ++k) {
    std::optional<std::string> candidate;
    bool uniform = true;
    for (const Statement &stmt : scop.statements) {
      const std::vector<AffineExpr> &rows = schedule.rows.at(stmt.name);
      if (k >= rows.size() || rows[k].isConstant())
        continue;
      const AffineExpr &row = rows[k];
      std::optional<std::string> name;
      if (row.constant() == 0 && row.coeffs().size() == 1 &&
          row.coeffs().begin()->second == 1)
        name = row.coeffs().begin()->first;
      if (!name || (candidate && *candidate != *name))
        uniform = false;
      else
        candidate = name;
    }
    std::string chosen = "t" + std::to_string(k);
    if (uniform && candidate && !used.count(*candidate))
      chosen = *candidate;
    used.insert(chosen);
    names[k] = chosen;
  }
  return names;
}

/// Loop variable names for the statement's non-constant schedule rows, and
/// the substitution original-iterator -> affine(loop vars).
StmtEmit makeStmtEmit(const Scop &scop, const Schedule &schedule, size_t idx,
                      const std::map<size_t, std::string> &dimNames) {
  const Statement &stmt = scop.statements[idx];
  const std::vector<AffineExpr> &rows = schedule.rows.at(stmt.name);
  const size_t d = stmt.depth();

  std::vector<size_t> loopDims;
  for (size_t k = 0; k < rows.size(); ++k)
    if (!rows[k].isConstant())
      loopDims.push_back(k);
  if (loopDims.size() != d)
    throw CodegenError(
        "schedule is outside the regenerable family (statement '" + stmt.name +
        "' does not keep one loop row per iterator); use the schedule search "
        "output");

  std::vector<std::vector<int64_t>> m(d, std::vector<int64_t>(d, 0));
  std::vector<int64_t> shift(d, 0);
  for (size_t r = 0; r < d; ++r) {
    const AffineExpr &row = rows[loopDims[r]];
    for (const auto &[name, coeff] : row.coeffs()) {
      auto it = std::find(stmt.iterators.begin(), stmt.iterators.end(), name);
      if (it == stmt.iterators.end())
        throw CodegenError("schedule row of '" + stmt.name +
                           "' references a non-iterator; use the schedule "
                           "search output");
      m[r][it - stmt.iterators.begin()] = coeff;
    }
    shift[r] = row.constant();
  }
  std::vector<std::vector<int64_t>> inv = unimodularInverse(m);

  StmtEmit e;
  e.idx = idx;
  for (size_t r = 0; r < d; ++r)
    e.loopVars.emplace_back(loopDims[r], dimNames.at(loopDims[r]));
  // iterators = inv * (t - shift)
  for (size_t c = 0; c < d; ++c) {
    AffineExpr expr(0);
    for (size_t r = 0; r < d; ++r) {
      AffineExpr t = AffineExpr::var(dimNames.at(loopDims[r])) - shift[r];
      expr = expr + t * inv[c][r];
    }
    e.inverse[stmt.iterators[c]] = expr;
  }
  auto substitute = [&](AffineExpr expr) {
    for (const auto &[iter, value] : e.inverse)
      expr = expr.substitute(iter, value);
    return expr;
  };
  for (const AffineExpr &row : rows)
    e.ts.push_back(substitute(row));

  // Domain constraints over the loop variables.
  std::vector<std::string> tNames;
  for (size_t k : loopDims)
    tNames.push_back(dimNames.at(k));
  IntSet dom(Space(tNames, scop.parameters));
  BasicSet piece(dom.space());
  assert(stmt.domain.pieces().size() == 1);
  for (const Constraint &c : stmt.domain.pieces()[0].constraints())
    piece.addConstraint({substitute(c.expr), c.kind});
  if (!piece.tighten())
    throw CodegenError("transformed domain of '" + stmt.name + "' is empty");
  dom.addPiece(std::move(piece));
  e.domain = std::move(dom);
  return e;
}

//--- AST ---------------------------------------------------------------------

struct CNode;
struct CLoop {
  size_t dim;
  std::string var;
  AffineExpr lower, upper; // inclusive bounds over outer loop vars + params
  bool parallel = false;
  bool declCtx = false;
  std::vector<CNode> body;
};
struct CStmt {
  size_t stmtIdx;
};
struct CPrivInit {
  size_t entryIdx;
};
struct CPrivAgg {
  size_t entryIdx;
};
struct CNode {
  std::variant<CLoop, CStmt, CPrivInit, CPrivAgg> v;
};

struct FootprintDim {
  AffineExpr lower;  // over outer loop vars + params
  AffineExpr extent; // upper - lower + 1
  bool scalarLike;   // extent is the literal 1
};

struct EmitContext {
  const Scop &scop;
  const Schedule &schedule;
  const DimClassification &classification;
  const std::optional<PrivatizationPlan> &plan;
  std::vector<StmtEmit> stmts;
  std::map<size_t, std::string> dimNames;
  std::map<std::string, std::pair<std::vector<AffineExpr>, std::vector<AffineExpr>>>
      arrayBounds; // array -> (per-dim lower, per-dim extent)
  std::vector<std::vector<FootprintDim>> footprints; // per plan entry
  std::optional<size_t> pragmaDim;
};

/// Inclusive bounds of t_k for one statement: project away the statement's
/// inner loop vars, then read the unit-coefficient constraints on t_k.
std::pair<AffineExpr, AffineExpr> boundsAt(const StmtEmit &se, size_t dim) {
  std::vector<std::string> inner;
  std::string tk;
  for (const auto &[d, name] : se.loopVars) {
    if (d > dim)
      inner.push_back(name);
    else if (d == dim)
      tk = name;
  }
  assert(!tk.empty() && "statement has no loop at this dimension");
  IntSet projected = se.domain.projectOut(inner);
  if (!projected.hasPieces())
    throw CodegenError("empty projected domain");
  std::optional<AffineExpr> lower, upper;
  for (const Constraint &c : projected.pieces()[0].constraints()) {
    int64_t a = c.expr.coeff(tk);
    if (a == 0)
      continue;
    if (a != 1 && a != -1)
      throw CodegenError("loop bound with non-unit stride; use the schedule "
                         "search output");
    AffineExpr rest = c.expr;
    rest.setCoeff(tk, 0);
    if (c.kind == ConstraintKind::EQ) {
      AffineExpr val = a == 1 ? -rest : rest;
      lower = upper = val;
      continue;
    }
    if (a == 1) { // t + rest >= 0  ->  t >= -rest
      AffineExpr lo = -rest;
      if (lower)
        throw CodegenError("multiple lower bounds on one loop; use the "
                           "schedule search output");
      lower = lo;
    } else { // -t + rest >= 0  ->  t <= rest
      if (upper)
        throw CodegenError("multiple upper bounds on one loop; use the "
                           "schedule search output");
      upper = rest;
    }
  }
  if (!lower || !upper)
    throw CodegenError("unbounded loop dimension in codegen");
  return {*lower, *upper};
}

std::vector<CNode> generate(EmitContext &ctx, size_t dim,
                            std::vector<size_t> group);

CNode makeLoopNode(EmitContext &ctx, size_t dim, std::vector<size_t> group) {
  CLoop loop;
  loop.dim = dim;
  loop.var = ctx.dimNames.at(dim);
  std::optional<std::pair<AffineExpr, AffineExpr>> bounds;
  for (size_t gi : group) {
    auto b = boundsAt(ctx.stmts[gi], dim);
    if (!bounds) {
      bounds = b;
    } else if (!(bounds->first == b.first && bounds->second == b.second)) {
      throw CodegenError(
          "statements share a loop dimension with different bounds; "
          "regenerating a single fused nest is not supported for this "
          "schedule");
    }
  }
  loop.lower = bounds->first;
  loop.upper = bounds->second;
  if (ctx.pragmaDim && *ctx.pragmaDim == dim) {
    loop.parallel = true;
    loop.declCtx = ctx.plan && !ctx.plan->entries.empty();
  }
  loop.body = generate(ctx, dim + 1, std::move(group));
  CNode node;
  node.v = std::move(loop);
  return node;
}

std::vector<CNode> generate(EmitContext &ctx, size_t dim,
                            std::vector<size_t> group) {
  std::vector<CNode> out;
  if (group.empty())
    return out;
  size_t maxDim = 0;
  for (size_t gi : group)
    maxDim = std::max(maxDim, ctx.stmts[gi].ts.size());
  if (dim >= maxDim) {
    // Leaf: emit statements in source order.
    std::sort(group.begin(), group.end());
    for (size_t gi : group) {
      CNode n;
      n.v = CStmt{ctx.stmts[gi].idx};
      out.push_back(std::move(n));
    }
    return out;
  }

  // Split by constant timestamp value at this dim; non-constant rows form
  // loop groups (all statements in one subgroup must agree on constness).
  struct Bucket {
    bool isLoop;
    int64_t constant;
    std::vector<size_t> members;
  };
  std::vector<Bucket> buckets;
  for (size_t gi : group) {
    const StmtEmit &se = ctx.stmts[gi];
    bool isLoop = dim < se.ts.size() && !se.ts[dim].isConstant();
    int64_t cst = isLoop ? 0
                         : (dim < se.ts.size() ? se.ts[dim].constant() : 0);
    bool placed = false;
    for (Bucket &b : buckets) {
      if (b.isLoop == isLoop && (isLoop || b.constant == cst)) {
        b.members.push_back(gi);
        placed = true;
        break;
      }
    }
    if (!placed)
      buckets.push_back({isLoop, cst, {gi}});
  }
  bool sawLoop = false, sawConst = false;
  for (const Bucket &b : buckets)
    (b.isLoop ? sawLoop : sawConst) = true;
  if (sawLoop && sawConst)
    throw CodegenError("constant and loop timestamp rows meet at one "
                       "dimension; use the schedule search output");
  std::sort(buckets.begin(), buckets.end(), [](const Bucket &a, const Bucket &b) {
    return a.constant < b.constant;
  });

  auto wrapIfBoundary = [&](std::vector<CNode> nodes,
                            const std::vector<size_t> &members) {
    if (!ctx.plan || ctx.plan->entries.empty() ||
        dim != ctx.plan->boundaryPrefixLen)
      return nodes;
    // Wrap the subtree containing privatized statements with init/aggregate.
    std::vector<size_t> entriesHere;
    for (size_t e = 0; e < ctx.plan->entries.size(); ++e) {
      const std::string &stmtName = ctx.plan->entries[e].rc.stmt;
      for (size_t gi : members)
        if (ctx.scop.statements[ctx.stmts[gi].idx].name == stmtName)
          entriesHere.push_back(e);
    }
    if (entriesHere.empty())
      return nodes;
    std::vector<CNode> wrapped;
    for (size_t e : entriesHere) {
      CNode n;
      n.v = CPrivInit{e};
      wrapped.push_back(std::move(n));
    }
    for (CNode &n : nodes)
      wrapped.push_back(std::move(n));
    for (size_t e : entriesHere) {
      CNode n;
      n.v = CPrivAgg{e};
      wrapped.push_back(std::move(n));
    }
    return wrapped;
  };

  for (Bucket &b : buckets) {
    if (b.isLoop) {
      std::vector<CNode> node;
      std::vector<size_t> members = b.members;
      node.push_back(makeLoopNode(ctx, dim, std::move(b.members)));
      node = wrapIfBoundary(std::move(node), members);
      for (CNode &n : node)
        out.push_back(std::move(n));
    } else {
      std::vector<size_t> members = b.members;
      std::vector<CNode> nodes = generate(ctx, dim + 1, std::move(b.members));
      nodes = wrapIfBoundary(std::move(nodes), members);
      for (CNode &n : nodes)
        out.push_back(std::move(n));
    }
  }
  return out;
}

//--- arrays, footprints, expression text -------------------------------------

/// True when `a <= b` holds for all parameter values >= 1 (rational check).
bool alwaysLe(const AffineExpr &a, const AffineExpr &b,
              const std::vector<std::string> &params) {
  // a > b somewhere with params >= 1?
  BasicSet probe(Space({}, params));
  probe.addConstraint(ge0(a - b - 1));
  for (const std::string &p : params)
    probe.addConstraint(ge0(AffineExpr::var(p) - 1));
  IntSet s(Space({}, params));
  if (!probe.tighten())
    return true;
  s.addPiece(probe);
  return s.isEmpty().empty;
}

void computeArrayBounds(EmitContext &ctx) {
  const Scop &scop = ctx.scop;
  std::map<std::string, std::vector<std::vector<AffineExpr>>> lowers, uppers;
  for (const Statement &stmt : scop.statements) {
    for (const Instruction &inst : stmt.instructions) {
      if (std::holds_alternative<BinOpInst>(inst))
        continue;
      AccessRange r = accessRangeOf(inst, stmt);
      const std::string &array = r.array;
      size_t rank = r.indices.space().dims.size();
      lowers[array].resize(rank);
      uppers[array].resize(rank);
      for (size_t k = 0; k < rank; ++k) {
        std::vector<std::string> others;
        for (size_t m = 0; m < rank; ++m)
          if (m != k)
            others.push_back("a" + std::to_string(m));
        IntSet proj = r.indices.projectOut(others);
        if (!proj.hasPieces())
          continue; // access never executes
        std::optional<AffineExpr> lo, hi;
        const std::string ak = "a" + std::to_string(k);
        for (const Constraint &c : proj.pieces()[0].constraints()) {
          int64_t a = c.expr.coeff(ak);
          if (a == 0)
            continue;
          AffineExpr rest = c.expr;
          rest.setCoeff(ak, 0);
          if (a == 1 || c.kind == ConstraintKind::EQ) {
            if (a == 1)
              lo = -rest;
            if (c.kind == ConstraintKind::EQ)
              hi = a == 1 ? -rest : rest;
            if (c.kind == ConstraintKind::EQ && a == -1)
              lo = rest;
          }
          if (a == -1 && c.kind == ConstraintKind::GE)
            hi = rest;
        }
        if (lo)
          lowers[array][k].push_back(*lo);
        if (hi)
          uppers[array][k].push_back(*hi);
      }
    }
  }
  for (auto &[array, rank] : scop.arrays) {
    std::vector<AffineExpr> lower(rank, AffineExpr(0)), extent(rank, AffineExpr(1));
    for (size_t k = 0; k < rank; ++k) {
      std::optional<AffineExpr> lo, hi;
      for (const AffineExpr &cand : lowers[array][k]) {
        bool minimal = true;
        for (const AffineExpr &other : lowers[array][k])
          minimal &= alwaysLe(cand, other, scop.parameters);
        if (minimal) {
          lo = cand;
          break;
        }
      }
      for (const AffineExpr &cand : uppers[array][k]) {
        bool maximal = true;
        for (const AffineExpr &other : uppers[array][k])
          maximal &= alwaysLe(other, cand, scop.parameters);
        if (maximal) {
          hi = cand;
          break;
        }
      }
      if (!lo || !hi)
        throw CodegenError("cannot derive a rectangular extent for array '" +
                           array + "'");
      lower[k] = *lo;
      extent[k] = *hi - *lo + 1;
    }
    ctx.arrayBounds[array] = {lower, extent};
  }
}

void computeFootprints(EmitContext &ctx) {
  if (!ctx.plan)
    return;
  for (const auto &entry : ctx.plan->entries) {
    int stmtIdx = ctx.scop.stmtIndex(entry.rc.stmt);
    const Statement &stmt = ctx.scop.statements[stmtIdx];
    const StmtEmit &se = ctx.stmts[stmtIdx];
    const auto *store = std::get_if<StoreInst>(&stmt.byId(entry.rc.storeId));
    size_t rank = store->subscripts.size();

    // Subscript range with the loop vars outside the boundary kept symbolic.
    std::vector<std::string> insideVars, outsideVars;
    for (const auto &[td, name] : se.loopVars)
      (td >= ctx.plan->boundaryPrefixLen ? insideVars : outsideVars)
          .push_back(name);
    std::vector<std::string> aNames;
    for (size_t k = 0; k < rank; ++k)
      aNames.push_back("a" + std::to_string(k));
    std::vector<std::string> params = outsideVars;
    params.insert(params.end(), ctx.scop.parameters.begin(),
                  ctx.scop.parameters.end());
    std::vector<std::string> dims = aNames;
    dims.insert(dims.end(), insideVars.begin(), insideVars.end());
    IntSet set(Space(dims, params));
    BasicSet piece(set.space());
    for (const Constraint &c : se.domain.pieces()[0].constraints())
      piece.addConstraint(c);
    auto substitute = [&](AffineExpr expr) {
      for (const auto &[iter, value] : se.inverse)
        expr = expr.substitute(iter, value);
      return expr;
    };
    for (size_t k = 0; k < rank; ++k)
      piece.addConstraint(
          eq(AffineExpr::var(aNames[k]), substitute(store->subscripts[k])));
    set.addPiece(std::move(piece));

    std::vector<FootprintDim> fp;
    for (size_t k = 0; k < rank; ++k) {
      std::vector<std::string> others;
      for (size_t m = 0; m < rank; ++m)
        if (m != k)
          others.push_back(aNames[m]);
      others.insert(others.end(), insideVars.begin(), insideVars.end());
      IntSet proj = set.projectOut(others);
      if (!proj.hasPieces())
        throw CodegenError("privatized footprint is empty");
      std::optional<AffineExpr> lo, hi;
      for (const Constraint &c : proj.pieces()[0].constraints()) {
        int64_t a = c.expr.coeff(aNames[k]);
        if (a == 0)
          continue;
        if (a != 1 && a != -1)
          throw CodegenError("privatized footprint is not a box");
        AffineExpr rest = c.expr;
        rest.setCoeff(aNames[k], 0);
        if (c.kind == ConstraintKind::EQ) {
          lo = hi = (a == 1 ? -rest : rest);
        } else if (a == 1) {
          lo = -rest;
        } else {
          hi = rest;
        }
      }
      if (!lo || !hi)
        throw CodegenError("privatized footprint is unbounded");
      FootprintDim d;
      d.lower = *lo;
      AffineExpr extent = *hi - *lo + 1;
      d.extent = extent;
      d.scalarLike = extent.isConstant() && extent.constant() == 1;
      fp.push_back(std::move(d));
    }
    ctx.footprints.push_back(std::move(fp));
  }
}

std::string exprText(const AffineExpr &e) { return e.str(); }

/// Whether the buffer for this entry collapses to one cell per context.
bool scalarFootprint(const std::vector<FootprintDim> &fp) {
  for (const FootprintDim &d : fp)
    if (!d.scalarLike)
      return false;
  return true;
}

//--- statement body text ------------------------------------------------------

struct BodyPrinter {
  const EmitContext &ctx;
  const Statement &stmt;
  const StmtEmit &se;

  std::string subscriptText(const std::string &array,
                            const std::vector<AffineExpr> &subs) const {
    const auto &[lower, extent] = ctx.arrayBounds.at(array);
    std::string out = array;
    if (subs.empty())
      return "(*" + array + ")";
    for (size_t k = 0; k < subs.size(); ++k) {
      AffineExpr idx = substituted(subs[k]) - lower[k];
      out += "[" + exprText(idx) + "]";
    }
    return out;
  }

  AffineExpr substituted(AffineExpr e) const {
    for (const auto &[iter, value] : se.inverse)
      e = e.substitute(iter, value);
    return e;
  }

  /// The privatized buffer access replacing this instruction, if any.
  std::optional<std::string> privText(int instId) const {
    if (!ctx.plan)
      return std::nullopt;
    for (size_t e = 0; e < ctx.plan->entries.size(); ++e) {
      const auto &entry = ctx.plan->entries[e];
      if (entry.rc.stmt != stmt.name ||
          (entry.rc.loadId != instId && entry.rc.storeId != instId))
        continue;
      const std::vector<FootprintDim> &fp = ctx.footprints[e];
      const Instruction &inst = stmt.byId(instId);
      const auto &subs = std::holds_alternative<LoadInst>(inst)
                             ? std::get<LoadInst>(inst).subscripts
                             : std::get<StoreInst>(inst).subscripts;
      std::string out = entry.bufferName + "[ctx]";
      if (!scalarFootprint(fp))
        for (size_t k = 0; k < subs.size(); ++k)
          out += "[" + exprText(substituted(subs[k]) - fp[k].lower) + "]";
      return out;
    }
    return std::nullopt;
  }

  std::string valueText(const ValueRef &v, int parentPrec, bool right) const {
    if (const auto *lit = std::get_if<int64_t>(&v))
      return *lit < 0 ? "(" + std::to_string(*lit) + ")" : std::to_string(*lit);
    if (const auto *p = std::get_if<ParamRef>(&v))
      return p->name;
    return instText(std::get<InstRef>(v).id, parentPrec, right);
  }

  static int precedenceOf(OpKind op) {
    switch (op) {
    case OpKind::Mul:
    case OpKind::Div: return 5;
    case OpKind::Add:
    case OpKind::Sub: return 4;
    case OpKind::And: return 3;
    case OpKind::Xor: return 2;
    case OpKind::Or: return 1;
    default: return 6;
    }
  }

  std::string instText(int id, int parentPrec, bool right) const {
    const Instruction &inst = stmt.byId(id);
    if (const auto *l = std::get_if<LoadInst>(&inst)) {
      if (auto priv = privText(id))
        return *priv;
      return subscriptText(l->array, l->subscripts);
    }
    const auto &b = std::get<BinOpInst>(inst);
    if (b.op == OpKind::Min || b.op == OpKind::Max)
      return std::string(b.op == OpKind::Min ? "POLYRED_MIN" : "POLYRED_MAX") +
             "(" + valueText(b.lhs, 0, false) + ", " +
             valueText(b.rhs, 0, false) + ")";
    int prec = precedenceOf(b.op);
    std::string s = valueText(b.lhs, prec, false) + " " +
                    operatorSymbol(b.op) + " " + valueText(b.rhs, prec, true);
    if (prec < parentPrec || (prec == parentPrec && right))
      return "(" + s + ")";
    return s;
  }

  std::vector<std::string> lines() const {
    std::vector<std::string> out;
    for (const Instruction &inst : stmt.instructions) {
      const auto *st = std::get_if<StoreInst>(&inst);
      if (!st)
        continue;
      std::string lhs;
      if (auto priv = privText(st->id))
        lhs = *priv;
      else
        lhs = subscriptText(st->array, st->subscripts);
      out.push_back(lhs + " = " + valueText(st->value, 0, false) + ";");
    }
    return out;
  }
};

//--- printing -----------------------------------------------------------------

struct Printer {
  explicit Printer(const EmitContext &ctx) : ctx(ctx) {}
  const EmitContext &ctx;
  std::ostringstream os;
  int indent = 0;

  void line(const std::string &s) {
    for (int i = 0; i < indent; ++i)
      os << "  ";
    os << s << "\n";
  }

  void privLoops(size_t entryIdx, bool init) {
    const auto &entry = ctx.plan->entries[entryIdx];
    const std::vector<FootprintDim> &fp = ctx.footprints[entryIdx];
    const Statement &stmt =
        ctx.scop.statements[ctx.scop.stmtIndex(entry.rc.stmt)];
    const auto *store = std::get_if<StoreInst>(&stmt.byId(entry.rc.storeId));
    bool scalar = scalarFootprint(fp);

    std::vector<std::string> idxVars;
    std::string bufIndex = "[c]";
    std::string origIndex;
    if (!scalar) {
      for (size_t k = 0; k < fp.size(); ++k) {
        idxVars.push_back("loc" + std::to_string(k));
        bufIndex += "[" + idxVars[k] + "]";
      }
    }
    // Original location indexed at lower + p relative to the array base.
    const auto &[arrLower, arrExtent] = ctx.arrayBounds.at(store->array);
    (void)arrExtent;
    if (store->subscripts.empty()) {
      origIndex = "(*" + store->array + ")";
    } else {
      origIndex = store->array;
      for (size_t k = 0; k < store->subscripts.size(); ++k) {
        AffineExpr idx = scalar
                             ? fp[k].lower - arrLower[k]
                             : AffineExpr::var(idxVars[k]) + fp[k].lower -
                                   arrLower[k];
        origIndex += "[" + exprText(idx) + "]";
      }
    }

    if (init) {
      line("for (int c = 0; c < NUM_CONTEXTS; c++)");
      if (scalar) {
        indent++;
        line(entry.bufferName + "[c] = " + identityElementCText(entry.rc.op) +
             ";");
        indent--;
      } else {
        indent++;
        for (size_t k = 0; k < fp.size(); ++k) {
          line("for (long long " + idxVars[k] + " = 0; " + idxVars[k] + " < " +
               exprText(fp[k].extent) + "; " + idxVars[k] + "++)");
          indent++;
        }
        line(entry.bufferName + bufIndex + " = " +
             identityElementCText(entry.rc.op) + ";");
        for (size_t k = 0; k < fp.size(); ++k)
          indent--;
        indent--;
      }
      return;
    }
    // Aggregation: context index ascending into the original location.
    std::string op = operatorSymbol(entry.rc.op);
    std::string combine;
    if (entry.rc.op == OpKind::Min || entry.rc.op == OpKind::Max)
      combine = std::string(entry.rc.op == OpKind::Min ? "POLYRED_MIN"
                                                       : "POLYRED_MAX") +
                "(" + origIndex + ", " + entry.bufferName + bufIndex + ")";
    else
      combine = origIndex + " " + op + " " + entry.bufferName + bufIndex;
    if (scalar) {
      line("for (int c = 0; c < NUM_CONTEXTS; c++)");
      indent++;
      line(origIndex + " = " + combine + ";");
      indent--;
      return;
    }
    for (size_t k = 0; k < fp.size(); ++k) {
      line("for (long long " + idxVars[k] + " = 0; " + idxVars[k] + " < " +
           exprText(fp[k].extent) + "; " + idxVars[k] + "++)");
      indent++;
    }
    line("for (int c = 0; c < NUM_CONTEXTS; c++)");
    indent++;
    line(origIndex + " = " + combine + ";");
    indent--;
    for (size_t k = 0; k < fp.size(); ++k)
      indent--;
  }

  void node(const CNode &n) {
    if (const auto *loop = std::get_if<CLoop>(&n.v)) {
      if (loop->parallel)
        line("#pragma omp parallel for");
      line("for (long long " + loop->var + " = " + exprText(loop->lower) +
           "; " + loop->var + " <= " + exprText(loop->upper) + "; " +
           loop->var + "++) {");
      indent++;
      if (loop->declCtx)
        line("const int ctx = omp_get_thread_num() % NUM_CONTEXTS;");
      for (const CNode &child : loop->body)
        node(child);
      indent--;
      line("}");
    } else if (const auto *stmt = std::get_if<CStmt>(&n.v)) {
      const Statement &s = ctx.scop.statements[ctx.stmts[stmt->stmtIdx].idx];
      BodyPrinter bp{ctx, s, ctx.stmts[stmt->stmtIdx]};
      for (const std::string &l : bp.lines())
        line(l);
    } else if (const auto *init = std::get_if<CPrivInit>(&n.v)) {
      line("long long " + privDecl(init->entryIdx) + ";");
      privLoops(init->entryIdx, /*init=*/true);
    } else if (const auto *agg = std::get_if<CPrivAgg>(&n.v)) {
      privLoops(agg->entryIdx, /*init=*/false);
    }
  }

  std::string privDecl(size_t entryIdx) {
    const auto &entry = ctx.plan->entries[entryIdx];
    const std::vector<FootprintDim> &fp = ctx.footprints[entryIdx];
    std::string d = entry.bufferName + "[NUM_CONTEXTS]";
    if (!scalarFootprint(fp))
      for (const FootprintDim &dim : fp)
        d += "[" + exprText(dim.extent) + "]";
    return d;
  }
};

/// Init appears exactly once per entry, before the parallel loop; aggregate
/// exactly once, after it.
void verifyStructure(const std::vector<CNode> &nodes,
                     const PrivatizationPlan &plan) {
  std::vector<int> initSeen(plan.entries.size(), 0);
  std::vector<int> aggSeen(plan.entries.size(), 0);
  std::vector<int> parallelSeen(plan.entries.size(), 0);
  std::function<void(const std::vector<CNode> &)> walk =
      [&](const std::vector<CNode> &list) {
        for (const CNode &n : list) {
          if (const auto *init = std::get_if<CPrivInit>(&n.v)) {
            if (aggSeen[init->entryIdx] || parallelSeen[init->entryIdx])
              throw CodegenError("privatization init is misplaced");
            initSeen[init->entryIdx]++;
          } else if (const auto *agg = std::get_if<CPrivAgg>(&n.v)) {
            if (!initSeen[agg->entryIdx] || !parallelSeen[agg->entryIdx])
              throw CodegenError("privatization aggregate is misplaced");
            aggSeen[agg->entryIdx]++;
          } else if (const auto *loop = std::get_if<CLoop>(&n.v)) {
            if (loop->parallel)
              for (size_t e = 0; e < plan.entries.size(); ++e)
                if (initSeen[e] && !aggSeen[e])
                  parallelSeen[e]++;
            walk(loop->body);
          }
        }
      };
  walk(nodes);
  for (size_t e = 0; e < plan.entries.size(); ++e)
    if (initSeen[e] != 1 || aggSeen[e] != 1)
      throw CodegenError("privatized buffer must be initialized and "
                         "aggregated exactly once");
}

} // namespace

std::string emitC(const Scop &scop, const Schedule &schedule,
                  const DimClassification &classification,
                  const std::optional<PrivatizationPlan> &plan) {
  EmitContext ctx{scop, schedule, classification, plan, {}, {}, {}, {}, {}};
  ctx.dimNames = chooseDimNames(scop, schedule);
  for (size_t i = 0; i < scop.statements.size(); ++i)
    ctx.stmts.push_back(makeStmtEmit(scop, schedule, i, ctx.dimNames));
  computeArrayBounds(ctx);
  computeFootprints(ctx);
  if (plan)
    ctx.pragmaDim = plan->targetDim;
  else
    ctx.pragmaDim = defaultParallelDim(scop, schedule, classification);

  std::vector<size_t> all(scop.statements.size());
  for (size_t i = 0; i < all.size(); ++i)
    all[i] = i;
  std::vector<CNode> body = generate(ctx, 0, all);
  if (plan && !plan->entries.empty())
    verifyStructure(body, *plan);

  bool usesMinMax = false;
  bool usesMinMaxIdentity = false;
  for (const Statement &stmt : scop.statements)
    for (const Instruction &inst : stmt.instructions)
      if (const auto *b = std::get_if<BinOpInst>(&inst))
        if (b->op == OpKind::Min || b->op == OpKind::Max)
          usesMinMax = true;
  if (plan)
    for (const auto &entry : plan->entries)
      if (entry.rc.op == OpKind::Min || entry.rc.op == OpKind::Max)
        usesMinMaxIdentity = true;

  Printer p(ctx);
  p.os << "// Generated by polyred. Do not edit.\n//\n";
  p.os << "// schedule:\n";
  for (const auto &[name, rows] : schedule.rows) {
    p.os << "//   " << name << ": (";
    for (size_t i = 0; i < rows.size(); ++i)
      p.os << (i ? ", " : "") << rows[i].str();
    p.os << ")\n";
  }
  p.os << "// classification:\n";
  for (const auto &[name, classes] : classification.dims) {
    p.os << "//   " << name << ":";
    for (DimClass c : classes)
      p.os << " " << dimClassName(c);
    p.os << "\n";
  }
  if (plan && !plan->entries.empty()) {
    p.os << "// privatization: dim " << plan->targetDim << ", hoist "
         << plan->hoistDepth << ",";
    for (const auto &entry : plan->entries)
      p.os << " " << entry.bufferName;
    p.os << "\n";
  }
  p.os << "\n";
  if (ctx.pragmaDim) {
    p.os << "#include <omp.h>\n";
    if (usesMinMaxIdentity)
      p.os << "#include <limits.h>\n";
    if (plan && !plan->entries.empty())
      p.os << "\n#ifndef NUM_CONTEXTS\n#define NUM_CONTEXTS 4\n#endif\n";
  }
  if (usesMinMax || usesMinMaxIdentity) {
    p.os << "\n#define POLYRED_MIN(a, b) ((a) < (b) ? (a) : (b))\n";
    p.os << "#define POLYRED_MAX(a, b) ((a) > (b) ? (a) : (b))\n";
  }
  p.os << "\nvoid " << scop.name << "(";
  bool first = true;
  for (const std::string &param : scop.parameters) {
    p.os << (first ? "" : ", ") << "long long " << param;
    first = false;
  }
  for (const auto &[array, rank] : scop.arrays) {
    p.os << (first ? "" : ", ") << "long long ";
    first = false;
    if (rank == 0) {
      p.os << "*" << array;
      continue;
    }
    p.os << array;
    const auto &[lower, extent] = ctx.arrayBounds.at(array);
    (void)lower;
    for (size_t k = 0; k < rank; ++k)
      p.os << "[" << exprText(extent[k]) << "]";
  }
  p.os << ") {\n";
  p.indent = 1;
  for (const CNode &n : body)
    p.node(n);
  p.os << "}\n";
  return p.os.str();
}

} // namespace polyred

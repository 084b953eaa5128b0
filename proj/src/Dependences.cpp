//===- Dependences.cpp ----------------------------------------------------==//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "polyred/Dependences.h"

#include <algorithm>
#include <cassert>

namespace polyred {

std::string depKindName(DepKind k) {
  switch (k) {
  case DepKind::RAW: return "RAW";
  case DepKind::WAW: return "WAW";
  case DepKind::WAR: return "WAR";
  }
  return "?";
}

std::string granularityName(Granularity g) {
  switch (g) {
  case Granularity::Statement: return "statement";
  case Granularity::Access: return "access";
  case Granularity::Hybrid: return "hybrid";
  }
  return "?";
}

namespace {

std::string primed(const std::string &name) { return name + "'"; }

std::vector<std::string> primedAll(const std::vector<std::string> &names) {
  std::vector<std::string> r;
  for (const std::string &n : names)
    r.push_back(primed(n));
  return r;
}

AffineExpr primeIterators(AffineExpr e, const std::vector<std::string> &iters) {
  for (const std::string &it : iters)
    e = e.renameDim(it, primed(it));
  return e;
}

/// Renames a relation's dims to canonical names through collision-free temps.
IntRel renameRel(const IntRel &rel, const std::vector<std::string> &newIn,
                 const std::vector<std::string> &newOut) {
  assert(rel.inDims().size() == newIn.size() &&
         rel.outDims().size() == newOut.size());
  IntSet s = rel.asSet();
  for (size_t i = 0; i < newIn.size(); ++i)
    s = s.renameDim(rel.inDims()[i], "__ri" + std::to_string(i));
  for (size_t i = 0; i < newOut.size(); ++i)
    s = s.renameDim(rel.outDims()[i], "__ro" + std::to_string(i));
  for (size_t i = 0; i < newIn.size(); ++i)
    s = s.renameDim("__ri" + std::to_string(i), newIn[i]);
  for (size_t i = 0; i < newOut.size(); ++i)
    s = s.renameDim("__ro" + std::to_string(i), newOut[i]);
  return IntRel::fromSet(std::move(s), newIn.size());
}

struct AccessInfo {
  const Statement *stmt;
  int id;
  bool isWrite;
  const std::string *array;
  const std::vector<AffineExpr> *subscripts;
};

std::vector<AccessInfo> accessesOf(const Statement &stmt) {
  std::vector<AccessInfo> r;
  for (const Instruction &inst : stmt.instructions) {
    if (const auto *l = std::get_if<LoadInst>(&inst))
      r.push_back({&stmt, l->id, false, &l->array, &l->subscripts});
    else if (const auto *s = std::get_if<StoreInst>(&inst))
      r.push_back({&stmt, s->id, true, &s->array, &s->subscripts});
  }
  return r;
}

DepKind kindOf(bool srcWrite, bool tgtWrite) {
  if (srcWrite && tgtWrite)
    return DepKind::WAW;
  if (srcWrite)
    return DepKind::RAW;
  return DepKind::WAR;
}

/// Group key for one side of a dependence at a given granularity: the access
/// id for separately-tracked accesses, -1 for the statement-level bucket.
int groupOf(const Statement &stmt, int accessId, Granularity g,
            const std::vector<ReductionInfo> &reductions) {
  switch (g) {
  case Granularity::Statement:
    return -1;
  case Granularity::Access:
    return accessId;
  case Granularity::Hybrid:
    for (const ReductionInfo &rc : reductions)
      if (rc.stmt == stmt.name &&
          (rc.loadId == accessId || rc.storeId == accessId))
        return accessId;
    return -1;
  }
  return -1;
}

/// {(i_src, i_tgt) : f_src(i_src) = f_tgt(i_tgt), both in their domains,
/// theta(src) << theta(tgt)} with the target side primed.
IntRel conflictRelation(const Scop &scop, const Schedule &sched,
                        const AccessInfo &src, const AccessInfo &tgt) {
  const Statement &qs = *src.stmt, &ts = *tgt.stmt;
  std::vector<std::string> inDims = qs.iterators;
  std::vector<std::string> outDims = primedAll(ts.iterators);
  IntRel rel(inDims, outDims, scop.parameters);

  std::vector<Constraint> base;
  assert(qs.domain.pieces().size() == 1 && ts.domain.pieces().size() == 1 &&
         "statement domains are single conjunctive pieces");
  for (const Constraint &c : qs.domain.pieces()[0].constraints())
    base.push_back(c);
  for (const Constraint &c : ts.domain.pieces()[0].constraints())
    base.push_back({primeIterators(c.expr, ts.iterators), c.kind});
  assert(src.subscripts->size() == tgt.subscripts->size() &&
         "conflicting accesses have equal rank");
  for (size_t k = 0; k < src.subscripts->size(); ++k)
    base.push_back(eq((*src.subscripts)[k],
                      primeIterators((*tgt.subscripts)[k], ts.iterators)));

  std::vector<AffineExpr> thetaSrc = sched.timestamp(qs.name);
  std::vector<AffineExpr> thetaTgt = sched.timestamp(ts.name);
  for (AffineExpr &e : thetaTgt)
    e = primeIterators(e, ts.iterators);

  for (const std::vector<Constraint> &lexPiece :
       lexLtPieces(thetaSrc, thetaTgt)) {
    std::vector<Constraint> cons = base;
    cons.insert(cons.end(), lexPiece.begin(), lexPiece.end());
    rel.addPiece(cons);
  }
  return rel.simplify();
}

struct GroupKey {
  int srcStmtIdx, tgtStmtIdx;
  int srcGroup, tgtGroup;
  DepKind kind;
  auto operator<=>(const GroupKey &) const = default;
};

} // namespace

DependenceSet memoryDeps(const Scop &scop, Granularity granularity,
                         const std::vector<ReductionInfo> &reductions) {
  Schedule sched = originalSchedule(scop);
  DependenceSet result;
  result.granularity = granularity;
  result.basis = DepBasis::Memory;

  std::map<GroupKey, Dependence> groups;
  for (size_t qi = 0; qi < scop.statements.size(); ++qi) {
    for (size_t ti = 0; ti < scop.statements.size(); ++ti) {
      const Statement &qs = scop.statements[qi], &ts = scop.statements[ti];
      for (const AccessInfo &a : accessesOf(qs)) {
        for (const AccessInfo &b : accessesOf(ts)) {
          if (*a.array != *b.array || (!a.isWrite && !b.isWrite))
            continue;
          IntRel rel = conflictRelation(scop, sched, a, b);
          if (!rel.hasPieces())
            continue;
          GroupKey key{static_cast<int>(qi), static_cast<int>(ti),
                       groupOf(qs, a.id, granularity, reductions),
                       groupOf(ts, b.id, granularity, reductions),
                       kindOf(a.isWrite, b.isWrite)};
          auto it = groups.find(key);
          if (it == groups.end()) {
            Dependence d;
            d.srcStmt = qs.name;
            d.tgtStmt = ts.name;
            if (key.srcGroup >= 0)
              d.srcAccess = key.srcGroup;
            if (key.tgtGroup >= 0)
              d.tgtAccess = key.tgtGroup;
            d.relation = rel;
            d.kind = key.kind;
            d.basis = DepBasis::Memory;
            groups.emplace(key, std::move(d));
          } else {
            it->second.relation = it->second.relation.unite(rel);
          }
        }
      }
    }
  }
  for (auto &[key, dep] : groups)
    result.all.push_back(std::move(dep));
  return result;
}

//===----------------------------------------------------------------------===//
// Value-based dependences by interpretation of the original schedule
//===----------------------------------------------------------------------===//

namespace {

int64_t evalAffine(const AffineExpr &e,
                   const std::map<std::string, int64_t> &env) {
  int64_t v = e.constant();
  for (const auto &[name, c] : e.coeffs())
    v = checkedAdd(v, checkedMul(c, env.at(name)));
  return v;
}

struct Instance {
  int stmtIdx;
  std::vector<int64_t> point;
  std::vector<int64_t> stamp;
};

std::vector<Instance>
instancesInScheduleOrder(const Scop &scop, const Schedule &sched,
                         const std::map<std::string, int64_t> &params) {
  std::vector<Instance> instances;
  for (size_t si = 0; si < scop.statements.size(); ++si) {
    const Statement &stmt = scop.statements[si];
    std::vector<AffineExpr> ts = sched.timestamp(stmt.name);
    for (const auto &pt : stmt.domain.enumerate(params)) {
      std::map<std::string, int64_t> env = params;
      for (size_t k = 0; k < stmt.iterators.size(); ++k)
        env[stmt.iterators[k]] = pt[k];
      Instance inst;
      inst.stmtIdx = static_cast<int>(si);
      inst.point = pt;
      for (const AffineExpr &e : ts)
        inst.stamp.push_back(evalAffine(e, env));
      instances.push_back(std::move(inst));
    }
  }
  std::sort(instances.begin(), instances.end(),
            [](const Instance &a, const Instance &b) { return a.stamp < b.stamp; });
  return instances;
}

struct ConcreteAccess {
  int stmtIdx;
  std::vector<int64_t> point;
  int accessId;
};

} // namespace

DependenceSet valueDeps(const Scop &scop,
                        const std::map<std::string, int64_t> &params,
                        Granularity granularity,
                        const std::vector<ReductionInfo> &reductions) {
  Schedule sched = originalSchedule(scop);
  std::vector<Instance> order = instancesInScheduleOrder(scop, sched, params);

  struct Cell {
    std::optional<ConcreteAccess> lastWrite;
    std::vector<ConcreteAccess> readsSinceWrite;
  };
  std::map<std::pair<std::string, std::vector<int64_t>>, Cell> cells;

  struct PairRec {
    ConcreteAccess src, tgt;
    DepKind kind;
  };
  std::vector<PairRec> pairs;
  auto sameInstance = [](const ConcreteAccess &a, const ConcreteAccess &b) {
    return a.stmtIdx == b.stmtIdx && a.point == b.point;
  };

  for (const Instance &inst : order) {
    const Statement &stmt = scop.statements[inst.stmtIdx];
    std::map<std::string, int64_t> env = params;
    for (size_t k = 0; k < stmt.iterators.size(); ++k)
      env[stmt.iterators[k]] = inst.point[k];
    for (const Instruction &instr : stmt.instructions) {
      const auto *load = std::get_if<LoadInst>(&instr);
      const auto *store = std::get_if<StoreInst>(&instr);
      if (!load && !store)
        continue;
      const std::string &array = load ? load->array : store->array;
      const auto &subs = load ? load->subscripts : store->subscripts;
      std::vector<int64_t> idx;
      for (const AffineExpr &e : subs)
        idx.push_back(evalAffine(e, env));
      Cell &cell = cells[{array, idx}];
      ConcreteAccess self{inst.stmtIdx, inst.point,
                          load ? load->id : store->id};
      if (load) {
        if (cell.lastWrite && !sameInstance(*cell.lastWrite, self))
          pairs.push_back({*cell.lastWrite, self, DepKind::RAW});
        cell.readsSinceWrite.push_back(self);
      } else {
        if (cell.lastWrite && !sameInstance(*cell.lastWrite, self))
          pairs.push_back({*cell.lastWrite, self, DepKind::WAW});
        for (const ConcreteAccess &r : cell.readsSinceWrite)
          if (!sameInstance(r, self))
            pairs.push_back({r, self, DepKind::WAR});
        cell.lastWrite = self;
        cell.readsSinceWrite.clear();
      }
    }
  }

  DependenceSet result;
  result.granularity = granularity;
  result.basis = DepBasis::Value;

  std::map<GroupKey, Dependence> groups;
  for (const PairRec &pr : pairs) {
    const Statement &qs = scop.statements[pr.src.stmtIdx];
    const Statement &ts = scop.statements[pr.tgt.stmtIdx];
    GroupKey key{pr.src.stmtIdx, pr.tgt.stmtIdx,
                 groupOf(qs, pr.src.accessId, granularity, reductions),
                 groupOf(ts, pr.tgt.accessId, granularity, reductions),
                 pr.kind};
    auto it = groups.find(key);
    if (it == groups.end()) {
      Dependence d;
      d.srcStmt = qs.name;
      d.tgtStmt = ts.name;
      if (key.srcGroup >= 0)
        d.srcAccess = key.srcGroup;
      if (key.tgtGroup >= 0)
        d.tgtAccess = key.tgtGroup;
      d.relation =
          IntRel(qs.iterators, primedAll(ts.iterators), {});
      d.kind = pr.kind;
      d.basis = DepBasis::Value;
      it = groups.emplace(key, std::move(d)).first;
    }
    std::vector<Constraint> cons;
    for (size_t k = 0; k < qs.iterators.size(); ++k)
      cons.push_back(eq(AffineExpr::var(qs.iterators[k]),
                        AffineExpr(pr.src.point[k])));
    for (size_t k = 0; k < ts.iterators.size(); ++k)
      cons.push_back(eq(AffineExpr::var(primed(ts.iterators[k])),
                        AffineExpr(pr.tgt.point[k])));
    it->second.relation.addPiece(cons);
  }
  for (auto &[key, dep] : groups)
    result.all.push_back(std::move(dep));
  return result;
}

//===----------------------------------------------------------------------===//
// Partitioning into D_rho / D_nu
//===----------------------------------------------------------------------===//

namespace {

bool isReductionStore(const std::vector<ReductionInfo> &reductions,
                      const std::string &stmt, int accessId) {
  for (const ReductionInfo &rc : reductions)
    if (rc.stmt == stmt && rc.storeId == accessId)
      return true;
  return false;
}

/// Loop-carried WAW self conflicts caused by a non-reduction store make
/// statement-level attribution unsound.
void checkStatementGranularityAttribution(
    const Scop &scop, const std::vector<ReductionInfo> &reductions) {
  Schedule sched = originalSchedule(scop);
  for (const Statement &stmt : scop.statements) {
    bool hasReduction = false;
    for (const ReductionInfo &rc : reductions)
      hasReduction |= rc.stmt == stmt.name;
    if (!hasReduction || stmt.stores().size() <= 1)
      continue;
    for (const StoreInst *w : stmt.stores()) {
      if (isReductionStore(reductions, stmt.name, w->id))
        continue;
      for (const StoreInst *other : stmt.stores()) {
        if (w->array != other->array)
          continue;
        AccessInfo a{&stmt, w->id, true, &w->array, &w->subscripts};
        AccessInfo b{&stmt, other->id, true, &other->array,
                     &other->subscripts};
        if (conflictRelation(scop, sched, a, b).hasPieces() ||
            conflictRelation(scop, sched, b, a).hasPieces())
          throw AnalysisRefusal(
              "statement-wise dependence analysis cannot attribute "
              "write-after-write self dependences of compound statement '" +
              stmt.name + "' (store of '" + *a.array +
              "' conflicts across iterations); use access or hybrid "
              "granularity");
      }
    }
  }
}

} // namespace

DependenceSet partition(DependenceSet deps, const Scop &scop,
                        const std::vector<ReductionInfo> &reductions) {
  if (deps.granularity == Granularity::Statement)
    checkStatementGranularityAttribution(scop, reductions);

  deps.rho.clear();
  deps.nu.clear();
  // Reduction dependences: WAW self dependences of each reduction access
  // pair. At statement granularity (attribution just checked) the whole WAW
  // self entry of a reduction statement qualifies.
  std::map<std::string, IntRel> rhoPairsOfStmt;
  for (const Dependence &d : deps.all) {
    if (d.kind != DepKind::WAW || d.srcStmt != d.tgtStmt)
      continue;
    bool isRho = false;
    if (deps.granularity == Granularity::Statement) {
      for (const ReductionInfo &rc : reductions)
        isRho |= rc.stmt == d.srcStmt;
    } else {
      isRho = d.srcAccess && d.tgtAccess && *d.srcAccess == *d.tgtAccess &&
              isReductionStore(reductions, d.srcStmt, *d.srcAccess);
    }
    if (!isRho)
      continue;
    deps.rho.push_back(d);
    auto it = rhoPairsOfStmt.find(d.srcStmt);
    if (it == rhoPairsOfStmt.end())
      rhoPairsOfStmt.emplace(d.srcStmt, d.relation);
    else
      it->second = it->second.unite(d.relation);
  }

  // Everything else, as point sets: subtract the reduction pairs from other
  // self entries of the same statement (identical instance pairs may appear
  // under several kinds; they are reduction dependences all the same).
  for (const Dependence &d : deps.all) {
    bool wasRho =
        std::any_of(deps.rho.begin(), deps.rho.end(), [&](const Dependence &r) {
          return r.srcStmt == d.srcStmt && r.tgtStmt == d.tgtStmt &&
                 r.kind == d.kind && r.srcAccess == d.srcAccess &&
                 r.tgtAccess == d.tgtAccess;
        });
    if (wasRho)
      continue;
    auto it = rhoPairsOfStmt.find(d.srcStmt);
    if (d.srcStmt == d.tgtStmt && it != rhoPairsOfStmt.end()) {
      Dependence rest = d;
      rest.relation = d.relation.subtract(it->second).simplify();
      if (rest.relation.hasPieces())
        deps.nu.push_back(std::move(rest));
    } else {
      deps.nu.push_back(d);
    }
  }
  deps.partitioned = true;
  return deps;
}

ClosureResult reductionClosure(const DependenceSet &deps, const Scop &scop,
                               const std::string &stmtName) {
  if (!deps.partitioned)
    throw AnalysisRefusal("reduction closure requires partitioned dependences");
  const Statement &stmt = scop.stmt(stmtName);
  std::optional<IntRel> rho;
  for (const Dependence &d : deps.rho) {
    if (d.srcStmt != stmtName)
      continue;
    rho = rho ? rho->unite(d.relation) : d.relation;
  }
  if (!rho) {
    IntRel empty(stmt.iterators, primedAll(stmt.iterators),
                 deps.basis == DepBasis::Memory ? scop.parameters
                                                : std::vector<std::string>{});
    return {empty, true};
  }
  // Value-based relations are concrete; the parametric statement domain
  // would reintroduce symbols, and the closure's own domain/range
  // restriction already confines it.
  if (deps.basis == DepBasis::Value)
    return transitiveClosure(*rho, nullptr);
  return transitiveClosure(*rho, &stmt.domain);
}

DependenceSet addPrivatizationDeps(DependenceSet deps, const Scop &scop,
                                   const std::vector<ReductionInfo> &reductions) {
  if (!deps.partitioned)
    throw AnalysisRefusal(
        "privatization dependences require partitioned dependences");
  deps.tau.clear();

  std::map<std::string, IntRel> closures;
  for (const ReductionInfo &rc : reductions)
    if (!closures.count(rc.stmt))
      closures.emplace(rc.stmt, reductionClosure(deps, scop, rc.stmt).rel);

  for (const Dependence &d : deps.nu) {
    if (d.srcStmt == d.tgtStmt)
      continue; // cross dependences only
    const Statement &srcStmt = scop.stmt(d.srcStmt);
    const Statement &tgtStmt = scop.stmt(d.tgtStmt);
    // Into a reduction statement: <i_T, closure(i_S)>, plus the original.
    if (auto it = closures.find(d.tgtStmt); it != closures.end()) {
      IntRel extended = d.relation.unite(renameRel(
          d.relation.compose(it->second), srcStmt.iterators,
          primedAll(tgtStmt.iterators)));
      Dependence t = d;
      t.relation = extended.simplify();
      deps.tau.push_back(std::move(t));
    }
    // Out of a reduction statement: <closure(i_S), i_T>, plus the original.
    if (auto it = closures.find(d.srcStmt); it != closures.end()) {
      IntRel extended = d.relation.unite(renameRel(
          it->second.inverse().compose(d.relation), srcStmt.iterators,
          primedAll(tgtStmt.iterators)));
      Dependence t = d;
      t.relation = extended.simplify();
      deps.tau.push_back(std::move(t));
    }
  }
  return deps;
}

std::set<InstancePair>
enumerateDeps(const std::vector<Dependence> &deps,
              const std::map<std::string, int64_t> &params) {
  std::set<InstancePair> result;
  for (const Dependence &d : deps) {
    size_t nIn = d.relation.inDims().size();
    for (const auto &pt : d.relation.enumerate(params)) {
      InstancePair p;
      p.srcStmt = d.srcStmt;
      p.src.assign(pt.begin(), pt.begin() + nIn);
      p.tgtStmt = d.tgtStmt;
      p.tgt.assign(pt.begin() + nIn, pt.end());
      p.kind = d.kind;
      result.insert(std::move(p));
    }
  }
  return result;
}

} // namespace polyred

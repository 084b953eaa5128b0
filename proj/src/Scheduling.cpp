//===- Scheduling.cpp -----------------------------------------------------==//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "polyred/Scheduling.h"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <unordered_map>

namespace polyred {

std::string legalityModeName(LegalityMode m) {
  switch (m) {
  case LegalityMode::Strict: return "strict";
  case LegalityMode::Relaxed: return "relaxed";
  case LegalityMode::Privatized: return "privatized";
  }
  return "?";
}

std::string dimClassName(DimClass c) {
  switch (c) {
  case DimClass::Sequential: return "sequential";
  case DimClass::Parallel: return "parallel";
  case DimClass::ReductionParallel: return "reduction-parallel";
  }
  return "?";
}

namespace {



/// Timestamps of a dependence's source and target over the relation's space
/// (target side expressed in the primed dims).
struct DepTimestamps {
  std::vector<AffineExpr> src, tgt;
};

DepTimestamps timestampsFor(const Schedule &schedule, const Dependence &d) {
  DepTimestamps t;
  t.src = schedule.timestamp(d.srcStmt);
  t.tgt = schedule.timestamp(d.tgtStmt);
  // The relation's output dims are the primed target iterators, in order.
  for (AffineExpr &e : t.tgt) {
    AffineExpr renamed = e;
    for (size_t k = 0; k < d.relation.outDims().size(); ++k) {
      const std::string &out = d.relation.outDims()[k];
      assert(out.size() > 1 && out.back() == '\'');
      renamed = renamed.renameDim(out.substr(0, out.size() - 1), out);
    }
    e = renamed;
  }
  return t;
}

/// relation /\ extra constraints, per piece; nonempty means the condition
/// named by the caller fails somewhere.
bool intersectionNonEmpty(const IntRel &relation,
                          const std::vector<std::vector<Constraint>> &pieces) {
  for (const BasicSet &rp : relation.asSet().pieces()) {
    for (const std::vector<Constraint> &extra : pieces) {
      BasicSet piece = rp;
      for (const Constraint &c : extra)
        piece.addConstraint(c);
      if (!piece.tighten())
        continue;
      IntSet probe(relation.asSet().space());
      probe.addPiece(piece);
      if (!probe.isEmpty().empty)
        return true;
    }
  }
  return false;
}

std::optional<std::pair<std::vector<int64_t>, std::vector<int64_t>>>
findWitness(const IntRel &relation,
            const std::vector<std::vector<Constraint>> &pieces,
            const std::map<std::string, int64_t> &params) {
  for (const BasicSet &rp : relation.asSet().pieces()) {
    for (const std::vector<Constraint> &extra : pieces) {
      BasicSet piece = rp;
      for (const Constraint &c : extra)
        piece.addConstraint(c);
      if (!piece.tighten())
        continue;
      IntSet probe(relation.asSet().space());
      probe.addPiece(piece);
      auto pts = probe.enumerate(params);
      if (!pts.empty()) {
        size_t nIn = relation.inDims().size();
        std::vector<int64_t> src(pts[0].begin(), pts[0].begin() + nIn);
        std::vector<int64_t> tgt(pts[0].begin() + nIn, pts[0].end());
        return std::make_pair(src, tgt);
      }
    }
  }
  return std::nullopt;
}

/// Violation pieces of the order condition: target not lexicographically
/// after source, i.e. tgt << src or tgt = src.
std::vector<std::vector<Constraint>>
orderViolationPieces(const DepTimestamps &t) {
  std::vector<std::vector<Constraint>> pieces = lexLtPieces(t.tgt, t.src);
  if (auto eqPiece = lexEqConstraints(t.src, t.tgt))
    pieces.push_back(*eqPiece);
  return pieces;
}

void checkDep(const Schedule &schedule, const Dependence &d, bool equalOnly,
              const std::map<std::string, int64_t> &params,
              ValidationResult &result, bool wantWitness = true) {
  DepTimestamps t = timestampsFor(schedule, d);
  std::vector<std::vector<Constraint>> pieces;
  if (equalOnly) {
    if (auto eqPiece = lexEqConstraints(t.src, t.tgt))
      pieces.push_back(*eqPiece);
  } else {
    pieces = orderViolationPieces(t);
  }
  if (pieces.empty() || !intersectionNonEmpty(d.relation, pieces))
    return;
  Violation v;
  v.srcStmt = d.srcStmt;
  v.tgtStmt = d.tgtStmt;
  v.kind = d.kind;
  v.equalTimestamp = equalOnly;
  if (wantWitness &&
      (!params.empty() || d.relation.asSet().space().params.empty()))
    v.witness = findWitness(d.relation, pieces, params);
  v.text = std::string(equalOnly ? "distinct-timestamp" : "order") +
           " condition violated for " + depKindName(d.kind) + " dependence " +
           d.srcStmt + " -> " + d.tgtStmt;
  result.violations.push_back(std::move(v));
  result.ok = false;
}

} // namespace

ValidationResult validate(const Schedule &schedule, const DependenceSet &deps,
                          LegalityMode mode,
                          const std::map<std::string, int64_t> &params) {
  if (mode != LegalityMode::Strict && !deps.partitioned)
    throw AnalysisRefusal(legalityModeName(mode) +
                          " validation requires partitioned dependences");
  ValidationResult result;
  switch (mode) {
  case LegalityMode::Strict:
    for (const Dependence &d : deps.all)
      checkDep(schedule, d, /*equalOnly=*/false, params, result);
    break;
  case LegalityMode::Relaxed:
    for (const Dependence &d : deps.nu)
      checkDep(schedule, d, /*equalOnly=*/false, params, result);
    for (const Dependence &d : deps.rho)
      checkDep(schedule, d, /*equalOnly=*/true, params, result);
    break;
  case LegalityMode::Privatized:
    for (const Dependence &d : deps.nu)
      checkDep(schedule, d, /*equalOnly=*/false, params, result);
    for (const Dependence &d : deps.tau)
      checkDep(schedule, d, /*equalOnly=*/false, params, result);
    for (const Dependence &d : deps.rho)
      checkDep(schedule, d, /*equalOnly=*/true, params, result);
    break;
  }
  return result;
}

//===----------------------------------------------------------------------===//
// Dimension classification
//===----------------------------------------------------------------------===//

namespace {

/// Does the dependence carry at dimension k: equal timestamp prefix, strict
/// difference at k, for some related pair?
bool carriedAt(const Schedule &schedule, const Dependence &d, size_t k) {
  DepTimestamps t = timestampsFor(schedule, d);
  if (k >= t.src.size())
    return false;
  std::vector<Constraint> prefix;
  for (size_t i = 0; i < k; ++i) {
    AffineExpr diff = t.tgt[i] - t.src[i];
    if (diff.isConstant()) {
      if (diff.constant() != 0)
        return false; // never equal before k
    } else {
      prefix.push_back(eq0(diff));
    }
  }
  AffineExpr diffK = t.tgt[k] - t.src[k];
  std::vector<std::vector<Constraint>> pieces;
  if (diffK.isConstant()) {
    if (diffK.constant() == 0)
      return false;
    pieces.push_back(prefix);
  } else {
    std::vector<Constraint> lt = prefix, gt = prefix;
    lt.push_back(ge0(diffK - 1));
    gt.push_back(ge0(-diffK - 1));
    pieces.push_back(std::move(lt));
    pieces.push_back(std::move(gt));
  }
  return intersectionNonEmpty(d.relation, pieces);
}

} // namespace

DimClassification classifyDims(const Schedule &schedule,
                               const DependenceSet &deps, LegalityMode mode) {
  if (mode != LegalityMode::Strict && !deps.partitioned)
    throw AnalysisRefusal("classification requires partitioned dependences");
  size_t dim = schedule.paddedDim();
  DimClassification result;
  for (const auto &[stmt, rows] : schedule.rows)
    result.dims[stmt].assign(dim, DimClass::Parallel);

  auto mark = [&](const Dependence &d, DimClass cls) {
    for (size_t k = 0; k < dim; ++k) {
      if (!carriedAt(schedule, d, k))
        continue;
      for (const std::string &stmt : {d.srcStmt, d.tgtStmt}) {
        DimClass &slot = result.dims.at(stmt)[k];
        if (cls == DimClass::Sequential)
          slot = DimClass::Sequential;
        else if (slot == DimClass::Parallel)
          slot = DimClass::ReductionParallel;
      }
    }
  };

  if (mode == LegalityMode::Strict) {
    for (const Dependence &d : deps.all)
      mark(d, DimClass::Sequential);
    return result;
  }
  for (const Dependence &d : deps.nu)
    mark(d, DimClass::Sequential);
  if (mode == LegalityMode::Privatized)
    for (const Dependence &d : deps.tau)
      mark(d, DimClass::Sequential);
  for (const Dependence &d : deps.rho)
    mark(d, DimClass::ReductionParallel);
  return result;
}

//===----------------------------------------------------------------------===//
// Bounded schedule search
//===----------------------------------------------------------------------===//

namespace {

/// One candidate loop transformation of a statement: new iterator rows are
/// M * iters + shift, substituted into the original interleaved timestamp.
struct StmtCandidate {
  std::vector<std::vector<int64_t>> matrix; // d x d, unimodular by family
  std::vector<int64_t> shift;
  std::vector<int64_t> encoding; // deterministic tie-break key
};

std::vector<AffineExpr> applyCandidate(const std::vector<AffineExpr> &original,
                                       const std::vector<std::string> &iters,
                                       const StmtCandidate &cand) {
  // Replace the loop-counter rows of the 2d+1 original timestamp: row for
  // iterator r becomes sum_c M[r][c]*iter_c + shift[r]. Constant rows stay.
  std::vector<AffineExpr> rows = original;
  size_t next = 0;
  for (AffineExpr &row : rows) {
    if (row.isConstant())
      continue;
    assert(next < iters.size());
    AffineExpr e(cand.shift[next]);
    for (size_t c = 0; c < iters.size(); ++c)
      e = e + AffineExpr::var(iters[c]) * cand.matrix[next][c];
    row = e;
    ++next;
  }
  return rows;
}

std::vector<StmtCandidate> candidatesFor(size_t d, int depth) {
  std::vector<StmtCandidate> result;
  if (d == 0)
    return {StmtCandidate{{}, {}, {}}};

  std::vector<std::vector<std::vector<int64_t>>> skews;
  {
    std::vector<std::vector<int64_t>> identity(d, std::vector<int64_t>(d, 0));
    for (size_t i = 0; i < d; ++i)
      identity[i][i] = 1;
    skews.push_back(identity);
    if (depth >= 2) {
      for (size_t r = 0; r < d; ++r)
        for (size_t c = 0; c < d; ++c) {
          if (r == c)
            continue;
          for (int64_t s : {int64_t(1), int64_t(-1)}) {
            auto m = identity;
            m[r][c] = s;
            skews.push_back(m);
          }
        }
    }
  }

  std::vector<size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<size_t>> perms;
  if (depth >= 1) {
    do {
      perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    perms.push_back(perm);
  }

  size_t signCount = depth >= 1 ? (size_t(1) << d) : 1;
  size_t shiftCount = depth >= 1 ? (size_t(1) << d) : 1;

  for (const auto &p : perms) {
    for (size_t signs = 0; signs < signCount; ++signs) {
      for (const auto &skew : skews) {
        for (size_t shifts = 0; shifts < shiftCount; ++shifts) {
          StmtCandidate cand;
          cand.matrix.assign(d, std::vector<int64_t>(d, 0));
          // row r of P*S*K: take row p[r] of the sign-flipped skew.
          for (size_t r = 0; r < d; ++r) {
            int64_t sign = (signs >> p[r]) & 1 ? -1 : 1;
            for (size_t c = 0; c < d; ++c)
              cand.matrix[r][c] = sign * skew[p[r]][c];
          }
          cand.shift.assign(d, 0);
          for (size_t r = 0; r < d; ++r)
            cand.shift[r] = (shifts >> r) & 1;
          // Coefficient encoding ordered by deviation from the identity
          // transform, so the identity is the smallest encoding and plain
          // permutations beat reversals on ties.
          auto code = [](int64_t v, int64_t idValue) -> int64_t {
            if (v == idValue)
              return -1;
            return (v < 0 ? -v * 2 + 1 : v * 2);
          };
          for (size_t r = 0; r < d; ++r)
            for (size_t c = 0; c < d; ++c)
              cand.encoding.push_back(code(cand.matrix[r][c], r == c ? 1 : 0));
          for (int64_t s : cand.shift)
            cand.encoding.push_back(code(s, 0));
          result.push_back(std::move(cand));
        }
      }
    }
  }
  std::sort(result.begin(), result.end(),
            [](const StmtCandidate &a, const StmtCandidate &b) {
              return a.encoding < b.encoding;
            });
  result.erase(std::unique(result.begin(), result.end(),
                           [](const StmtCandidate &a, const StmtCandidate &b) {
                             return a.encoding == b.encoding;
                           }),
               result.end());
  return result;
}

/// Rank of a complete assignment: (sum of outermost-loop-dim scores,
/// -privatized statements). Higher is better.
struct RankKey {
  int score = 0;
  int privatized = 0;
  bool betterThan(const RankKey &o) const {
    if (score != o.score)
      return score > o.score;
    return privatized < o.privatized;
  }
};

} // namespace

SearchResult search(const Scop &scop, const DependenceSet &deps,
                    LegalityMode mode, const SearchOptions &opts) {
  Schedule original = originalSchedule(scop);
  if (mode != LegalityMode::Strict && !deps.partitioned)
    throw AnalysisRefusal("schedule search requires partitioned dependences");

  const size_t numStmts = scop.statements.size();
  std::vector<std::vector<StmtCandidate>> candidates;
  for (const Statement &stmt : scop.statements)
    candidates.push_back(candidatesFor(stmt.depth(), opts.depth));

  // Dependences bucketed by the pair of statements they touch, so the
  // backtracking validates each dependence as soon as both endpoints have
  // schedules.
  auto relevantSets = [&]() -> std::vector<std::pair<const Dependence *, bool>> {
    // bool: check only the distinct-timestamp condition.
    std::vector<std::pair<const Dependence *, bool>> r;
    if (mode == LegalityMode::Strict) {
      for (const Dependence &d : deps.all)
        r.push_back({&d, false});
    } else {
      for (const Dependence &d : deps.nu)
        r.push_back({&d, false});
      for (const Dependence &d : deps.rho)
        r.push_back({&d, true});
      if (mode == LegalityMode::Privatized)
        for (const Dependence &d : deps.tau)
          r.push_back({&d, false});
    }
    return r;
  }();

  std::vector<std::vector<std::pair<const Dependence *, bool>>> depsAtLevel(
      numStmts);
  for (auto &[dep, equalOnly] : relevantSets) {
    size_t src = scop.stmtIndex(dep->srcStmt);
    size_t tgt = scop.stmtIndex(dep->tgtStmt);
    depsAtLevel[std::max(src, tgt)].push_back({dep, equalOnly});
  }

  long validations = 0;
  bool exhausted = false;
  std::vector<const StmtCandidate *> chosen(numStmts, nullptr);
  std::optional<RankKey> bestKey;
  Schedule bestSchedule;
  std::vector<int64_t> bestEncoding;

  // Backtracking revisits the same (dependence, candidate pair) many times;
  // legality and carried-dim queries are cached on the candidate identities.
  struct QueryKey {
    const Dependence *dep;
    const StmtCandidate *src, *tgt;
    int dim; // -1: legality (order), -2: legality (equal-only)
    bool operator==(const QueryKey &) const = default;
  };
  struct QueryKeyHash {
    size_t operator()(const QueryKey &k) const {
      size_t h = std::hash<const void *>()(k.dep);
      h = h * 31 + std::hash<const void *>()(k.src);
      h = h * 31 + std::hash<const void *>()(k.tgt);
      h = h * 31 + std::hash<int>()(k.dim);
      return h;
    }
  };
  std::unordered_map<QueryKey, bool, QueryKeyHash> queryCache;

  // Outermost loop dimension of a statement under a schedule, and the deps
  // relevant for ranking.
  auto outerLoopDim = [&](const Schedule &sched, const std::string &stmt) {
    const std::vector<AffineExpr> &rows = sched.rows.at(stmt);
    for (size_t k = 0; k < rows.size(); ++k)
      if (!rows[k].isConstant())
        return std::optional<size_t>(k);
    return std::optional<size_t>();
  };

  auto cachedCarried = [&](const Schedule &sched, const Dependence &d,
                           size_t k) {
    QueryKey qk{&d, chosen[scop.stmtIndex(d.srcStmt)],
                chosen[scop.stmtIndex(d.tgtStmt)], static_cast<int>(k)};
    auto it = queryCache.find(qk);
    if (it != queryCache.end())
      return it->second;
    bool r = carriedAt(sched, d, k);
    queryCache.emplace(qk, r);
    return r;
  };

  auto rankOf = [&](const Schedule &sched) {
    RankKey key;
    for (const Statement &stmt : scop.statements) {
      auto k = outerLoopDim(sched, stmt.name);
      if (!k)
        continue;
      bool seq = false, red = false;
      for (auto &[dep, equalOnly] : relevantSets) {
        if (equalOnly)
          continue; // reduction deps never sequentialize a dim
        if (dep->srcStmt != stmt.name && dep->tgtStmt != stmt.name)
          continue;
        if (cachedCarried(sched, *dep, *k))
          seq = true;
      }
      if (mode != LegalityMode::Strict) {
        for (const Dependence &d : deps.rho) {
          if (d.srcStmt != stmt.name && d.tgtStmt != stmt.name)
            continue;
          if (cachedCarried(sched, d, *k))
            red = true;
        }
      }
      if (seq)
        key.score += 0;
      else if (red) {
        key.score += 1;
        key.privatized += 1;
      } else {
        key.score += 2;
      }
    }
    return key;
  };

  Schedule current = original;
  std::function<void(size_t)> assign = [&](size_t level) {
    if (exhausted)
      return;
    if (level == numStmts) {
      RankKey key = rankOf(current);
      std::vector<int64_t> encoding;
      for (size_t s = 0; s < numStmts; ++s)
        encoding.insert(encoding.end(), chosen[s]->encoding.begin(),
                        chosen[s]->encoding.end());
      if (!bestKey || key.betterThan(*bestKey) ||
          (!bestKey->betterThan(key) && encoding < bestEncoding)) {
        bestKey = key;
        bestSchedule = current;
        bestEncoding = encoding;
      }
      return;
    }
    const Statement &stmt = scop.statements[level];
    for (const StmtCandidate &cand : candidates[level]) {
      if (++validations > opts.budget) {
        exhausted = true;
        return;
      }
      current.rows[stmt.name] =
          applyCandidate(original.rows.at(stmt.name), stmt.iterators, cand);
      chosen[level] = &cand;
      bool legal = true;
      for (auto &[dep, equalOnly] : depsAtLevel[level]) {
        QueryKey qk{dep, chosen[scop.stmtIndex(dep->srcStmt)],
                    chosen[scop.stmtIndex(dep->tgtStmt)], equalOnly ? -2 : -1};
        auto it = queryCache.find(qk);
        bool depOk;
        if (it != queryCache.end()) {
          depOk = it->second;
        } else {
          ValidationResult vr;
          checkDep(current, *dep, equalOnly, {}, vr, /*wantWitness=*/false);
          depOk = vr.ok;
          queryCache.emplace(qk, depOk);
        }
        if (!depOk) {
          legal = false;
          break;
        }
      }
      if (legal)
        assign(level + 1);
      if (exhausted)
        return;
    }
    current.rows[stmt.name] = original.rows.at(stmt.name);
  };
  assign(0);

  SearchResult result;
  if (exhausted || !bestKey) {
    result.schedule = original;
    result.fromSearch = false;
    result.diagnostic = exhausted
                            ? "search budget exhausted; original schedule kept"
                            : "no legal candidate found; original schedule kept";
    result.classification = classifyDims(original, deps, mode);
    return result;
  }
  result.schedule = bestSchedule;
  result.classification = classifyDims(bestSchedule, deps, mode);
  return result;
}

} // namespace polyred

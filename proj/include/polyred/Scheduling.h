//===- Scheduling.h - Legality validation and schedule search --*- C++ -*-===//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Schedules are validated under three causality regimes:
//
//   Strict:     every dependence source precedes its target (lexicographic
//               order on zero-padded timestamps).
//   Relaxed:    non-reduction dependences keep the order condition; instances
//               related by a reduction dependence may be reordered freely as
//               long as they never share a timestamp.
//   Privatized: the order condition covers the non-reduction and the
//               privatization dependences; reduction dependences impose no
//               order but keep the distinct-timestamp requirement (schedules
//               stay injective on reduction instances).
//
// A bounded search enumerates per-statement loop transformations (dimension
// permutations, reversals, constant shifts and, at higher depth, unit skews),
// keeps the legal ones and ranks them: true parallelism outermost first, then
// fewer privatized statements, then the smallest coefficient encoding.
//
//===----------------------------------------------------------------------===//

#ifndef POLYRED_SCHEDULING_H
#define POLYRED_SCHEDULING_H

#include "polyred/Dependences.h"
#include "polyred/Scop.h"

namespace polyred {

enum class LegalityMode { Strict, Relaxed, Privatized };
std::string legalityModeName(LegalityMode m);

enum class DimClass { Sequential, Parallel, ReductionParallel };
std::string dimClassName(DimClass c);

/// Per statement, per (padded) schedule dimension.
struct DimClassification {
  std::map<std::string, std::vector<DimClass>> dims;

  DimClass of(const std::string &stmt, size_t dim) const {
    return dims.at(stmt).at(dim);
  }
};

struct Violation {
  std::string srcStmt, tgtStmt;
  DepKind kind;
  bool equalTimestamp; // true: violated the distinct-timestamp condition
  std::optional<std::pair<std::vector<int64_t>, std::vector<int64_t>>> witness;
  std::string text;
};

struct ValidationResult {
  bool ok = true;
  std::vector<Violation> violations;
};

/// Checks the causality condition of `mode` for every relevant dependence.
/// Relaxed and Privatized require a partitioned dependence set. A witness
/// pair is attached when `params` binds all parameters.
ValidationResult validate(const Schedule &schedule, const DependenceSet &deps,
                          LegalityMode mode,
                          const std::map<std::string, int64_t> &params = {});

/// A dependence is carried at dimension k when some related instance pair
/// has equal timestamps before k and different ones at k. A dimension is
/// sequential if a non-reduction (plus privatization, in Privatized mode)
/// dependence is carried there, reduction-parallel if only reduction
/// dependences are, and parallel otherwise.
DimClassification classifyDims(const Schedule &schedule,
                               const DependenceSet &deps, LegalityMode mode);

struct SearchOptions {
  /// 0: original only; 1: permutations, reversals, shifts; 2: adds unit
  /// skews.
  int depth = 1;
  /// Upper bound on candidate validations before giving up.
  long budget = 200000;
};

struct SearchResult {
  Schedule schedule;
  DimClassification classification;
  bool fromSearch = true; // false: budget exhausted, original returned
  std::string diagnostic;
};

SearchResult search(const Scop &scop, const DependenceSet &deps,
                    LegalityMode mode, const SearchOptions &opts = {});

} // namespace polyred

#endif // POLYRED_SCHEDULING_H

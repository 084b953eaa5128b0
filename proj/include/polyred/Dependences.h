//===- Dependences.h - Memory/value dependences and D_rho/D_nu/D_tau -*- C++ -*-=//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Dependences are relations between statement instances, computed either
// symbolically from the access functions (memory-based: every ordered pair of
// conflicting accesses) or by interpreting the original schedule at fixed
// parameters (value-based: last-writer flow). The set of all dependences is
// partitioned into reduction dependences (loop-carried write-after-write self
// dependences of a reduction access pair) and the rest; privatization
// dependences extend cross dependences of reduction statements through the
// transitive closure of the reduction dependences.
//
//===----------------------------------------------------------------------===//

#ifndef POLYRED_DEPENDENCES_H
#define POLYRED_DEPENDENCES_H

#include "polyred/IntRel.h"
#include "polyred/ReductionDetect.h"
#include "polyred/Scop.h"

#include <set>

namespace polyred {

/// Analysis refusals (exit code 1 in the driver): the request is well-formed
/// but cannot be answered soundly at the chosen configuration.
struct AnalysisRefusal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DepKind { RAW, WAW, WAR };
enum class DepBasis { Memory, Value };
enum class Granularity { Statement, Access, Hybrid };

std::string depKindName(DepKind k);
std::string granularityName(Granularity g);

struct Dependence {
  std::string srcStmt, tgtStmt;
  /// Instruction ids for access-wise tracking; unset for statement-grouped
  /// entries.
  std::optional<int> srcAccess, tgtAccess;
  /// Input dims: source iterators; output dims: primed target iterators.
  IntRel relation;
  DepKind kind;
  DepBasis basis;
};

struct DependenceSet {
  std::vector<Dependence> all;
  std::vector<Dependence> rho; // reduction dependences
  std::vector<Dependence> nu;  // everything else (as point sets)
  std::vector<Dependence> tau; // privatization dependences
  Granularity granularity = Granularity::Hybrid;
  DepBasis basis = DepBasis::Memory;
  bool partitioned = false;
};

/// All ordered same-location conflicts under the original schedule, per kind.
/// Granularity controls access grouping: per statement, per access, or hybrid
/// (reduction-participating accesses tracked separately, the rest grouped per
/// statement). `reductions` identifies the separately-tracked accesses; it is
/// only consulted for hybrid granularity.
DependenceSet memoryDeps(const Scop &scop, Granularity granularity,
                         const std::vector<ReductionInfo> &reductions = {});

/// Exact value-based dependences (last-writer RAW, immediately-preceding
/// writer WAW, read to next writer WAR) computed by interpreting the original
/// schedule at bound parameters, lifted to relations as unions of concrete
/// pairs.
DependenceSet valueDeps(const Scop &scop,
                        const std::map<std::string, int64_t> &params,
                        Granularity granularity,
                        const std::vector<ReductionInfo> &reductions = {});

/// Splits into reduction dependences (WAW self dependences of each detected
/// reduction access pair) and the rest. Point sets are partitioned: pairs of
/// other kinds that coincide with reduction WAW pairs move to D_rho with
/// them. Refuses statement granularity on compound statements whose extra
/// writes make WAW self dependences unattributable.
DependenceSet partition(DependenceSet deps, const Scop &scop,
                        const std::vector<ReductionInfo> &reductions);

/// Transitive closure of the reduction dependences of one statement
/// (exactness flag propagated from the closure computation).
ClosureResult reductionClosure(const DependenceSet &deps, const Scop &scop,
                               const std::string &stmt);

/// Adds privatization dependences: every cross dependence into a reduction
/// statement S is extended through the closure of S's reduction dependences
/// (and symmetrically for dependences out of S). The originals are kept in
/// the extension.
DependenceSet addPrivatizationDeps(DependenceSet deps, const Scop &scop,
                                   const std::vector<ReductionInfo> &reductions);

/// Concrete instance pairs of a dependence list at bound parameters:
/// (srcStmt, srcPoint, tgtStmt, tgtPoint, kind) tuples, deduplicated.
struct InstancePair {
  std::string srcStmt;
  std::vector<int64_t> src;
  std::string tgtStmt;
  std::vector<int64_t> tgt;
  DepKind kind;
  auto operator<=>(const InstancePair &) const = default;
};
std::set<InstancePair>
enumerateDeps(const std::vector<Dependence> &deps,
              const std::map<std::string, int64_t> &params);

} // namespace polyred

#endif // POLYRED_DEPENDENCES_H

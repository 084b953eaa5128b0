//===- Codegen.h - Privatization planning and C emission -------*- C++ -*-===//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Parallelizing a dimension that carries only reduction dependences requires
// a fix-up: each parallel context gets a private copy of the reduction
// location, initialized to the operator's identity element and aggregated
// back into the original location afterwards. The plan records which
// reductions are privatized, where the init/aggregate pair sits (immediately
// around the parallelized loop, or hoisted outward at the cost of a larger
// buffer footprint), and the emitted code realizes it as C text with OpenMP
// pragmas.
//
//===----------------------------------------------------------------------===//

#ifndef POLYRED_CODEGEN_H
#define POLYRED_CODEGEN_H

#include "polyred/ReductionDetect.h"
#include "polyred/Scheduling.h"
#include "polyred/Scop.h"

namespace polyred {

struct CodegenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Two-sided identity of an associative+commutative operator in the 64-bit
/// integer value domain (min/max use the representable extremes as
/// documented sentinels). Throws for operators without the flags.
int64_t identityElement(OpKind op);
std::string identityElementCText(OpKind op);

struct PrivatizationPlan {
  /// The schedule dimension annotated parallel (counting all timestamp
  /// dimensions, constants included).
  size_t targetDim = 0;
  /// How many loops outward of the target the init/aggregate pair moved.
  int hoistDepth = 0;
  /// Timestamp prefix length that delimits one init/aggregate region.
  size_t boundaryPrefixLen = 0;

  struct Entry {
    ReductionInfo rc;
    int64_t identity;
    std::string bufferName;
  };
  std::vector<Entry> entries; // empty: pragma only, nothing privatized
};

struct Placement {
  bool automatic = true;
  int depth = 0; // used when !automatic
  static Placement autoPlacement() { return {true, 0}; }
  static Placement atDepth(int k) { return {false, k}; }
};

/// Plans privatization for parallelizing `targetDim`. Every statement with a
/// loop at that dimension must classify parallel or reduction-parallel;
/// reduction-parallel statements get one buffer per reduction. Automatic
/// placement puts init/aggregate immediately around the parallelized loop;
/// an explicit depth hoists them that many loops outward (larger footprint,
/// fewer aggregations).
PrivatizationPlan planPrivatization(const Scop &scop, const Schedule &schedule,
                                    const DimClassification &classification,
                                    size_t targetDim,
                                    Placement placement = Placement::autoPlacement());

/// The outermost schedule dimension at which every statement with a loop
/// there classifies parallel or reduction-parallel; nullopt when none.
std::optional<size_t> defaultParallelDim(const Scop &scop,
                                         const Schedule &schedule,
                                         const DimClassification &classification);

/// Emits the transformed loop nest as C text (C99 + OpenMP pragma). The
/// schedule must come from the regenerable family (per-statement unimodular
/// iterator transforms plus shifts of the source nest); anything else is
/// reported as an error pointing at the search output. Deterministic,
/// byte-stable formatting.
std::string emitC(const Scop &scop, const Schedule &schedule,
                  const DimClassification &classification,
                  const std::optional<PrivatizationPlan> &plan);

} // namespace polyred

#endif // POLYRED_CODEGEN_H

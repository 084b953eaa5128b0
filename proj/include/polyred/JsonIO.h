//===- JsonIO.h - Machine-readable dumps -----------------------*- C++ -*-===//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef POLYRED_JSONIO_H
#define POLYRED_JSONIO_H

#include "polyred/Codegen.h"
#include "polyred/Dependences.h"
#include "polyred/Executor.h"
#include "polyred/Scheduling.h"
#include "polyred/Scop.h"

#include <json.hpp>

namespace polyred {

/// Constraint-matrix form: rows over [dims..., params..., 1].
nlohmann::json toJson(const IntSet &set);
nlohmann::json toJson(const IntRel &rel);
nlohmann::json toJson(const Scop &scop);
nlohmann::json toJson(const Scop &scop, const std::vector<ReductionInfo> &red);
nlohmann::json toJson(const DependenceSet &deps);
nlohmann::json toJson(const Schedule &schedule,
                      const DimClassification &classification);
nlohmann::json toJson(const ValidationResult &result);
nlohmann::json toJson(const DifferentialReport &report);

} // namespace polyred

#endif // POLYRED_JSONIO_H

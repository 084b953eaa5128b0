//===- Executor.h - Reference interpreter and differential checks -*- C++ -*-=//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// The executor proves transformations semantics-preserving: it runs a scop
// once in source order and once under a transformed schedule with privatized,
// seeded-randomly interleaved parallel contexts, then compares the final
// memory states for exact integer equality. Parallelism is simulated
// deterministically from a seed in a single execution stream; statement
// instances are the atomicity unit.
//
//===----------------------------------------------------------------------===//

#ifndef POLYRED_EXECUTOR_H
#define POLYRED_EXECUTOR_H

#include "polyred/Codegen.h"
#include "polyred/Scop.h"

namespace polyred {

struct ExecutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact integer memory: per array, subscript vector to value. Unwritten
/// locations read a seeded pseudo-random input value, so two states with the
/// same input seed are comparable over any footprint.
class MemoryState {
public:
  explicit MemoryState(uint64_t inputSeed = 0) : seed_(inputSeed) {}

  static int64_t inputValue(uint64_t seed, const std::string &array,
                            const std::vector<int64_t> &index);

  int64_t read(const std::string &array, const std::vector<int64_t> &index) const;
  void write(const std::string &array, const std::vector<int64_t> &index,
             int64_t value);

  uint64_t inputSeed() const { return seed_; }
  bool equals(const MemoryState &other) const;
  /// Locations written in either state where the values differ.
  std::vector<std::string> diff(const MemoryState &other) const;

  const std::map<std::string, std::map<std::vector<int64_t>, int64_t>> &
  values() const {
    return values_;
  }

private:
  uint64_t seed_;
  std::map<std::string, std::map<std::vector<int64_t>, int64_t>> values_;
};

struct ExecutionConfig {
  std::map<std::string, int64_t> params;
  int contexts = 1;
  uint64_t interleaveSeed = 0;
  Schedule schedule;
  std::optional<PrivatizationPlan> plan;
};

/// Statement instances executed in original-schedule lexicographic order.
MemoryState runSequential(const Scop &scop,
                          const std::map<std::string, int64_t> &params,
                          MemoryState input);

/// Instances sorted by transformed timestamps; instances sharing the prefix
/// up to the plan's parallel dimension are block-partitioned into contexts
/// and interleaved in a seeded random order, with the reduction accesses
/// redirected to private copies per the plan. The caller is responsible for
/// having validated the schedule in its legality mode.
MemoryState runScheduled(const Scop &scop, const ExecutionConfig &config,
                         MemoryState input);

struct DifferentialReport {
  struct Row {
    int contexts;
    uint64_t seed;
    bool equal;
  };
  std::vector<Row> rows;
  bool allEqual = true;
};

/// Runs the sequential reference once and the scheduled execution for every
/// (contexts, seed) combination, comparing final memory states exactly.
DifferentialReport
differentialCheck(const Scop &scop, const std::map<std::string, int64_t> &params,
                  const Schedule &schedule,
                  const std::optional<PrivatizationPlan> &plan,
                  const std::vector<int> &contexts,
                  const std::vector<uint64_t> &seeds, uint64_t inputSeed);

/// Double-precision variant of the executor. Reassociation makes
/// floating-point reductions inexact, so states compare within a relative
/// tolerance instead of bit-exactly; this mode is informational and excluded
/// from the acceptance checks. Bitwise operators are rejected.
class FloatMemoryState {
public:
  explicit FloatMemoryState(uint64_t inputSeed = 0) : seed_(inputSeed) {}

  double read(const std::string &array, const std::vector<int64_t> &index) const;
  void write(const std::string &array, const std::vector<int64_t> &index,
             double value);
  uint64_t inputSeed() const { return seed_; }
  /// True when every written location agrees within `relTol`.
  bool closeTo(const FloatMemoryState &other, double relTol = 1e-6) const;

private:
  friend FloatMemoryState
  runSequentialFloat(const Scop &, const std::map<std::string, int64_t> &,
                     FloatMemoryState);
  friend FloatMemoryState runScheduledFloat(const Scop &,
                                            const ExecutionConfig &,
                                            FloatMemoryState);
  uint64_t seed_;
  std::map<std::string, std::map<std::vector<int64_t>, double>> values_;
};

FloatMemoryState runSequentialFloat(const Scop &scop,
                                    const std::map<std::string, int64_t> &params,
                                    FloatMemoryState input);
FloatMemoryState runScheduledFloat(const Scop &scop,
                                   const ExecutionConfig &config,
                                   FloatMemoryState input);

DifferentialReport differentialCheckFloat(
    const Scop &scop, const std::map<std::string, int64_t> &params,
    const Schedule &schedule, const std::optional<PrivatizationPlan> &plan,
    const std::vector<int> &contexts, const std::vector<uint64_t> &seeds,
    uint64_t inputSeed, double relTol = 1e-6);

} // namespace polyred

#endif // POLYRED_EXECUTOR_H

#include "polyred/Executor.h"

#include "Oracle.h"
#include "TestUtil.h"
#include "polyred/Frontend.h"

#include <gtest/gtest.h>

using namespace polyred;
using namespace polyred::test;

namespace {

DependenceSet partitionedDeps(const Scop &scop,
                              const std::vector<ReductionInfo> &red) {
  return addPrivatizationDeps(
      partition(memoryDeps(scop, Granularity::Hybrid, red), scop, red), scop,
      red);
}

TEST(SequentialTest, ArraySumKnownValues) {
  Scop scop = parse(kArraySum);
  MemoryState input(1);
  input.write("sum", {}, 0);
  for (int64_t i = 0; i < 4; ++i)
    input.write("A", {i}, i + 1); // A = [1,2,3,4]
  MemoryState out = runSequential(scop, {{"N", 1}}, input);
  EXPECT_EQ(out.read("sum", {}), 10);
}

TEST(SequentialTest, EmptyDomainLeavesInputUntouched) {
  Scop scop = parse(kArraySum);
  MemoryState input(7);
  MemoryState out = runSequential(scop, {{"N", 0}}, input);
  EXPECT_TRUE(out.equals(input));
}

TEST(SequentialTest, MatchesOracleOnAllKernels) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> kernels{
      {"array_sum.scop", {"N"}},       {"bicg.scop", {"NX", "NY"}},
      {"cond_reduction.scop", {"N", "M"}}, {"priv_placement.scop", {"NX", "NY", "NZ"}},
      {"gemm_like.scop", {"N"}},       {"control.scop", {"N"}},
  };
  for (const auto &[file, names] : kernels) {
    Scop scop = parseCorpus(file);
    std::map<std::string, int64_t> params;
    for (const std::string &n : names)
      params[n] = 3;
    uint64_t inputSeed = 99;
    MemoryState out = runSequential(scop, params, MemoryState(inputSeed));
    OracleRun oracle = runOracle(scop, params, inputSeed);
    for (const auto &[array, cells] : oracle.memory)
      for (const auto &[idx, val] : cells)
        EXPECT_EQ(out.read(array, idx), val) << file << " " << array;
  }
}

TEST(ScheduledTest, IdentityScheduleSingleContextTriviallyEqual) {
  Scop scop = parse(kBicg);
  std::map<std::string, int64_t> params{{"NX", 3}, {"NY", 3}};
  ExecutionConfig config;
  config.params = params;
  config.contexts = 1;
  config.schedule = originalSchedule(scop);
  MemoryState seq = runSequential(scop, params, MemoryState(5));
  MemoryState got = runScheduled(scop, config, MemoryState(5));
  EXPECT_TRUE(got.equals(seq));
}

TEST(ScheduledTest, RelaxedReversalPreservesResults) {
  // theta_S(i,j) = (0,i,1,-j,0): commutativity makes the reversed reduction
  // produce identical integer results.
  Scop scop = parse(kBicg);
  std::map<std::string, int64_t> params{{"NX", 4}, {"NY", 4}};
  Schedule sched = originalSchedule(scop);
  sched.rows["S"] = {AffineExpr(0), AffineExpr::var("i"), AffineExpr(1),
                     -AffineExpr::var("j"), AffineExpr(0)};
  auto red = detect(scop);
  DependenceSet deps = partitionedDeps(scop, red);
  ASSERT_TRUE(validate(sched, deps, LegalityMode::Relaxed).ok);

  ExecutionConfig config;
  config.params = params;
  config.schedule = sched;
  MemoryState seq = runSequential(scop, params, MemoryState(11));
  MemoryState got = runScheduled(scop, config, MemoryState(11));
  EXPECT_TRUE(got.equals(seq)) << "reversal changed results";
}

TEST(ScheduledTest, UnsoundHoistingWithoutTauChangesResults) {
  // The schedule that moves S(i, j>=1) before R(i) validates without
  // privatization dependences but computes a different q.
  Scop scop = parse(kBicg);
  std::map<std::string, int64_t> params{{"NX", 2}, {"NY", 2}};
  Schedule sched = originalSchedule(scop);
  sched.rows["R"] = {AffineExpr(0), AffineExpr::var("i"), AffineExpr(0),
                     AffineExpr(-1), AffineExpr(1)};
  sched.rows["S"] = {AffineExpr(0), AffineExpr::var("i"), AffineExpr(0),
                     -AffineExpr::var("j"), AffineExpr(0)};
  auto red = detect(scop);
  DependenceSet noTau =
      partition(valueDeps(scop, params, Granularity::Hybrid, red), scop, red);
  ASSERT_TRUE(validate(sched, noTau, LegalityMode::Privatized).ok)
      << "the flawed configuration accepts this schedule";

  ExecutionConfig config;
  config.params = params;
  config.schedule = sched;
  MemoryState seq = runSequential(scop, params, MemoryState(3));
  MemoryState got = runScheduled(scop, config, MemoryState(3));
  EXPECT_FALSE(got.equals(seq))
      << "accumulating into q before its initializer must corrupt q";
}

PrivatizationPlan planFor(const Scop &scop, const Schedule &sched,
                          const DependenceSet &deps, size_t dim) {
  DimClassification cls = classifyDims(sched, deps, LegalityMode::Privatized);
  return planPrivatization(scop, sched, cls, dim);
}

TEST(PrivatizedTest, ArraySumAllContextCounts) {
  Scop scop = parse(kArraySum);
  auto red = detect(scop);
  DependenceSet deps = partitionedDeps(scop, red);
  Schedule sched = originalSchedule(scop);
  PrivatizationPlan plan = planFor(scop, sched, deps, 1);
  ASSERT_EQ(plan.entries.size(), 1u);

  // Known values: A=[1,2,3,4], sum starts at 5 -> 15 regardless of contexts.
  for (int p : {1, 2, 4, 8}) {
    MemoryState input(1);
    input.write("sum", {}, 5);
    for (int64_t i = 0; i < 4; ++i)
      input.write("A", {i}, i + 1);
    ExecutionConfig config;
    config.params = {{"N", 1}};
    config.contexts = p;
    config.interleaveSeed = 17 + p;
    config.schedule = sched;
    config.plan = plan;
    MemoryState out = runScheduled(scop, config, std::move(input));
    EXPECT_EQ(out.read("sum", {}), 15) << "p=" << p;
  }
}

TEST(PrivatizedTest, BicgOuterWholeArrayPrivatization) {
  Scop scop = parse(kBicg);
  auto red = detect(scop);
  DependenceSet deps = partitionedDeps(scop, red);
  Schedule sched = originalSchedule(scop);
  PrivatizationPlan plan = planFor(scop, sched, deps, 1);
  // Only T is reduction-parallel at the outer dim; s is privatized.
  ASSERT_EQ(plan.entries.size(), 1u);
  EXPECT_EQ(plan.entries[0].rc.stmt, "T");

  std::map<std::string, int64_t> params{{"NX", 4}, {"NY", 3}};
  DifferentialReport report = differentialCheck(
      scop, params, sched, plan, {1, 2, 4, 8}, {1, 2, 3, 4, 5}, 23);
  EXPECT_TRUE(report.allEqual);
}

TEST(PrivatizedTest, MinReductionWithSentinelIdentity) {
  Scop scop =
      parse("scop t(N) { for (i = 0; i < N; i++) { S: m = min(m, A[i]); } }");
  auto red = detect(scop);
  ASSERT_EQ(red.size(), 1u);
  DependenceSet deps = partitionedDeps(scop, red);
  Schedule sched = originalSchedule(scop);
  PrivatizationPlan plan = planFor(scop, sched, deps, 1);
  DifferentialReport report = differentialCheck(scop, {{"N", 9}}, sched, plan,
                                                {1, 3, 8}, {1, 2, 3}, 31);
  EXPECT_TRUE(report.allEqual);
}

TEST(PrivatizedTest, SeedVariationNeverChangesResults) {
  Scop scop = parseCorpus("priv_placement.scop");
  auto red = detect(scop);
  DependenceSet deps = partitionedDeps(scop, red);
  Schedule sched = originalSchedule(scop);
  // Parallelize the innermost loop (dim 5), automatic placement.
  PrivatizationPlan plan = planFor(scop, sched, deps, 5);
  std::map<std::string, int64_t> params{{"NX", 2}, {"NY", 2}, {"NZ", 3}};
  std::vector<uint64_t> seeds;
  for (uint64_t s = 0; s < 20; ++s)
    seeds.push_back(s);
  DifferentialReport report =
      differentialCheck(scop, params, sched, plan, {4}, seeds, 41);
  EXPECT_TRUE(report.allEqual);
}

TEST(PrivatizedTest, HoistedPlacementStillExact) {
  // Three-level nest, parallel innermost loop, init/aggregate hoisted to
  // the outermost level: private buffers hold p x NY locations and are
  // aggregated once.
  Scop scop = parseCorpus("priv_placement.scop");
  auto red = detect(scop);
  DependenceSet deps = partitionedDeps(scop, red);
  Schedule sched = originalSchedule(scop);
  DimClassification cls = classifyDims(sched, deps, LegalityMode::Privatized);
  PrivatizationPlan plan =
      planPrivatization(scop, sched, cls, 5, Placement::atDepth(2));
  EXPECT_EQ(plan.boundaryPrefixLen, 1u);
  std::map<std::string, int64_t> params{{"NX", 2}, {"NY", 3}, {"NZ", 2}};
  DifferentialReport report =
      differentialCheck(scop, params, sched, plan, {1, 2, 4}, {1, 2, 3}, 47);
  EXPECT_TRUE(report.allEqual);
}

TEST(PrivatizedTest, PlanRejectsSequentialDim) {
  Scop scop = parseCorpus("cond_reduction.scop");
  auto red = detect(scop);
  DependenceSet deps = partitionedDeps(scop, red);
  Schedule sched = originalSchedule(scop);
  DimClassification cls = classifyDims(sched, deps, LegalityMode::Privatized);
  EXPECT_THROW(planPrivatization(scop, sched, cls, 1), CodegenError);
}

TEST(FloatModeTest, CloseWithinToleranceAndRejectsBitwise) {
  Scop scop = parse(kBicg);
  auto red = detect(scop);
  DependenceSet deps = partitionedDeps(scop, red);
  Schedule sched = originalSchedule(scop);
  PrivatizationPlan plan = planFor(scop, sched, deps, 1);
  std::map<std::string, int64_t> params{{"NX", 4}, {"NY", 4}};
  DifferentialReport report = differentialCheckFloat(
      scop, params, sched, plan, {1, 4}, {1, 2, 3}, 61);
  EXPECT_TRUE(report.allEqual);

  // Bitwise reductions have no floating-point semantics.
  Scop xorScop =
      parse("scop t(N) { for (i = 0; i < N; i++) { S: acc = acc ^ A[i]; } }");
  EXPECT_THROW(
      runSequentialFloat(xorScop, {{"N", 3}}, FloatMemoryState(1)),
      ExecutionError);
}

TEST(DifferentialTest, ReportShape) {
  Scop scop = parse(kArraySum);
  Schedule sched = originalSchedule(scop);
  DifferentialReport report = differentialCheck(
      scop, {{"N", 2}}, sched, std::nullopt, {1, 2}, {1, 2, 3}, 53);
  EXPECT_EQ(report.rows.size(), 6u);
  EXPECT_TRUE(report.allEqual);
}

} // namespace

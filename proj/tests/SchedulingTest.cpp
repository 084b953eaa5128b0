#include "polyred/Scheduling.h"

#include "TestUtil.h"
#include "polyred/Frontend.h"

#include <gtest/gtest.h>

using namespace polyred;
using polyred::test::kArraySum;
using polyred::test::kBicg;
using polyred::test::kCondReduction;

namespace {

AffineExpr v(const std::string &n) { return AffineExpr::var(n); }

DependenceSet bicgMemDeps(const Scop &scop,
                          const std::vector<ReductionInfo> &red) {
  return partition(memoryDeps(scop, Granularity::Hybrid, red), scop, red);
}

/// theta_S(i,j) = (0, i, 1, -j, 0): reverses the reduction loop of S.
Schedule bicgWithReversedS(const Scop &scop) {
  Schedule sched = originalSchedule(scop);
  sched.rows["S"] = {AffineExpr(0), v("i"), AffineExpr(1), -v("j"),
                     AffineExpr(0)};
  return sched;
}

TEST(ValidateTest, OriginalScheduleIsStrictLegalEverywhere) {
  for (const char *file : {"array_sum.scop", "bicg.scop", "cond_reduction.scop",
                           "priv_placement.scop", "gemm_like.scop",
                           "control.scop"}) {
    Scop scop = polyred::test::parseCorpus(file);
    auto red = detect(scop);
    DependenceSet deps = memoryDeps(scop, Granularity::Hybrid, red);
    EXPECT_TRUE(validate(originalSchedule(scop), deps, LegalityMode::Strict).ok)
        << file;
  }
}

TEST(ValidateTest, ReversedReductionLoopRejectedStrictAcceptedRelaxed) {
  Scop scop = parse(kBicg);
  auto red = detect(scop);
  DependenceSet deps = bicgMemDeps(scop, red);
  Schedule reversed = bicgWithReversedS(scop);

  ValidationResult strict = validate(reversed, deps, LegalityMode::Strict,
                                     {{"NX", 4}, {"NY", 4}});
  EXPECT_FALSE(strict.ok);
  ASSERT_FALSE(strict.violations.empty());
  EXPECT_TRUE(strict.violations[0].witness.has_value());

  EXPECT_TRUE(validate(reversed, deps, LegalityMode::Relaxed).ok);
}

TEST(ValidateTest, CollapsedReductionLoopRejectedInEveryMode) {
  // theta_S(i,j) = (0, i, 1, 0, 0) maps all reduction instances of a row to
  // one timestamp: even the relaxed condition requires distinct timestamps.
  Scop scop = parse(kBicg);
  auto red = detect(scop);
  DependenceSet deps = addPrivatizationDeps(bicgMemDeps(scop, red), scop, red);
  Schedule collapsed = originalSchedule(scop);
  collapsed.rows["S"] = {AffineExpr(0), v("i"), AffineExpr(1), AffineExpr(0),
                         AffineExpr(0)};
  EXPECT_FALSE(validate(collapsed, deps, LegalityMode::Strict).ok);
  EXPECT_FALSE(validate(collapsed, deps, LegalityMode::Relaxed).ok);
  // Privatized drops the order condition on reduction dependences but keeps
  // the distinct-timestamp requirement.
  EXPECT_FALSE(validate(collapsed, deps, LegalityMode::Privatized).ok);
}

TEST(ValidateTest, RelaxedRequiresPartition) {
  Scop scop = parse(kBicg);
  DependenceSet deps = memoryDeps(scop, Granularity::Hybrid);
  EXPECT_THROW(validate(originalSchedule(scop), deps, LegalityMode::Relaxed),
               AnalysisRefusal);
}

/// The schedule that hoists S(i, j>=1) before R(i):
///   theta_R(i) = (0, i, 0, -1, 1), theta_S(i,j) = (0, i, 0, -j, 0).
Schedule bicgHoistedSchedule(const Scop &scop) {
  Schedule sched = originalSchedule(scop);
  sched.rows["R"] = {AffineExpr(0), v("i"), AffineExpr(0), AffineExpr(-1),
                     AffineExpr(1)};
  sched.rows["S"] = {AffineExpr(0), v("i"), AffineExpr(0), -v("j"),
                     AffineExpr(0)};
  return sched;
}

TEST(ValidateTest, PrivatizationDepsRejectHoistingPastTheInitializer) {
  // Value-based dependences without privatization dependences accept the
  // hoisted schedule; adding D_tau rejects it.
  Scop scop = parse(kBicg);
  auto red = detect(scop);
  std::map<std::string, int64_t> params{{"NX", 4}, {"NY", 4}};
  DependenceSet noTau = partition(
      valueDeps(scop, params, Granularity::Hybrid, red), scop, red);
  Schedule hoisted = bicgHoistedSchedule(scop);

  EXPECT_TRUE(validate(hoisted, noTau, LegalityMode::Privatized).ok)
      << "without privatization dependences nothing anchors R before S";

  DependenceSet withTau = addPrivatizationDeps(noTau, scop, red);
  ValidationResult rejected =
      validate(hoisted, withTau, LegalityMode::Privatized);
  EXPECT_FALSE(rejected.ok);
}

//===--------------------------------------------------------------------===//
// Dimension classification
//===--------------------------------------------------------------------===//

TEST(ClassifyTest, BicgOriginalSchedule) {
  Scop scop = parse(kBicg);
  auto red = detect(scop);
  DependenceSet deps = bicgMemDeps(scop, red);
  DimClassification cls =
      classifyDims(originalSchedule(scop), deps, LegalityMode::Relaxed);
  // Schedule dims: (pos, i, pos, j, pos).
  EXPECT_EQ(cls.of("S", 1), DimClass::Parallel);
  EXPECT_EQ(cls.of("S", 3), DimClass::ReductionParallel);
  EXPECT_EQ(cls.of("T", 1), DimClass::ReductionParallel);
  EXPECT_EQ(cls.of("T", 3), DimClass::Parallel);
  EXPECT_EQ(cls.of("R", 1), DimClass::Parallel);
}

TEST(ClassifyTest, DependenceFreeStatementIsAllParallel) {
  Scop scop = polyred::test::parseCorpus("control.scop");
  auto red = detect(scop);
  DependenceSet deps =
      partition(memoryDeps(scop, Granularity::Hybrid, red), scop, red);
  DimClassification cls =
      classifyDims(originalSchedule(scop), deps, LegalityMode::Relaxed);
  for (const auto &[stmt, classes] : cls.dims)
    for (DimClass c : classes)
      EXPECT_EQ(c, DimClass::Parallel) << stmt;
}

TEST(ClassifyTest, CondReductionCarriedDims) {
  // The skewed read A[j-i] creates non-reduction dependences carried at both
  // loops (enumeration decides; see the oracle-backed dependence tests).
  Scop scop = parse(kCondReduction);
  auto red = detect(scop);
  DependenceSet deps =
      partition(memoryDeps(scop, Granularity::Hybrid, red), scop, red);
  DimClassification cls =
      classifyDims(originalSchedule(scop), deps, LegalityMode::Relaxed);
  EXPECT_EQ(cls.of("S", 1), DimClass::Sequential);
  EXPECT_EQ(cls.of("S", 3), DimClass::Sequential);
}

TEST(ClassifyTest, StrictModeSeesReductionDepsAsSequential) {
  Scop scop = parse(kArraySum);
  auto red = detect(scop);
  DependenceSet deps =
      partition(memoryDeps(scop, Granularity::Hybrid, red), scop, red);
  DimClassification relaxed =
      classifyDims(originalSchedule(scop), deps, LegalityMode::Relaxed);
  EXPECT_EQ(relaxed.of("S", 1), DimClass::ReductionParallel);
  DimClassification strict =
      classifyDims(originalSchedule(scop), deps, LegalityMode::Strict);
  EXPECT_EQ(strict.of("S", 1), DimClass::Sequential);
}

//===--------------------------------------------------------------------===//
// Search
//===--------------------------------------------------------------------===//

TEST(SearchTest, BicgPrivatizedSearchInterchangesT) {
  Scop scop = parse(kBicg);
  auto red = detect(scop);
  DependenceSet deps = addPrivatizationDeps(bicgMemDeps(scop, red), scop, red);
  SearchResult result = search(scop, deps, LegalityMode::Privatized);
  ASSERT_TRUE(result.fromSearch) << result.diagnostic;
  // T's loop rows become (j, i): outer row is j, inner row is i.
  const std::vector<AffineExpr> &t = result.schedule.rows.at("T");
  EXPECT_EQ(t[1], v("j"));
  EXPECT_EQ(t[3], v("i"));
  // The interchange makes T's outer dim truly parallel instead of
  // reduction-parallel.
  EXPECT_EQ(result.classification.of("T", 1), DimClass::Parallel);
  // S keeps its identity rows (parallel outer dim already).
  EXPECT_EQ(result.schedule.rows.at("S")[1], v("i"));
  EXPECT_EQ(result.classification.of("S", 1), DimClass::Parallel);
}

TEST(SearchTest, NoDependencesKeepsIdentity) {
  Scop scop = parse("scop t(N) { for (i = 0; i < N; i++) { for (j = 0; j < N; "
                    "j++) { S: B[i][j] = A[i][j] + 1; } } }");
  auto red = detect(scop);
  DependenceSet deps =
      partition(memoryDeps(scop, Granularity::Hybrid, red), scop, red);
  SearchResult result = search(scop, deps, LegalityMode::Relaxed);
  ASSERT_TRUE(result.fromSearch);
  EXPECT_EQ(result.schedule.rows.at("S"), originalSchedule(scop).rows.at("S"));
}

TEST(SearchTest, ArraySumIdentityWithReductionParallelDim) {
  Scop scop = parse(kArraySum);
  auto red = detect(scop);
  DependenceSet deps = addPrivatizationDeps(
      partition(memoryDeps(scop, Granularity::Hybrid, red), scop, red), scop,
      red);
  SearchResult result = search(scop, deps, LegalityMode::Privatized);
  ASSERT_TRUE(result.fromSearch);
  EXPECT_EQ(result.schedule.rows.at("S"), originalSchedule(scop).rows.at("S"));
  EXPECT_EQ(result.classification.of("S", 1), DimClass::ReductionParallel);
}

TEST(SearchTest, DeterministicAcrossRuns) {
  Scop scop = parse(kBicg);
  auto red = detect(scop);
  DependenceSet deps = addPrivatizationDeps(bicgMemDeps(scop, red), scop, red);
  SearchResult a = search(scop, deps, LegalityMode::Privatized);
  SearchResult b = search(scop, deps, LegalityMode::Privatized);
  for (const auto &[name, rows] : a.schedule.rows)
    EXPECT_EQ(rows, b.schedule.rows.at(name));
}

TEST(SearchTest, DepthTwoAddsSkewsAndStaysLegal) {
  Scop scop = parse(kCondReduction);
  auto red = detect(scop);
  DependenceSet deps = addPrivatizationDeps(
      partition(memoryDeps(scop, Granularity::Hybrid, red), scop, red), scop,
      red);
  SearchOptions opts;
  opts.depth = 2;
  SearchResult result = search(scop, deps, LegalityMode::Relaxed, opts);
  ASSERT_TRUE(result.fromSearch) << result.diagnostic;
  EXPECT_TRUE(validate(result.schedule, deps, LegalityMode::Relaxed).ok);
}

TEST(SearchTest, BudgetExhaustionReturnsOriginal) {
  Scop scop = parse(kBicg);
  auto red = detect(scop);
  DependenceSet deps = bicgMemDeps(scop, red);
  SearchOptions opts;
  opts.budget = 3;
  SearchResult result = search(scop, deps, LegalityMode::Relaxed, opts);
  EXPECT_FALSE(result.fromSearch);
  EXPECT_FALSE(result.diagnostic.empty());
  EXPECT_EQ(result.schedule.rows.at("S"), originalSchedule(scop).rows.at("S"));
}

TEST(SearchTest, StrictLegalImpliesRelaxedLegal) {
  // Every candidate accepted under Strict must validate under Relaxed too.
  Scop scop = parse(kBicg);
  auto red = detect(scop);
  DependenceSet deps = addPrivatizationDeps(bicgMemDeps(scop, red), scop, red);
  for (LegalityMode first : {LegalityMode::Strict}) {
    SearchResult strict = search(scop, deps, first);
    EXPECT_TRUE(validate(strict.schedule, deps, LegalityMode::Relaxed).ok);
    EXPECT_TRUE(validate(strict.schedule, deps, LegalityMode::Privatized).ok);
  }
}

TEST(SearchTest, AcceptedSchedulesInjectiveOnRhoPairs) {
  // Any schedule accepted under Relaxed maps instances related by a
  // reduction dependence to distinct timestamps (witness enumeration).
  Scop scop = parse(kBicg);
  auto red = detect(scop);
  DependenceSet deps = bicgMemDeps(scop, red);
  Schedule reversed = bicgWithReversedS(scop);
  ASSERT_TRUE(validate(reversed, deps, LegalityMode::Relaxed).ok);
  std::map<std::string, int64_t> params{{"NX", 3}, {"NY", 3}};
  for (const Dependence &d : deps.rho) {
    std::vector<AffineExpr> srcT = reversed.timestamp(d.srcStmt);
    std::vector<AffineExpr> tgtT = reversed.timestamp(d.tgtStmt);
    size_t nIn = d.relation.inDims().size();
    for (const auto &pt : d.relation.enumerate(params)) {
      std::map<std::string, int64_t> env;
      for (size_t k = 0; k < nIn; ++k)
        env[d.relation.inDims()[k]] = pt[k];
      std::map<std::string, int64_t> envT;
      for (size_t k = 0; k < d.relation.outDims().size(); ++k) {
        const std::string &out = d.relation.outDims()[k];
        envT[out.substr(0, out.size() - 1)] = pt[nIn + k];
      }
      auto evalRow = [](const AffineExpr &e,
                        const std::map<std::string, int64_t> &env) {
        int64_t acc = e.constant();
        for (const auto &[n, c] : e.coeffs())
          acc += c * env.at(n);
        return acc;
      };
      std::vector<int64_t> a, b;
      for (const AffineExpr &e : srcT)
        a.push_back(evalRow(e, env));
      for (const AffineExpr &e : tgtT)
        b.push_back(evalRow(e, envT));
      EXPECT_NE(a, b);
    }
  }
}

} // namespace

#include "polyred/Dependences.h"

#include "Oracle.h"
#include "TestUtil.h"
#include "polyred/Frontend.h"

#include <gtest/gtest.h>

using namespace polyred;
using namespace polyred::test;

namespace {

std::set<InstancePair> filterKind(const std::set<InstancePair> &pairs,
                                  DepKind kind) {
  std::set<InstancePair> r;
  for (const InstancePair &p : pairs)
    if (p.kind == kind)
      r.insert(p);
  return r;
}

TEST(MemoryDepsTest, ArraySumWawIncludesTransitivePairs) {
  Scop scop = parse(kArraySum);
  DependenceSet deps = memoryDeps(scop, Granularity::Access);
  std::map<std::string, int64_t> params{{"N", 1}}; // 4 iterations
  std::set<InstancePair> got = enumerateDeps(deps.all, params);
  std::set<InstancePair> waw = filterKind(got, DepKind::WAW);
  std::set<InstancePair> want;
  for (int64_t i = 0; i < 4; ++i)
    for (int64_t j = i + 1; j < 4; ++j)
      want.insert({"S", {i}, "S", {j}, DepKind::WAW});
  EXPECT_EQ(waw, want);
}

TEST(MemoryDepsTest, BicgSelfDepsWithinRows) {
  Scop scop = parse(kBicg);
  DependenceSet deps = memoryDeps(scop, Granularity::Access);
  std::map<std::string, int64_t> params{{"NX", 4}, {"NY", 4}};
  std::set<InstancePair> got = enumerateDeps(deps.all, params);
  // S-to-S through q[i]: all three kinds equal {(i,j)->(i,j') : j < j'}.
  for (DepKind kind : {DepKind::RAW, DepKind::WAW, DepKind::WAR}) {
    std::set<InstancePair> ss;
    for (const InstancePair &p : filterKind(got, kind))
      if (p.srcStmt == "S" && p.tgtStmt == "S")
        ss.insert(p);
    std::set<InstancePair> want;
    for (int64_t i = 0; i < 4; ++i)
      for (int64_t j = 0; j < 4; ++j)
        for (int64_t j2 = j + 1; j2 < 4; ++j2)
          want.insert({"S", {i, j}, "S", {i, j2}, kind});
    EXPECT_EQ(ss, want) << depKindName(kind);
  }
  // R feeds every S instance of its row (memory-based).
  std::set<InstancePair> rs;
  for (const InstancePair &p : filterKind(got, DepKind::RAW))
    if (p.srcStmt == "R" && p.tgtStmt == "S")
      rs.insert(p);
  std::set<InstancePair> wantRs;
  for (int64_t i = 0; i < 4; ++i)
    for (int64_t j = 0; j < 4; ++j)
      wantRs.insert({"R", {i}, "S", {i, j}, DepKind::RAW});
  EXPECT_EQ(rs, wantRs);
}

TEST(OracleEquivalenceTest, MemoryDepsMatchBruteForceOnAllKernels) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> kernels{
      {"array_sum.scop", {"N"}},
      {"bicg.scop", {"NX", "NY"}},
      {"cond_reduction.scop", {"N", "M"}},
      {"priv_placement.scop", {"NX", "NY", "NZ"}},
      {"gemm_like.scop", {"N"}},
      {"control.scop", {"N"}},
  };
  for (const auto &[file, paramNames] : kernels) {
    Scop scop = parseCorpus(file);
    DependenceSet deps = memoryDeps(scop, Granularity::Access);
    // A couple of parameter bindings per kernel keeps this fast; the
    // acceptance suite runs the full sweep.
    for (int64_t extent : {2, 4}) {
      std::map<std::string, int64_t> params;
      for (const std::string &p : paramNames)
        params[p] = extent;
      std::set<InstancePair> got = enumerateDeps(deps.all, params);
      std::set<InstancePair> want =
          oracleMemoryPairs(runOracle(scop, params, 42));
      EXPECT_EQ(got, want) << file << " extent " << extent;
    }
  }
}

TEST(ValueDepsTest, ArraySumConsecutiveWaw) {
  Scop scop = parse(kArraySum);
  std::map<std::string, int64_t> params{{"N", 1}};
  DependenceSet deps = valueDeps(scop, params, Granularity::Access);
  std::set<InstancePair> waw = filterKind(enumerateDeps(deps.all, {}), DepKind::WAW);
  std::set<InstancePair> want{{"S", {0}, "S", {1}, DepKind::WAW},
                              {"S", {1}, "S", {2}, DepKind::WAW},
                              {"S", {2}, "S", {3}, DepKind::WAW}};
  EXPECT_EQ(waw, want);
}

TEST(ValueDepsTest, BicgOnlyFirstColumnSeesR) {
  Scop scop = parse(kBicg);
  std::map<std::string, int64_t> params{{"NX", 3}, {"NY", 3}};
  DependenceSet deps = valueDeps(scop, params, Granularity::Access);
  for (const InstancePair &p : enumerateDeps(deps.all, {})) {
    if (p.srcStmt == "R" && p.tgtStmt == "S") {
      EXPECT_EQ(p.tgt[1], 0) << "R feeds only j=0 instances value-wise";
    }
  }
}

TEST(ValueDepsTest, MatchesOracleOnAllKernels) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> kernels{
      {"array_sum.scop", {"N"}},       {"bicg.scop", {"NX", "NY"}},
      {"cond_reduction.scop", {"N", "M"}}, {"priv_placement.scop", {"NX", "NY", "NZ"}},
      {"gemm_like.scop", {"N"}},       {"control.scop", {"N"}},
  };
  for (const auto &[file, paramNames] : kernels) {
    Scop scop = parseCorpus(file);
    for (int64_t extent : {1, 3, 6}) {
      std::map<std::string, int64_t> params;
      for (const std::string &p : paramNames)
        params[p] = extent;
      DependenceSet deps = valueDeps(scop, params, Granularity::Access);
      EXPECT_EQ(enumerateDeps(deps.all, {}),
                oracleValuePairs(runOracle(scop, params, 7)))
          << file << " extent " << extent;
    }
  }
}

TEST(ValueDepsTest, UnboundDomainIsRejected) {
  Scop scop = parse(kArraySum);
  EXPECT_THROW(valueDeps(scop, {}, Granularity::Access), UnboundedError);
}

TEST(ValueDepsTest, NoReadsMeansNoRaw) {
  Scop scop = parse("scop t(N) { for (i = 0; i < N; i++) { S: B[i] = 1; } }");
  DependenceSet deps = valueDeps(scop, {{"N", 4}}, Granularity::Access);
  EXPECT_TRUE(deps.all.empty());
}

TEST(ValueDepsTest, MemoryWawIsTransitiveClosureOfValueWaw) {
  // Value-based WAW is the transitive reduction; its closure equals the
  // memory-based WAW set at fixed parameters.
  for (const char *file : {"array_sum.scop", "bicg.scop", "gemm_like.scop"}) {
  Scop scop = parseCorpus(file);
  std::map<std::string, int64_t> params;
  for (const std::string &p : scop.parameters)
    params[p] = 3;
  std::set<InstancePair> mem = filterKind(
      enumerateDeps(memoryDeps(scop, Granularity::Access).all, params),
      DepKind::WAW);
  std::set<InstancePair> val = filterKind(
      enumerateDeps(valueDeps(scop, params, Granularity::Access).all, {}),
      DepKind::WAW);
  // Close the value pairs transitively.
  std::set<InstancePair> closed = val;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const InstancePair &a : std::set<InstancePair>(closed))
      for (const InstancePair &b : closed)
        if (a.tgtStmt == b.srcStmt && a.tgt == b.src) {
          InstancePair c{a.srcStmt, a.src, b.tgtStmt, b.tgt, DepKind::WAW};
          changed |= closed.insert(c).second;
        }
  }
  EXPECT_EQ(closed, mem) << file;
  }
}

//===--------------------------------------------------------------------===//
// Partitioning
//===--------------------------------------------------------------------===//

TEST(PartitionTest, BicgRhoAndNu) {
  Scop scop = parse(kBicg);
  auto reductions = detect(scop);
  DependenceSet deps =
      partition(memoryDeps(scop, Granularity::Hybrid, reductions), scop,
                reductions);
  std::map<std::string, int64_t> params{{"NX", 4}, {"NY", 4}};

  // D_rho of S is {(i,j)->(i,j') : j<j'}; R->S dependences are in D_nu.
  std::set<InstancePair> rho = enumerateDeps(deps.rho, params);
  std::set<InstancePair> wantRhoS;
  for (int64_t i = 0; i < 4; ++i)
    for (int64_t j = 0; j < 4; ++j)
      for (int64_t j2 = j + 1; j2 < 4; ++j2)
        wantRhoS.insert({"S", {i, j}, "S", {i, j2}, DepKind::WAW});
  for (const InstancePair &p : wantRhoS)
    EXPECT_TRUE(rho.count(p));
  for (const InstancePair &p : enumerateDeps(deps.nu, params)) {
    EXPECT_FALSE(p.srcStmt == "S" && p.tgtStmt == "S")
        << "S self pairs all belong to D_rho";
    EXPECT_FALSE(p.srcStmt == "T" && p.tgtStmt == "T");
  }
  bool sawCross = false;
  for (const InstancePair &p : enumerateDeps(deps.nu, params))
    sawCross |= (p.srcStmt == "R" && p.tgtStmt == "S");
  EXPECT_TRUE(sawCross);
}

TEST(PartitionTest, PointSetsPartitionExactly) {
  // rho and nu are disjoint and cover all (ignoring kind tags, which may
  // legitimately collapse when identical pairs carry several kinds).
  for (const char *file : {"array_sum.scop", "bicg.scop", "cond_reduction.scop",
                           "priv_placement.scop", "gemm_like.scop",
                           "control.scop"}) {
    Scop scop = parseCorpus(file);
    auto reductions = detect(scop);
    DependenceSet deps =
        partition(memoryDeps(scop, Granularity::Hybrid, reductions), scop,
                  reductions);
    std::map<std::string, int64_t> params;
    for (const std::string &p : scop.parameters)
      params[p] = 4;
    auto stripKind = [](const std::set<InstancePair> &in) {
      std::set<InstancePair> out;
      for (InstancePair p : in) {
        p.kind = DepKind::RAW;
        out.insert(p);
      }
      return out;
    };
    std::set<InstancePair> all = stripKind(enumerateDeps(deps.all, params));
    std::set<InstancePair> rho = stripKind(enumerateDeps(deps.rho, params));
    std::set<InstancePair> nu = stripKind(enumerateDeps(deps.nu, params));
    std::set<InstancePair> unionSet = rho;
    unionSet.insert(nu.begin(), nu.end());
    EXPECT_EQ(unionSet, all) << file;
    for (const InstancePair &p : rho)
      EXPECT_FALSE(nu.count(p)) << file << ": rho and nu overlap";
  }
}

TEST(PartitionTest, NoReductionMeansEmptyRho) {
  Scop scop = parseCorpus("control.scop");
  auto reductions = detect(scop);
  EXPECT_TRUE(reductions.empty());
  DependenceSet deps =
      partition(memoryDeps(scop, Granularity::Hybrid, reductions), scop,
                reductions);
  EXPECT_TRUE(deps.rho.empty());
}

TEST(PartitionTest, CondReductionRhoAcrossOuterLoop) {
  Scop scop = parseCorpus("cond_reduction.scop");
  auto reductions = detect(scop);
  DependenceSet deps =
      partition(memoryDeps(scop, Granularity::Hybrid, reductions), scop,
                reductions);
  std::map<std::string, int64_t> params{{"N", 4}, {"M", 4}};
  std::set<InstancePair> rho = enumerateDeps(deps.rho, params);
  std::set<InstancePair> want;
  for (int64_t j = 0; j < 4; ++j)
    for (int64_t i = 0; i < 4; ++i)
      for (int64_t i2 = i + 1; i2 < 4; ++i2)
        want.insert({"S", {i, j}, "S", {i2, j}, DepKind::WAW});
  EXPECT_EQ(rho, want);
}

TEST(PartitionTest, StatementGranularityRefusesUnattributableCompound) {
  // Fused gemm-like: the scalar temporary store conflicts with itself across
  // iterations, so statement-wise WAW self dependences cannot be attributed.
  Scop scop = parseCorpus("gemm_like.scop", /*fuse=*/true);
  auto reductions = detect(scop);
  ASSERT_EQ(reductions.size(), 1u);
  DependenceSet deps = memoryDeps(scop, Granularity::Statement, reductions);
  EXPECT_THROW(partition(std::move(deps), scop, reductions), AnalysisRefusal);

  // Fused BiCG has only reduction stores: statement-wise partitioning stays
  // attributable.
  Scop bicg = parseCorpus("bicg.scop", /*fuse=*/true);
  auto bicgRed = detect(bicg);
  DependenceSet ok =
      partition(memoryDeps(bicg, Granularity::Statement, bicgRed), bicg,
                bicgRed);
  EXPECT_FALSE(ok.rho.empty());
}

TEST(PartitionTest, AccessAndHybridAgreeOnAllKernels) {
  for (const char *file : {"array_sum.scop", "bicg.scop", "cond_reduction.scop",
                           "priv_placement.scop", "gemm_like.scop",
                           "control.scop"}) {
    for (bool fuse : {false, true}) {
      Scop scop = parseCorpus(file, fuse);
      auto reductions = detect(scop);
      std::map<std::string, int64_t> params;
      for (const std::string &p : scop.parameters)
        params[p] = 3;
      DependenceSet access =
          partition(memoryDeps(scop, Granularity::Access, reductions), scop,
                    reductions);
      DependenceSet hybrid =
          partition(memoryDeps(scop, Granularity::Hybrid, reductions), scop,
                    reductions);
      EXPECT_EQ(enumerateDeps(access.rho, params),
                enumerateDeps(hybrid.rho, params))
          << file << " fuse=" << fuse;
      EXPECT_EQ(enumerateDeps(access.nu, params),
                enumerateDeps(hybrid.nu, params))
          << file << " fuse=" << fuse;
    }
  }
}

TEST(PartitionTest, RawDerivedRhoEqualsWawDerivedRho) {
  // In this single-store setting the RAW self dependences of the reduction
  // access pair span the same instance pairs as the WAW ones.
  Scop scop = parse(kBicg);
  auto reductions = detect(scop);
  DependenceSet deps = memoryDeps(scop, Granularity::Access, reductions);
  std::map<std::string, int64_t> params{{"NX", 3}, {"NY", 3}};
  for (const ReductionInfo &rc : reductions) {
    std::set<std::pair<std::vector<int64_t>, std::vector<int64_t>>> waw, raw;
    for (const Dependence &d : deps.all) {
      if (d.srcStmt != rc.stmt || d.tgtStmt != rc.stmt)
        continue;
      size_t nIn = d.relation.inDims().size();
      bool isWaw = d.kind == DepKind::WAW && d.srcAccess == rc.storeId &&
                   d.tgtAccess == rc.storeId;
      bool isRaw = d.kind == DepKind::RAW && d.srcAccess == rc.storeId &&
                   d.tgtAccess == rc.loadId;
      if (!isWaw && !isRaw)
        continue;
      for (const auto &pt : d.relation.enumerate(params)) {
        std::vector<int64_t> a(pt.begin(), pt.begin() + nIn);
        std::vector<int64_t> b(pt.begin() + nIn, pt.end());
        (isWaw ? waw : raw).insert({a, b});
      }
    }
    EXPECT_EQ(waw, raw) << rc.stmt;
  }
}

//===--------------------------------------------------------------------===//
// Closure and privatization dependences
//===--------------------------------------------------------------------===//

TEST(ClosureDepsTest, ValueBasedBicgClosureIsExact) {
  Scop scop = parse(kBicg);
  auto reductions = detect(scop);
  std::map<std::string, int64_t> params{{"NX", 4}, {"NY", 4}};
  DependenceSet deps = partition(
      valueDeps(scop, params, Granularity::Hybrid, reductions), scop,
      reductions);
  auto [rel, exact] = reductionClosure(deps, scop, "S");
  EXPECT_TRUE(exact);
  // {(i,j) -> (i,j') : j < j'} on the 4x4 domain.
  std::set<std::vector<int64_t>> got;
  for (auto &pt : rel.enumerate({}))
    got.insert(pt);
  std::set<std::vector<int64_t>> want;
  for (int64_t i = 0; i < 4; ++i)
    for (int64_t j = 0; j < 4; ++j)
      for (int64_t j2 = j + 1; j2 < 4; ++j2)
        want.insert({i, j, i, j2});
  EXPECT_EQ(got, want);
}

TEST(ClosureDepsTest, MemoryBasedRhoIsAlreadyTransitive) {
  Scop scop = parse(kBicg);
  auto reductions = detect(scop);
  DependenceSet deps =
      partition(memoryDeps(scop, Granularity::Hybrid, reductions), scop,
                reductions);
  auto [rel, exact] = reductionClosure(deps, scop, "S");
  (void)exact;
  std::map<std::string, int64_t> params{{"NX", 3}, {"NY", 4}};
  std::set<std::vector<int64_t>> closure, rho;
  for (auto &pt : rel.enumerate(params))
    closure.insert(pt);
  for (const Dependence &d : deps.rho)
    if (d.srcStmt == "S")
      for (auto &pt : d.relation.enumerate(params))
        rho.insert(pt);
  EXPECT_EQ(closure, rho);
}

TEST(ClosureDepsTest, EmptyRhoClosure) {
  Scop scop = parseCorpus("control.scop");
  auto reductions = detect(scop);
  DependenceSet deps =
      partition(memoryDeps(scop, Granularity::Hybrid, reductions), scop,
                reductions);
  auto [rel, exact] = reductionClosure(deps, scop, "S");
  EXPECT_TRUE(exact);
  EXPECT_FALSE(rel.hasPieces());
}

TEST(PrivatizationDepsTest, BicgTauCoversAllLaterSInstances) {
  Scop scop = parse(kBicg);
  auto reductions = detect(scop);
  std::map<std::string, int64_t> params{{"NX", 4}, {"NY", 4}};
  DependenceSet deps = addPrivatizationDeps(
      partition(valueDeps(scop, params, Granularity::Hybrid, reductions), scop,
                reductions),
      scop, reductions);
  ASSERT_FALSE(deps.tau.empty());
  std::set<InstancePair> tau = enumerateDeps(deps.tau, {});
  for (int64_t i = 0; i < 4; ++i)
    for (int64_t j = 0; j < 4; ++j)
      EXPECT_TRUE(tau.count({"R", {i}, "S", {i, j}, DepKind::RAW}))
          << "R(" << i << ") -> S(" << i << "," << j << ")";
}

TEST(PrivatizationDepsTest, TauContainsItsSourceCrossDeps) {
  Scop scop = parse(kBicg);
  auto reductions = detect(scop);
  std::map<std::string, int64_t> params{{"NX", 3}, {"NY", 3}};
  DependenceSet deps = addPrivatizationDeps(
      partition(valueDeps(scop, params, Granularity::Hybrid, reductions), scop,
                reductions),
      scop, reductions);
  std::set<InstancePair> tau = enumerateDeps(deps.tau, {});
  for (const InstancePair &p : enumerateDeps(deps.nu, {})) {
    bool intoReduction = p.tgtStmt == "S" || p.tgtStmt == "T";
    bool outOfReduction = p.srcStmt == "S" || p.srcStmt == "T";
    if (p.srcStmt != p.tgtStmt && (intoReduction || outOfReduction)) {
      EXPECT_TRUE(tau.count(p));
    }
  }
}

TEST(PrivatizationDepsTest, NoMemoryReuseMeansEmptyTau) {
  // Reduction present, but no other statement touches the reduction array.
  Scop scop = parse("scop t(N) { for (i = 0; i < N; i++) { S: acc = acc + "
                    "A[i]; T: B[i] = A[i]; } }");
  auto reductions = detect(scop);
  ASSERT_EQ(reductions.size(), 1u);
  DependenceSet deps = addPrivatizationDeps(
      partition(memoryDeps(scop, Granularity::Hybrid, reductions), scop,
                reductions),
      scop, reductions);
  EXPECT_TRUE(deps.tau.empty());
}

TEST(PrivatizationDepsTest, NoReductionsMeansEmptyTau) {
  Scop scop = parseCorpus("control.scop");
  auto reductions = detect(scop);
  DependenceSet deps = addPrivatizationDeps(
      partition(memoryDeps(scop, Granularity::Hybrid, reductions), scop,
                reductions),
      scop, reductions);
  EXPECT_TRUE(deps.tau.empty());
}

TEST(PrivatizationDepsTest, MemoryBasisTauAddsNothingNew) {
  // Memory-based dependences are already transitively closed, so the
  // privatization extension may not introduce new instance pairs.
  Scop scop = parse(kBicg);
  auto reductions = detect(scop);
  DependenceSet deps = addPrivatizationDeps(
      partition(memoryDeps(scop, Granularity::Hybrid, reductions), scop,
                reductions),
      scop, reductions);
  std::map<std::string, int64_t> params{{"NX", 3}, {"NY", 3}};
  auto stripKind = [](std::set<InstancePair> in) {
    std::set<InstancePair> out;
    for (InstancePair p : in) {
      p.kind = DepKind::RAW;
      out.insert(p);
    }
    return out;
  };
  std::set<InstancePair> allPairs = stripKind(enumerateDeps(deps.all, params));
  std::set<InstancePair> tauPairs = stripKind(enumerateDeps(deps.tau, params));
  for (const InstancePair &p : tauPairs)
    EXPECT_TRUE(allPairs.count(p)) << "tau invented a pair";
}

} // namespace

#include "polyred/Scop.h"

#include "TestUtil.h"

#include <gtest/gtest.h>

#include <set>

using namespace polyred;
using polyred::test::kArraySum;
using polyred::test::kBicg;
using polyred::test::kCondReduction;

namespace {

TEST(ScheduleTest, BicgOriginalSchedule) {
  Scop scop = parse(kBicg);
  Schedule sched = originalSchedule(scop);
  // 2d+1 form with a leading textual position:
  // R: (0, i, 0), S: (0, i, 1, j, 0), T: (0, i, 1, j, 1)
  auto r = sched.rows.at("R");
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0], AffineExpr(0));
  EXPECT_EQ(r[1], AffineExpr::var("i"));
  EXPECT_EQ(r[2], AffineExpr(0));
  auto s = sched.rows.at("S");
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(s[2], AffineExpr(1));
  EXPECT_EQ(s[3], AffineExpr::var("j"));
  EXPECT_EQ(s[4], AffineExpr(0));
  auto t = sched.rows.at("T");
  EXPECT_EQ(t[4], AffineExpr(1));
}

TEST(ScheduleTest, SingleStatementSingleLoop) {
  Scop scop = parse(kArraySum);
  Schedule sched = originalSchedule(scop);
  auto s = sched.rows.at("S");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1], AffineExpr::var("i"));
  EXPECT_EQ(s[2], AffineExpr(0));
}

TEST(ScheduleTest, TextualOrderBreaksTies) {
  Scop scop = parse("scop t(N) { for (i = 0; i < N; i++) { S: x += A[i]; T: y "
                    "+= A[i]; } }");
  Schedule sched = originalSchedule(scop);
  // Same loop, second statement gets the larger final constant.
  EXPECT_EQ(sched.rows.at("S").back(), AffineExpr(0));
  EXPECT_EQ(sched.rows.at("T").back(), AffineExpr(1));
}

int64_t evalExpr(const AffineExpr &e, const Statement &stmt,
                 const std::vector<int64_t> &point,
                 const std::map<std::string, int64_t> &params) {
  int64_t v = e.constant();
  for (const auto &[name, c] : e.coeffs()) {
    auto it = std::find(stmt.iterators.begin(), stmt.iterators.end(), name);
    if (it != stmt.iterators.end())
      v += c * point[it - stmt.iterators.begin()];
    else
      v += c * params.at(name);
  }
  return v;
}

TEST(ScheduleTest, TimestampsInjectiveAcrossScop) {
  std::map<std::string, int64_t> params{{"NX", 3}, {"NY", 2}, {"N", 2},
                                        {"M", 3}};
  for (const char *src : {kArraySum, kBicg, kCondReduction}) {
    Scop scop = parse(src);
    Schedule sched = originalSchedule(scop);
    std::set<std::vector<int64_t>> seen;
    for (const Statement &stmt : scop.statements) {
      std::vector<AffineExpr> ts = sched.timestamp(stmt.name);
      for (const auto &pt : stmt.domain.enumerate(params)) {
        std::vector<int64_t> stamp;
        for (const AffineExpr &e : ts)
          stamp.push_back(evalExpr(e, stmt, pt, params));
        EXPECT_TRUE(seen.insert(stamp).second)
            << "duplicate timestamp in " << stmt.name;
      }
    }
  }
}

TEST(AccessRangeTest, ScalarRangeIsZeroDim) {
  Scop scop = parse(kArraySum);
  const Statement &s = scop.statements[0];
  AccessRange r = accessRangeOf(s.instructions[0], s); // load sum
  EXPECT_EQ(r.array, "sum");
  EXPECT_TRUE(r.indices.space().dims.empty());
  EXPECT_FALSE(r.indices.isEmpty().empty);
}

TEST(AccessRangeTest, BoxRange) {
  Scop scop = parse("scop t(N) { for (i = 0; i < 2; i++) { for (j = 0; j < 3; "
                    "j++) { S: x += A[i][j]; } } }");
  const Statement &s = scop.statements[0];
  AccessRange r = accessRangeOf(s.instructions[1], s); // load A[i][j]
  auto pts = r.indices.enumerate({{"N", 1}});
  EXPECT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts.front(), (std::vector<int64_t>{0, 0}));
  EXPECT_EQ(pts.back(), (std::vector<int64_t>{1, 2}));
}

TEST(AccessRangeTest, SkewedLoadRange) {
  // Load A[j-i] over 0<=i<N, 0<=j<M at N=M=4 covers {-3..3}.
  Scop scop = parse(kCondReduction);
  const Statement &s = scop.statements[0];
  AccessRange r = accessRangeOf(s.instructions[0], s);
  std::map<std::string, int64_t> params{{"N", 4}, {"M", 4}};
  auto pts = r.indices.enumerate(params);
  ASSERT_EQ(pts.size(), 7u);
  EXPECT_EQ(pts.front(), (std::vector<int64_t>{-3}));
  EXPECT_EQ(pts.back(), (std::vector<int64_t>{3}));
}

TEST(AccessRangeTest, OverlapSemantics) {
  Scop scop = parse(kBicg);
  const Statement &s = scop.stmt("S");
  // Statement S: [load q[i], load A[i][j], load p[j], mul, add, store q[i]]
  AccessRange loadQ = accessRangeOf(s.instructions[0], s);
  AccessRange loadA = accessRangeOf(s.instructions[1], s);
  AccessRange storeQ = accessRangeOf(s.instructions[5], s);
  EXPECT_FALSE(rangesOverlap(loadQ, loadA)); // distinct arrays
  EXPECT_TRUE(rangesOverlap(loadQ, storeQ)); // q[i] load vs q[i] store

  // Differing access functions: store A[j] overlaps load A[j-i].
  Scop cond = parse(kCondReduction);
  const Statement &cs = cond.statements[0];
  AccessRange load = accessRangeOf(cs.instructions[0], cs);
  AccessRange store = accessRangeOf(cs.instructions[3], cs);
  EXPECT_TRUE(rangesOverlap(load, store));
  EXPECT_TRUE(rangesOverlap(load, store, OverlapMode::IntegerExact,
                            {{"N", 4}, {"M", 4}}));
}

TEST(AccessRangeTest, RangeWithinDeclaredExtent) {
  // Ranges of all accesses fall within the array extents implied by the
  // domains (spot check on BiCG at fixed sizes).
  Scop scop = parse(kBicg);
  std::map<std::string, int64_t> params{{"NX", 4}, {"NY", 3}};
  for (const Statement &stmt : scop.statements) {
    for (const Instruction &inst : stmt.instructions) {
      if (std::holds_alternative<BinOpInst>(inst))
        continue;
      AccessRange r = accessRangeOf(inst, stmt);
      for (const auto &pt : r.indices.enumerate(params)) {
        for (int64_t v : pt) {
          EXPECT_GE(v, 0);
          EXPECT_LT(v, 4);
        }
      }
    }
  }
}

} // namespace

#include "TestUtil.h"

#include <gtest/gtest.h>
#include <json.hpp>

#include <array>
#include <cstdio>
#include <string>

namespace {

struct CliResult {
  int exitCode;
  std::string output; // stdout only
};

CliResult runCli(const std::string &args) {
  std::string cmd = std::string(POLYRED_CLI_PATH) + " " + args + " 2>/dev/null";
  std::array<char, 4096> buffer;
  std::string output;
  FILE *pipe = popen(cmd.c_str(), "r");
  EXPECT_NE(pipe, nullptr);
  while (fgets(buffer.data(), buffer.size(), pipe))
    output += buffer.data();
  int status = pclose(pipe);
  return {WEXITSTATUS(status), output};
}

std::string corpus(const std::string &name) {
  return polyred::test::corpusPath(name);
}

TEST(CliTest, DetectBicg) {
  CliResult r = runCli("detect " + corpus("bicg.scop"));
  EXPECT_EQ(r.exitCode, 0);
  EXPECT_NE(r.output.find("(S, q[i], +, q[i])"), std::string::npos);
  EXPECT_NE(r.output.find("(T, s[j], +, s[j])"), std::string::npos);
}

TEST(CliTest, DetectControlIsEmptyButExitsZero) {
  CliResult r = runCli("detect " + corpus("control.scop"));
  EXPECT_EQ(r.exitCode, 0);
  EXPECT_NE(r.output.find("no reduction-like computations"), std::string::npos);
}

TEST(CliTest, DetectJsonSchema) {
  CliResult r = runCli("detect " + corpus("bicg.scop") + " --json");
  EXPECT_EQ(r.exitCode, 0);
  nlohmann::json j = nlohmann::json::parse(r.output);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["stmt"], "S");
  EXPECT_EQ(j[0]["op"], "+");
  EXPECT_EQ(j[0]["load"], "q[i]");
  EXPECT_EQ(j[1]["stmt"], "T");
}

TEST(CliTest, UnknownSubcommandExitsTwo) {
  CliResult r = runCli("frobnicate x.scop");
  EXPECT_EQ(r.exitCode, 2);
}

TEST(CliTest, ParseErrorExitsTwo) {
  CliResult r = runCli("detect /dev/null");
  EXPECT_EQ(r.exitCode, 2);
}

TEST(CliTest, StatementGranularityRefusalExitsOne) {
  CliResult r = runCli("deps " + corpus("gemm_like.scop") +
                       " --fuse --granularity stmt");
  EXPECT_EQ(r.exitCode, 1);
}

TEST(CliTest, AccessAndHybridDepsJsonAgreeOnPartition) {
  CliResult access =
      runCli("deps " + corpus("bicg.scop") + " --granularity access --json");
  CliResult hybrid =
      runCli("deps " + corpus("bicg.scop") + " --granularity hybrid --json");
  ASSERT_EQ(access.exitCode, 0);
  ASSERT_EQ(hybrid.exitCode, 0);
  nlohmann::json a = nlohmann::json::parse(access.output);
  nlohmann::json h = nlohmann::json::parse(hybrid.output);
  // Same facts: relation texts of the partitions agree as sets.
  auto relTexts = [](const nlohmann::json &deps, const std::string &key) {
    std::set<std::string> out;
    for (const auto &d : deps[key])
      out.insert(d["relation"].get<std::string>());
    return out;
  };
  EXPECT_EQ(relTexts(a, "rho"), relTexts(h, "rho"));
}

TEST(CliTest, ParseRoundTripsThroughCli) {
  CliResult printed = runCli("parse " + corpus("bicg.scop"));
  ASSERT_EQ(printed.exitCode, 0);
  EXPECT_NE(printed.output.find("scop bicg(NX, NY)"), std::string::npos);
  CliResult ir = runCli("parse " + corpus("bicg.scop") + " --dump-ir");
  nlohmann::json j = nlohmann::json::parse(ir.output);
  EXPECT_EQ(j["statements"].size(), 3u);
  EXPECT_EQ(j["arrays"]["A"], 2);
}

TEST(CliTest, ScheduleJsonCarriesMatricesAndClassification) {
  CliResult r =
      runCli("schedule " + corpus("bicg.scop") + " --mode privatized --json");
  ASSERT_EQ(r.exitCode, 0);
  nlohmann::json j = nlohmann::json::parse(r.output);
  const auto &t = j["statements"]["T"];
  EXPECT_EQ(t["rows"].size(), 5u);
  EXPECT_EQ(t["classification"][1], "parallel"); // interchanged outer dim
}

TEST(CliTest, VerifyPassesOnCorpus) {
  CliResult r = runCli("verify " + corpus("array_sum.scop") +
                       " --mode privatized --params N=2 --contexts 4 --seeds 5");
  EXPECT_EQ(r.exitCode, 0);
  EXPECT_NE(r.output.find("all runs equal"), std::string::npos);
}

TEST(CliTest, CodegenWritesDeterministicFile) {
  CliResult a = runCli("codegen " + corpus("array_sum.scop") +
                       " --mode privatized");
  CliResult b = runCli("codegen " + corpus("array_sum.scop") +
                       " --mode privatized");
  ASSERT_EQ(a.exitCode, 0);
  EXPECT_EQ(a.output, b.output);
  EXPECT_NE(a.output.find("#pragma omp parallel for"), std::string::npos);
}

TEST(CliTest, ValueBasedDepsNeedParamsAndWork) {
  CliResult r = runCli("deps " + corpus("bicg.scop") +
                       " --value-based --params NX=3,NY=3 --json");
  ASSERT_EQ(r.exitCode, 0);
  nlohmann::json j = nlohmann::json::parse(r.output);
  EXPECT_EQ(j["basis"], "value");
  EXPECT_FALSE(j["rho"].empty());
}

TEST(CliTest, EnvironmentSeedOverride) {
  CliResult plain = runCli("verify " + corpus("array_sum.scop") +
                           " --mode relaxed --params N=2 --seeds 2 --json");
  setenv("POLYRED_SEED", "7", 1);
  CliResult seeded = runCli("verify " + corpus("array_sum.scop") +
                            " --mode relaxed --params N=2 --seeds 2 --json");
  unsetenv("POLYRED_SEED");
  for (const CliResult *r : {&plain, &seeded}) {
    ASSERT_EQ(r->exitCode, 0);
    EXPECT_TRUE(nlohmann::json::parse(r->output)["all_equal"].get<bool>());
  }
}

TEST(CliTest, CodegenToFile) {
  std::string out = ::testing::TempDir() + "/polyred_cli_out.c";
  CliResult r = runCli("codegen " + corpus("priv_placement.scop") +
                       " --mode privatized --parallel-loop k -o " + out);
  ASSERT_EQ(r.exitCode, 0);
  std::string code = polyred::test::readFile(out);
  EXPECT_NE(code.find("priv_P"), std::string::npos);
  std::remove(out.c_str());
}

TEST(CliTest, ReportRunsAllGranularities) {
  CliResult r = runCli("report " + corpus("bicg.scop") + " --json");
  ASSERT_EQ(r.exitCode, 0);
  nlohmann::json j = nlohmann::json::parse(r.output);
  ASSERT_EQ(j.size(), 3u);
  EXPECT_EQ(j[0]["granularity"], "statement");
  EXPECT_EQ(j[2]["granularity"], "hybrid");
  for (const auto &row : j)
    EXPECT_GE(row["milliseconds"].get<double>(), 0.0);
}

} // namespace

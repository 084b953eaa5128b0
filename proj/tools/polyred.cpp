//===- polyred.cpp - Command-line driver ------------------------------------//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Subcommands wire the pipeline together:
//
//   parse     parse and dump the IR
//   detect    reduction-like computations
//   deps      dependences at a chosen granularity, partitioned
//   schedule  bounded schedule search under a legality mode
//   codegen   emit C with pragmas and privatization code
//   verify    differential execution of the searched schedule
//   report    wall-times of the three dependence granularities
//
// Exit codes: 0 success, 1 analysis refusal or verification failure,
// 2 usage or parse errors.
//
//===----------------------------------------------------------------------===//

#include "polyred/Codegen.h"
#include "polyred/Dependences.h"
#include "polyred/Executor.h"
#include "polyred/Frontend.h"
#include "polyred/JsonIO.h"
#include "polyred/ReductionDetect.h"
#include "polyred/Scheduling.h"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace polyred;

namespace {

std::string readFile(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, int64_t> parseParams(const std::string &text) {
  std::map<std::string, int64_t> params;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty())
      continue;
    size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--params", "expected NAME=VALUE, got '" +
                                                 item + "'");
    params[item.substr(0, eq)] = std::stoll(item.substr(eq + 1));
  }
  return params;
}

Granularity parseGranularity(const std::string &name) {
  if (name == "stmt" || name == "statement")
    return Granularity::Statement;
  if (name == "access")
    return Granularity::Access;
  if (name == "hybrid")
    return Granularity::Hybrid;
  throw CLI::ValidationError("--granularity",
                             "expected stmt|access|hybrid, got '" + name + "'");
}

LegalityMode parseMode(const std::string &name) {
  if (name == "strict")
    return LegalityMode::Strict;
  if (name == "relaxed")
    return LegalityMode::Relaxed;
  if (name == "privatized")
    return LegalityMode::Privatized;
  throw CLI::ValidationError("--mode",
                             "expected strict|relaxed|privatized, got '" + name +
                                 "'");
}

uint64_t envSeed(uint64_t fallback) {
  if (const char *env = std::getenv("POLYRED_SEED"))
    return std::stoull(env);
  return fallback;
}

struct Analysis {
  Scop scop;
  std::vector<ReductionInfo> reductions;
  DependenceSet deps; // partitioned, with privatization dependences
};

Analysis analyze(const std::string &file, bool fuse,
                 const std::string &granularity, bool valueBased,
                 const std::map<std::string, int64_t> &params) {
  Analysis a{parse(readFile(file), ParseOptions{fuse}), {}, {}};
  a.reductions = detect(a.scop);
  Granularity g = parseGranularity(granularity);
  DependenceSet raw =
      valueBased ? valueDeps(a.scop, params, g, a.reductions)
                 : memoryDeps(a.scop, g, a.reductions);
  a.deps = addPrivatizationDeps(
      partition(std::move(raw), a.scop, a.reductions), a.scop, a.reductions);
  return a;
}

/// Schedule dimensions a --parallel-loop name can refer to: dims where every
/// statement's row is either constant or exactly one source iterator.
std::map<std::string, size_t> namedLoopDims(const Scop &scop,
                                            const Schedule &schedule) {
  std::map<std::string, size_t> result;
  size_t dims = schedule.paddedDim();
  for (size_t k = 0; k < dims; ++k) {
    std::optional<std::string> name;
    bool uniform = true;
    for (const Statement &stmt : scop.statements) {
      const auto &rows = schedule.rows.at(stmt.name);
      if (k >= rows.size() || rows[k].isConstant())
        continue;
      const AffineExpr &row = rows[k];
      if (row.constant() == 0 && row.coeffs().size() == 1 &&
          row.coeffs().begin()->second == 1) {
        std::string n = row.coeffs().begin()->first;
        if (name && *name != n)
          uniform = false;
        name = n;
      } else {
        uniform = false;
      }
    }
    if (uniform && name && !result.count(*name))
      result[*name] = k;
  }
  return result;
}

std::optional<size_t> pickParallelDim(const Scop &scop, const Schedule &sched,
                                      const DimClassification &cls,
                                      const std::string &request) {
  if (request == "outermost")
    return defaultParallelDim(scop, sched, cls);
  auto viable = [&](size_t k) {
    bool anyLoop = false;
    for (const Statement &stmt : scop.statements) {
      const auto &rows = sched.rows.at(stmt.name);
      if (k >= rows.size() || rows[k].isConstant())
        continue;
      anyLoop = true;
      if (cls.of(stmt.name, k) == DimClass::Sequential)
        return false;
    }
    return anyLoop;
  };
  if (request == "innermost") {
    std::optional<size_t> best;
    for (size_t k = 0; k < sched.paddedDim(); ++k)
      if (viable(k))
        best = k;
    return best;
  }
  auto named = namedLoopDims(scop, sched);
  auto it = named.find(request);
  if (it == named.end())
    throw AnalysisRefusal("no loop named '" + request +
                          "' in the transformed schedule");
  if (!viable(it->second))
    throw AnalysisRefusal("loop '" + request + "' is sequential");
  return it->second;
}

void printReductions(const Scop &scop, const std::vector<ReductionInfo> &red) {
  if (red.empty()) {
    std::cout << "no reduction-like computations\n";
    return;
  }
  for (const ReductionInfo &rc : red) {
    const Statement &stmt = scop.stmt(rc.stmt);
    std::cout << "(" << rc.stmt << ", " << accessText(stmt, rc.loadId) << ", "
              << operatorSymbol(rc.op) << ", " << accessText(stmt, rc.storeId)
              << ")\n";
  }
}

void printDeps(const DependenceSet &deps) {
  auto printList = [](const char *title, const std::vector<Dependence> &list) {
    std::cout << title << " (" << list.size() << "):\n";
    for (const Dependence &d : list) {
      std::cout << "  " << depKindName(d.kind) << " " << d.srcStmt;
      if (d.srcAccess)
        std::cout << "#" << *d.srcAccess;
      std::cout << " -> " << d.tgtStmt;
      if (d.tgtAccess)
        std::cout << "#" << *d.tgtAccess;
      std::cout << " : " << d.relation.str() << "\n";
    }
  };
  std::cout << "granularity: " << granularityName(deps.granularity)
            << ", basis: "
            << (deps.basis == DepBasis::Memory ? "memory" : "value") << "\n";
  printList("all", deps.all);
  printList("reduction (rho)", deps.rho);
  printList("non-reduction (nu)", deps.nu);
  printList("privatization (tau)", deps.tau);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"polyred - a mini polyhedral loop optimizer for reductions"};
  app.require_subcommand(1);

  std::string file, paramsText, granularity = "hybrid", mode = "relaxed";
  std::string placementText = "auto", parallelLoop = "outermost";
  std::string output = "-";
  bool fuse = false, jsonOut = false, valueBased = false, dumpIr = false;
  bool floatMode = false, useSearch = false;
  int searchDepth = 1, contexts = 4, seeds = 50;

  auto addCommon = [&](CLI::App *cmd, bool withDeps) {
    cmd->add_option("file", file, "input .scop file")->required();
    cmd->add_flag("--fuse", fuse,
                  "one compound statement per run of adjacent statements");
    cmd->add_flag("--json", jsonOut, "machine-readable output");
    if (withDeps) {
      cmd->add_option("--granularity", granularity, "stmt|access|hybrid");
      cmd->add_flag("--value-based", valueBased,
                    "enumerate exact value-based dependences (needs --params)");
      cmd->add_option("--params", paramsText, "parameter bindings NX=4,NY=4");
    }
  };

  CLI::App *parseCmd = app.add_subcommand("parse", "parse and dump the IR");
  addCommon(parseCmd, false);
  parseCmd->add_flag("--dump-ir", dumpIr, "full IR dump");

  CLI::App *detectCmd =
      app.add_subcommand("detect", "detect reduction-like computations");
  addCommon(detectCmd, false);

  CLI::App *depsCmd = app.add_subcommand("deps", "compute dependences");
  addCommon(depsCmd, true);

  CLI::App *scheduleCmd =
      app.add_subcommand("schedule", "search a legal schedule");
  addCommon(scheduleCmd, true);
  scheduleCmd->add_option("--mode", mode, "strict|relaxed|privatized");
  scheduleCmd->add_option("--search-depth", searchDepth,
                          "0 original, 1 perm/reversal/shift, 2 adds skews");

  CLI::App *codegenCmd = app.add_subcommand("codegen", "emit C code");
  addCommon(codegenCmd, true);
  codegenCmd->add_option("--mode", mode, "strict|relaxed|privatized");
  codegenCmd->add_option("--placement", placementText,
                         "auto or depth=K for privatization init/aggregate");
  codegenCmd->add_option("--parallel-loop", parallelLoop,
                         "outermost|innermost|<loop name>");
  codegenCmd->add_option("-o,--output", output, "output path ('-' = stdout)");
  codegenCmd->add_flag("--search", useSearch,
                       "emit the searched schedule instead of the source "
                       "order (may be refused when statements no longer "
                       "share loop bounds)");
  codegenCmd->add_option("--search-depth", searchDepth,
                         "schedule search depth for --search");

  CLI::App *verifyCmd = app.add_subcommand(
      "verify", "differential check of the searched schedule");
  addCommon(verifyCmd, true);
  verifyCmd->add_option("--mode", mode, "strict|relaxed|privatized");
  verifyCmd->add_option("--contexts", contexts, "max parallel contexts");
  verifyCmd->add_option("--seeds", seeds, "number of interleaving seeds");
  verifyCmd->add_option("--search-depth", searchDepth, "schedule search depth");
  verifyCmd->add_flag("--float", floatMode,
                      "double-precision run compared within 1e-6 relative "
                      "tolerance (informational)");

  CLI::App *reportCmd = app.add_subcommand(
      "report", "wall-times per dependence granularity");
  addCommon(reportCmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::map<std::string, int64_t> params = parseParams(paramsText);

    if (parseCmd->parsed()) {
      Scop scop = parse(readFile(file), ParseOptions{fuse});
      if (jsonOut || dumpIr)
        std::cout << toJson(scop).dump(2) << "\n";
      else
        std::cout << prettyPrint(scop);
      return 0;
    }

    if (detectCmd->parsed()) {
      Scop scop = parse(readFile(file), ParseOptions{fuse});
      auto red = detect(scop);
      if (jsonOut)
        std::cout << toJson(scop, red).dump(2) << "\n";
      else
        printReductions(scop, red);
      return 0;
    }

    if (depsCmd->parsed()) {
      Analysis a = analyze(file, fuse, granularity, valueBased, params);
      if (jsonOut)
        std::cout << toJson(a.deps).dump(2) << "\n";
      else
        printDeps(a.deps);
      return 0;
    }

    if (scheduleCmd->parsed()) {
      Analysis a = analyze(file, fuse, granularity, valueBased, params);
      SearchOptions opts;
      opts.depth = searchDepth;
      SearchResult result = search(a.scop, a.deps, parseMode(mode), opts);
      if (jsonOut) {
        nlohmann::json j = toJson(result.schedule, result.classification);
        j["from_search"] = result.fromSearch;
        if (!result.diagnostic.empty())
          j["diagnostic"] = result.diagnostic;
        std::cout << j.dump(2) << "\n";
      } else {
        if (!result.diagnostic.empty())
          std::cerr << result.diagnostic << "\n";
        std::cout << result.schedule.str();
        for (const auto &[name, classes] : result.classification.dims) {
          std::cout << name << ":";
          for (DimClass c : classes)
            std::cout << " " << dimClassName(c);
          std::cout << "\n";
        }
      }
      return 0;
    }

    if (codegenCmd->parsed()) {
      Analysis a = analyze(file, fuse, granularity, valueBased, params);
      LegalityMode m = parseMode(mode);
      Schedule sched = originalSchedule(a.scop);
      if (useSearch) {
        SearchOptions opts;
        opts.depth = searchDepth;
        SearchResult result = search(a.scop, a.deps, m, opts);
        if (!result.diagnostic.empty())
          std::cerr << result.diagnostic << "\n";
        sched = result.schedule;
      }
      DimClassification cls = classifyDims(sched, a.deps, m);
      std::optional<PrivatizationPlan> plan;
      std::optional<size_t> dim = pickParallelDim(a.scop, sched, cls, parallelLoop);
      if (dim) {
        Placement placement = Placement::autoPlacement();
        if (placementText != "auto") {
          if (placementText.rfind("depth=", 0) != 0)
            throw CLI::ValidationError("--placement",
                                       "expected auto or depth=K");
          placement = Placement::atDepth(std::stoi(placementText.substr(6)));
        }
        plan = planPrivatization(a.scop, sched, cls, *dim, placement);
      }
      std::string code = emitC(a.scop, sched, cls, plan);
      if (output == "-") {
        std::cout << code;
      } else {
        std::ofstream out(output);
        if (!out)
          throw std::runtime_error("cannot write '" + output + "'");
        out << code;
      }
      return 0;
    }

    if (verifyCmd->parsed()) {
      if (params.empty())
        throw AnalysisRefusal("verify needs --params to bound the domains");
      Analysis a = analyze(file, fuse, granularity, valueBased, params);
      LegalityMode m = parseMode(mode);
      SearchOptions opts;
      opts.depth = searchDepth;
      SearchResult result = search(a.scop, a.deps, m, opts);
      if (!result.diagnostic.empty())
        std::cerr << result.diagnostic << "\n";
      ValidationResult vr = validate(result.schedule, a.deps, m, params);
      if (!vr.ok) {
        std::cerr << "no schedule satisfies the " << legalityModeName(m)
                  << " conditions for this kernel\n";
        return 1;
      }
      std::optional<PrivatizationPlan> plan;
      if (auto dim = defaultParallelDim(a.scop, result.schedule,
                                        result.classification))
        plan = planPrivatization(a.scop, result.schedule,
                                 result.classification, *dim);
      std::vector<int> contextList;
      for (int p = 1; p <= contexts; p *= 2)
        contextList.push_back(p);
      std::vector<uint64_t> seedList;
      for (int s = 0; s < seeds; ++s)
        seedList.push_back(static_cast<uint64_t>(s));
      uint64_t inputSeed = envSeed(2026);
      DifferentialReport report =
          floatMode ? differentialCheckFloat(a.scop, params, result.schedule,
                                             plan, contextList, seedList,
                                             inputSeed)
                    : differentialCheck(a.scop, params, result.schedule, plan,
                                        contextList, seedList, inputSeed);
      if (jsonOut) {
        std::cout << toJson(report).dump(2) << "\n";
      } else {
        for (const auto &row : report.rows)
          std::cout << "contexts=" << row.contexts << " seed=" << row.seed
                    << " " << (row.equal ? "equal" : "MISMATCH") << "\n";
        std::cout << (report.allEqual ? "all runs equal the sequential result"
                                      : "MISMATCH against sequential result")
                  << "\n";
      }
      return report.allEqual ? 0 : 1;
    }

    if (reportCmd->parsed()) {
      Scop scop = parse(readFile(file), ParseOptions{fuse});
      auto red = detect(scop);
      nlohmann::json rows = nlohmann::json::array();
      for (Granularity g :
           {Granularity::Statement, Granularity::Access, Granularity::Hybrid}) {
        auto start = std::chrono::steady_clock::now();
        DependenceSet deps = memoryDeps(scop, g, red);
        bool partitioned = true;
        try {
          deps = partition(std::move(deps), scop, red);
        } catch (const AnalysisRefusal &) {
          partitioned = false;
        }
        auto stop = std::chrono::steady_clock::now();
        double ms =
            std::chrono::duration<double, std::milli>(stop - start).count();
        rows.push_back({{"granularity", granularityName(g)},
                        {"milliseconds", ms},
                        {"dependences", deps.all.size()},
                        {"partitioned", partitioned}});
      }
      if (jsonOut) {
        std::cout << rows.dump(2) << "\n";
      } else {
        std::cout << "granularity   time(ms)   dependences\n";
        for (const auto &row : rows) {
          std::ostringstream line;
          line.width(12);
          line << std::left << row["granularity"].get<std::string>();
          line << "  " << row["milliseconds"].get<double>() << "  "
               << row["dependences"].get<size_t>();
          if (!row["partitioned"].get<bool>())
            line << "  (partition refused)";
          std::cout << line.str() << "\n";
        }
      }
      return 0;
    }
  } catch (const ParseError &e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ValidationError &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const AnalysisRefusal &e) {
    std::cerr << "analysis refused: " << e.what() << "\n";
    return 1;
  } catch (const CodegenError &e) {
    std::cerr << "codegen error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

//===- JsonIO.cpp ---------------------------------------------------------==//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "polyred/JsonIO.h"

#include "polyred/ReductionDetect.h"

namespace polyred {

using nlohmann::json;

static json rowOf(const AffineExpr &e, const std::vector<std::string> &columns) {
  json row = json::array();
  for (const std::string &c : columns)
    row.push_back(e.coeff(c));
  row.push_back(e.constant());
  return row;
}

static json piecesOf(const std::vector<BasicSet> &pieces,
                     const std::vector<std::string> &columns) {
  json out = json::array();
  for (const BasicSet &p : pieces) {
    json eq = json::array(), ge = json::array();
    for (const Constraint &c : p.constraints())
      (c.kind == ConstraintKind::EQ ? eq : ge).push_back(rowOf(c.expr, columns));
    out.push_back({{"eq", eq}, {"ge", ge}});
  }
  return out;
}

json toJson(const IntSet &set) {
  std::vector<std::string> columns = set.space().allNames();
  return {{"dims", set.space().dims},
          {"params", set.space().params},
          {"columns", [&] {
             json c = columns;
             c.push_back("1");
             return c;
           }()},
          {"pieces", piecesOf(set.pieces(), columns)},
          {"text", set.str()}};
}

json toJson(const IntRel &rel) {
  std::vector<std::string> columns = rel.asSet().space().allNames();
  return {{"in", rel.inDims()},
          {"out", rel.outDims()},
          {"params", rel.asSet().space().params},
          {"columns", [&] {
             json c = columns;
             c.push_back("1");
             return c;
           }()},
          {"pieces", piecesOf(rel.asSet().pieces(), columns)},
          {"text", rel.str()}};
}

static json instructionToJson(const Instruction &inst) {
  json j;
  if (const auto *l = std::get_if<LoadInst>(&inst)) {
    j["id"] = l->id;
    j["kind"] = "load";
    j["array"] = l->array;
    json subs = json::array();
    for (const AffineExpr &e : l->subscripts)
      subs.push_back(e.str());
    j["subscripts"] = subs;
  } else if (const auto *b = std::get_if<BinOpInst>(&inst)) {
    j["id"] = b->id;
    j["kind"] = "binop";
    j["op"] = operatorSymbol(b->op);
    auto refToJson = [](const ValueRef &v) -> json {
      if (const auto *lit = std::get_if<int64_t>(&v))
        return {{"literal", *lit}};
      if (const auto *p = std::get_if<ParamRef>(&v))
        return {{"param", p->name}};
      return {{"inst", std::get<InstRef>(v).id}};
    };
    j["lhs"] = refToJson(b->lhs);
    j["rhs"] = refToJson(b->rhs);
  } else {
    const auto &s = std::get<StoreInst>(inst);
    j["id"] = s.id;
    j["kind"] = "store";
    j["array"] = s.array;
    json subs = json::array();
    for (const AffineExpr &e : s.subscripts)
      subs.push_back(e.str());
    j["subscripts"] = subs;
    if (const auto *lit = std::get_if<int64_t>(&s.value))
      j["value"] = {{"literal", *lit}};
    else if (const auto *p = std::get_if<ParamRef>(&s.value))
      j["value"] = {{"param", p->name}};
    else
      j["value"] = {{"inst", std::get<InstRef>(s.value).id}};
  }
  return j;
}

json toJson(const Scop &scop) {
  json stmts = json::array();
  for (const Statement &stmt : scop.statements) {
    json insts = json::array();
    for (const Instruction &inst : stmt.instructions)
      insts.push_back(instructionToJson(inst));
    stmts.push_back({{"name", stmt.name},
                     {"iterators", stmt.iterators},
                     {"domain", stmt.domain.str()},
                     {"domain_set", toJson(stmt.domain)},
                     {"position", stmt.textualPosition},
                     {"instructions", insts}});
  }
  return {{"name", scop.name},
          {"parameters", scop.parameters},
          {"arrays", scop.arrays},
          {"statements", stmts}};
}

json toJson(const Scop &scop, const std::vector<ReductionInfo> &red) {
  json out = json::array();
  for (const ReductionInfo &rc : red) {
    const Statement &stmt = scop.stmt(rc.stmt);
    out.push_back({{"stmt", rc.stmt},
                   {"load", accessText(stmt, rc.loadId)},
                   {"load_id", rc.loadId},
                   {"op", operatorSymbol(rc.op)},
                   {"store", accessText(stmt, rc.storeId)},
                   {"store_id", rc.storeId}});
  }
  return out;
}

static json depToJson(const Dependence &d) {
  json j{{"src", d.srcStmt},
         {"tgt", d.tgtStmt},
         {"kind", depKindName(d.kind)},
         {"basis", d.basis == DepBasis::Memory ? "memory" : "value"},
         {"relation", d.relation.str()},
         {"relation_set", toJson(d.relation)}};
  if (d.srcAccess)
    j["src_access"] = *d.srcAccess;
  if (d.tgtAccess)
    j["tgt_access"] = *d.tgtAccess;
  return j;
}

json toJson(const DependenceSet &deps) {
  auto list = [](const std::vector<Dependence> &v) {
    json out = json::array();
    for (const Dependence &d : v)
      out.push_back(depToJson(d));
    return out;
  };
  json j{{"granularity", granularityName(deps.granularity)},
         {"basis", deps.basis == DepBasis::Memory ? "memory" : "value"},
         {"all", list(deps.all)},
         {"partitioned", deps.partitioned}};
  if (deps.partitioned) {
    j["rho"] = list(deps.rho);
    j["nu"] = list(deps.nu);
    j["tau"] = list(deps.tau);
  }
  return j;
}

json toJson(const Schedule &schedule, const DimClassification &classification) {
  json stmts;
  for (const auto &[name, rows] : schedule.rows) {
    json text = json::array();
    for (const AffineExpr &row : rows)
      text.push_back(row.str());
    // Coefficient matrix over the union of names appearing in the rows.
    std::vector<std::string> columns;
    for (const AffineExpr &row : rows)
      for (const auto &[n, c] : row.coeffs()) {
        (void)c;
        if (std::find(columns.begin(), columns.end(), n) == columns.end())
          columns.push_back(n);
      }
    json matrix = json::array();
    for (const AffineExpr &row : rows)
      matrix.push_back(rowOf(row, columns));
    json cls = json::array();
    if (classification.dims.count(name))
      for (DimClass c : classification.dims.at(name))
        cls.push_back(dimClassName(c));
    stmts[name] = {{"rows", text},
                   {"columns", [&] {
                      json c = columns;
                      c.push_back("1");
                      return c;
                    }()},
                   {"matrix", matrix},
                   {"classification", cls}};
  }
  return {{"statements", stmts}};
}

json toJson(const ValidationResult &result) {
  json violations = json::array();
  for (const Violation &v : result.violations) {
    json j{{"src", v.srcStmt},
           {"tgt", v.tgtStmt},
           {"kind", depKindName(v.kind)},
           {"condition", v.equalTimestamp ? "distinct-timestamp" : "order"},
           {"text", v.text}};
    if (v.witness) {
      j["witness"] = {{"src", v.witness->first}, {"tgt", v.witness->second}};
    }
    violations.push_back(j);
  }
  return {{"ok", result.ok}, {"violations", violations}};
}

json toJson(const DifferentialReport &report) {
  json rows = json::array();
  for (const auto &row : report.rows)
    rows.push_back(
        {{"contexts", row.contexts}, {"seed", row.seed}, {"equal", row.equal}});
  return {{"all_equal", report.allEqual}, {"runs", rows}};
}

} // namespace polyred

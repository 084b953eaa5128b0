//===- Frontend.h - Affine loop DSL parser --------------------*- C++ -*-===//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Grammar (UTF-8, '#' line comments):
//
//   scop   := "scop" IDENT "(" [IDENT ("," IDENT)*] ")" block
//   block  := "{" (loop | stmt)* "}"
//   loop   := "for" "(" IDENT "=" affine ";" IDENT ("<" | "<=") affine ";"
//             IDENT "++" ")" block
//   stmt   := [IDENT ":"] IDENT ("[" affine "]")*
//             ("=" | "+=" | "-=" | "*=" | "&=" | "|=" | "^=") expr ";"
//   expr   := C-like precedence over + - * / & | ^ with min(a,b) / max(a,b)
//             calls; leaves are integer literals, parameters, and array
//             accesses (scalars are rank-0 arrays)
//   affine := affine combination of iterators, parameters and literals
//
// Loops are normalized to stride +1 with lower bound 0 at parse time; `x += e`
// desugars to `x = x + e` with the load of x emitted first.
//
//===----------------------------------------------------------------------===//

#ifndef POLYRED_FRONTEND_H
#define POLYRED_FRONTEND_H

#include "polyred/Scop.h"

namespace polyred {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(const std::string &msg, int line, int col)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ", col " +
                           std::to_string(col) + ")"),
        line(line), col(col) {}
};

struct ParseOptions {
  /// Build one compound statement per maximal run of adjacent source
  /// statements in a loop body (basic-block-like granularity).
  bool fuse = false;
};

Scop parse(const std::string &text, const ParseOptions &opts = {});

/// Prints a scop back as DSL text (normalized loops, desugared assignments).
/// parse(prettyPrint(parse(text))) == parse(text) for default options.
std::string prettyPrint(const Scop &scop);

} // namespace polyred

#endif // POLYRED_FRONTEND_H

//===- AffineExpr.h - Integer affine expressions over named dims -*- C++ -*-=//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef POLYRED_AFFINEEXPR_H
#define POLYRED_AFFINEEXPR_H

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace polyred {

/// Thrown when an exact integer operation would overflow 64 bits.
struct OverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int64_t checkedAdd(int64_t a, int64_t b);
int64_t checkedMul(int64_t a, int64_t b);

/// Floor division / modulo (round toward negative infinity).
int64_t floorDiv(int64_t a, int64_t b);
int64_t floorMod(int64_t a, int64_t b);

/// A linear combination of named dimensions plus an integer constant.
/// Dimensions are identified by name only; an expression is bound to a
/// concrete space when it is used in a constraint. All arithmetic is exact.
class AffineExpr {
public:
  AffineExpr() = default;
  /*implicit*/ AffineExpr(int64_t constant) : constant_(constant) {}

  static AffineExpr var(const std::string &name) {
    AffineExpr e;
    e.coeffs_[name] = 1;
    return e;
  }

  int64_t coeff(const std::string &name) const {
    auto it = coeffs_.find(name);
    return it == coeffs_.end() ? 0 : it->second;
  }
  int64_t constant() const { return constant_; }
  const std::map<std::string, int64_t> &coeffs() const { return coeffs_; }

  bool isConstant() const { return coeffs_.empty(); }

  void setCoeff(const std::string &name, int64_t c);
  void setConstant(int64_t c) { constant_ = c; }

  AffineExpr operator+(const AffineExpr &o) const;
  AffineExpr operator-(const AffineExpr &o) const;
  AffineExpr operator-() const;
  AffineExpr operator*(int64_t k) const;
  bool operator==(const AffineExpr &o) const = default;

  /// Replaces dimension `name` by `value` (an expression or constant).
  AffineExpr substitute(const std::string &name, const AffineExpr &value) const;

  /// Renames dimension `from` to `to`. `to` must not already have a
  /// coefficient.
  AffineExpr renameDim(const std::string &from, const std::string &to) const;

  std::string str() const;

private:
  std::map<std::string, int64_t> coeffs_; // zero coefficients are not stored
  int64_t constant_ = 0;
};

inline AffineExpr operator*(int64_t k, const AffineExpr &e) { return e * k; }

} // namespace polyred

#endif // POLYRED_AFFINEEXPR_H

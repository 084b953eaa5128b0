//===- AffineExpr.cpp -----------------------------------------------------==//
//
// Part of the polyred project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "polyred/AffineExpr.h"

#include <sstream>

namespace polyred {

int64_t checkedAdd(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_add_overflow(a, b, &r))
    throw OverflowError("integer overflow in affine arithmetic");
  return r;
}

int64_t checkedMul(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_mul_overflow(a, b, &r))
    throw OverflowError("integer overflow in affine arithmetic");
  return r;
}

int64_t floorDiv(int64_t a, int64_t b) {
  int64_t q = a / b, r = a % b;
  if (r != 0 && ((r < 0) != (b < 0)))
    --q;
  return q;
}

int64_t floorMod(int64_t a, int64_t b) { return a - checkedMul(floorDiv(a, b), b); }

void AffineExpr::setCoeff(const std::string &name, int64_t c) {
  if (c == 0)
    coeffs_.erase(name);
  else
    coeffs_[name] = c;
}

AffineExpr AffineExpr::operator+(const AffineExpr &o) const {
  AffineExpr r = *this;
  for (const auto &[name, c] : o.coeffs_)
    r.setCoeff(name, checkedAdd(r.coeff(name), c));
  r.constant_ = checkedAdd(r.constant_, o.constant_);
  return r;
}

AffineExpr AffineExpr::operator-(const AffineExpr &o) const { return *this + (-o); }

AffineExpr AffineExpr::operator-() const { return *this * -1; }

AffineExpr AffineExpr::operator*(int64_t k) const {
  AffineExpr r;
  if (k == 0)
    return r;
  for (const auto &[name, c] : coeffs_)
    r.coeffs_[name] = checkedMul(c, k);
  r.constant_ = checkedMul(constant_, k);
  return r;
}

AffineExpr AffineExpr::substitute(const std::string &name,
                                  const AffineExpr &value) const {
  int64_t c = coeff(name);
  if (c == 0)
    return *this;
  AffineExpr r = *this;
  r.coeffs_.erase(name);
  return r + value * c;
}

AffineExpr AffineExpr::renameDim(const std::string &from,
                                 const std::string &to) const {
  int64_t c = coeff(from);
  if (c == 0)
    return *this;
  AffineExpr r = *this;
  r.coeffs_.erase(from);
  r.setCoeff(to, checkedAdd(r.coeff(to), c));
  return r;
}

std::string AffineExpr::str() const {
  std::ostringstream os;
  bool first = true;
  auto emit = [&](const std::string &name, int64_t c) {
    if (first) {
      if (c == -1)
        os << "-";
      else if (c != 1)
        os << c << "*";
      first = false;
    } else {
      os << (c < 0 ? " - " : " + ");
      int64_t a = c < 0 ? -c : c;
      if (a != 1)
        os << a << "*";
    }
    os << name;
  };
  // Positive terms first reads naturally (j - i rather than -i + j).
  for (const auto &[name, c] : coeffs_)
    if (c > 0)
      emit(name, c);
  for (const auto &[name, c] : coeffs_)
    if (c < 0)
      emit(name, c);
  if (first)
    os << constant_;
  else if (constant_ > 0)
    os << " + " << constant_;
  else if (constant_ < 0)
    os << " - " << -constant_;
  return os.str();
}

} // namespace polyred

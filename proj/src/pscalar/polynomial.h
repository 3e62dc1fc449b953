// Copyright 2026 The pscalar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PSCALAR_POLYNOMIAL_H_
#define PSCALAR_POLYNOMIAL_H_

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"

namespace pscalar {

// Identifies one clipped indeterminate: a single private input contributed by
// one entity. `attribute` distinguishes several inputs of the same entity
// (e.g. age and weight); the privacy ledger aggregates by `entity` alone.
struct VarId {
  std::string entity;
  std::string attribute;

  friend auto operator<=>(const VarId&, const VarId&) = default;
  friend bool operator==(const VarId&, const VarId&) = default;
};

// "7" for an attribute-less id, "ages:7" otherwise.
std::string VarIdToString(const VarId& v);

// Product of variables raised to positive integer powers. Factors are kept
// sorted by VarId with no zero exponents, so equal monomials compare equal.
class Monomial {
 public:
  using Factor = std::pair<VarId, int>;

  Monomial() = default;
  static Monomial Of(const VarId& v, int exponent = 1);

  const std::vector<Factor>& factors() const { return factors_; }
  bool is_constant() const { return factors_.empty(); }
  int degree() const;
  int ExponentOf(const VarId& v) const;

  Monomial operator*(const Monomial& other) const;
  // Removes one power of `v`; the caller must ensure ExponentOf(v) > 0.
  Monomial DropOne(const VarId& v) const;

  friend auto operator<=>(const Monomial&, const Monomial&) = default;
  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  std::vector<Factor> factors_;
};

// Closed interval [lo, hi].
struct Interval {
  double lo = 0;
  double hi = 0;

  static absl::StatusOr<Interval> Make(double lo, double hi);
  bool Contains(double x) const { return lo <= x && x <= hi; }
  double MaxAbs() const;
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct PolynomialLimits {
  // Operations whose result would exceed this many terms fail with
  // kResourceExhausted.
  std::size_t max_terms = 100000;
};

// Sparse multivariate polynomial with double coefficients. Canonical form: no
// stored coefficient is exactly zero. Values are immutable once built.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double>;

  // The zero polynomial.
  Polynomial() = default;

  static absl::StatusOr<Polynomial> Constant(double c);
  static Polynomial Var(const VarId& v);

  const TermMap& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  int TotalDegree() const;
  // Degree in `v` alone.
  int DegreeIn(const VarId& v) const;
  // True when no variable appears with exponent above one.
  bool IsMultilinear() const;
  std::set<VarId> Variables() const;
  double CoefficientOf(const Monomial& m) const;

  // Canonical text form, terms in descending graded-lexicographic order:
  // "2*x[A]*x[B] + 3".
  std::string ToString() const;

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  friend class PolynomialBuilder;
  explicit Polynomial(TermMap terms) : terms_(std::move(terms)) {}

  TermMap terms_;
};

// Accumulates terms, collecting like monomials, and emits a canonical
// Polynomial. Fails on non-finite coefficients or when the term cap is hit.
class PolynomialBuilder {
 public:
  explicit PolynomialBuilder(PolynomialLimits limits = {}) : limits_(limits) {}

  absl::Status AddTerm(const Monomial& m, double coefficient);
  absl::StatusOr<Polynomial> Build() &&;

 private:
  PolynomialLimits limits_;
  Polynomial::TermMap terms_;
};

absl::StatusOr<Polynomial> Add(const Polynomial& a, const Polynomial& b,
                               const PolynomialLimits& limits = {});
absl::StatusOr<Polynomial> Subtract(const Polynomial& a, const Polynomial& b,
                                    const PolynomialLimits& limits = {});
Polynomial Negate(const Polynomial& a);
absl::StatusOr<Polynomial> Multiply(const Polynomial& a, const Polynomial& b,
                                    const PolynomialLimits& limits = {});
absl::StatusOr<Polynomial> Scale(const Polynomial& a, double c);
absl::StatusOr<Polynomial> Pow(const Polynomial& a, int k,
                               const PolynomialLimits& limits = {});

using Assignment = std::map<VarId, double>;
using Box = std::map<VarId, Interval>;

absl::StatusOr<double> Evaluate(const Polynomial& a,
                                const Assignment& assignment);

// Formal partial derivative with respect to `v`. Fails only when a
// coefficient times its exponent overflows.
absl::StatusOr<Polynomial> Partial(const Polynomial& a, const VarId& v);

// Sound enclosure of the range of `a` over `box`. Each monomial is enclosed
// tightly using the even/odd power rule per variable; the sum over terms may
// be loose. All arithmetic is rounded outward whenever it is inexact.
absl::StatusOr<Interval> IntervalEvaluate(const Polynomial& a, const Box& box);

// Dense form for repeated evaluation: variables mapped to indices, each term a
// coefficient plus (index, exponent) factors.
class CompiledPolynomial {
 public:
  explicit CompiledPolynomial(const Polynomial& p);

  const std::vector<VarId>& variables() const { return variables_; }
  // `values[i]` is the value of variables()[i].
  double Evaluate(const std::vector<double>& values) const;

 private:
  struct Term {
    double coefficient;
    std::vector<std::pair<int, int>> factors;
  };
  std::vector<VarId> variables_;
  std::vector<Term> terms_;
};

}  // namespace pscalar

#endif  // PSCALAR_POLYNOMIAL_H_

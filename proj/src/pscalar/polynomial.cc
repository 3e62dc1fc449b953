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

#include "pscalar/polynomial.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace pscalar {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMax = std::numeric_limits<double>::max();

std::string FormatDouble(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

// Directed rounding built on error-free transforms: the rounded-to-nearest
// result is kept when it is exact and nudged one ulp outward otherwise.
struct Rounded {
  double down;
  double up;
};

Rounded FromResidual(double r, double err) {
  if (std::isinf(r)) {
    // Overflow of a finite computation: the true value is finite.
    return r > 0 ? Rounded{kMax, kInf} : Rounded{-kInf, -kMax};
  }
  if (err > 0) return {r, std::nextafter(r, kInf)};
  if (err < 0) return {std::nextafter(r, -kInf), r};
  return {r, r};
}

Rounded AddRounded(double a, double b) {
  const double s = a + b;
  if (!std::isfinite(a) || !std::isfinite(b)) return {s, s};
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return FromResidual(s, err);
}

Rounded MulRounded(double a, double b) {
  const double p = a * b;
  if (!std::isfinite(a) || !std::isfinite(b)) return {p, p};
  return FromResidual(p, std::fma(a, b, -p));
}

Interval MulInterval(const Interval& x, const Interval& y) {
  const Rounded c[] = {MulRounded(x.lo, y.lo), MulRounded(x.lo, y.hi),
                       MulRounded(x.hi, y.lo), MulRounded(x.hi, y.hi)};
  Interval out{kInf, -kInf};
  for (const Rounded& r : c) {
    out.lo = std::min(out.lo, r.down);
    out.hi = std::max(out.hi, r.up);
  }
  return out;
}

// |x|^k rounded down and up; x >= 0 so every partial product is monotone.
Rounded PowNonNegative(double x, int k) {
  Rounded acc{1.0, 1.0};
  for (int i = 0; i < k; ++i) {
    acc = {MulRounded(acc.down, x).down, MulRounded(acc.up, x).up};
  }
  return acc;
}

// Exact even/odd power rule for x^k over [lo, hi].
Interval PowInterval(const Interval& x, int k) {
  if (k == 0) return {1.0, 1.0};
  const bool even = k % 2 == 0;
  const Rounded alo = PowNonNegative(std::fabs(x.lo), k);
  const Rounded ahi = PowNonNegative(std::fabs(x.hi), k);
  // Signed bounds of t^k at each endpoint.
  const Rounded at_lo = (x.lo < 0 && !even) ? Rounded{-alo.up, -alo.down} : alo;
  const Rounded at_hi = (x.hi < 0 && !even) ? Rounded{-ahi.up, -ahi.down} : ahi;
  if (!even || x.lo >= 0) return {at_lo.down, at_hi.up};
  if (x.hi <= 0) return {at_hi.down, at_lo.up};
  return {0.0, std::max(at_lo.up, at_hi.up)};
}

// Descending graded-lexicographic order for display.
bool GradedLexGreater(const Monomial& a, const Monomial& b) {
  if (a.degree() != b.degree()) return a.degree() > b.degree();
  const auto& fa = a.factors();
  const auto& fb = b.factors();
  std::size_t i = 0, j = 0;
  while (i < fa.size() || j < fb.size()) {
    if (j == fb.size() || (i < fa.size() && fa[i].first < fb[j].first)) {
      return true;  // a has a positive power of an earlier variable.
    }
    if (i == fa.size() || fb[j].first < fa[i].first) return false;
    if (fa[i].second != fb[j].second) return fa[i].second > fb[j].second;
    ++i;
    ++j;
  }
  return false;
}

}  // namespace

std::string VarIdToString(const VarId& v) {
  if (v.attribute.empty()) return v.entity;
  return absl::StrCat(v.attribute, ":", v.entity);
}

// ---------------------------------------------------------------------------
// Monomial

Monomial Monomial::Of(const VarId& v, int exponent) {
  Monomial m;
  if (exponent > 0) m.factors_.emplace_back(v, exponent);
  return m;
}

int Monomial::degree() const {
  int d = 0;
  for (const auto& [v, e] : factors_) d += e;
  return d;
}

int Monomial::ExponentOf(const VarId& v) const {
  auto it = std::lower_bound(
      factors_.begin(), factors_.end(), v,
      [](const Factor& f, const VarId& key) { return f.first < key; });
  return (it != factors_.end() && it->first == v) ? it->second : 0;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  out.factors_.reserve(factors_.size() + other.factors_.size());
  std::size_t i = 0, j = 0;
  while (i < factors_.size() || j < other.factors_.size()) {
    if (j == other.factors_.size() ||
        (i < factors_.size() && factors_[i].first < other.factors_[j].first)) {
      out.factors_.push_back(factors_[i++]);
    } else if (i == factors_.size() ||
               other.factors_[j].first < factors_[i].first) {
      out.factors_.push_back(other.factors_[j++]);
    } else {
      out.factors_.emplace_back(factors_[i].first,
                                factors_[i].second + other.factors_[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

Monomial Monomial::DropOne(const VarId& v) const {
  Monomial out;
  for (const auto& [var, e] : factors_) {
    if (var == v) {
      if (e > 1) out.factors_.emplace_back(var, e - 1);
    } else {
      out.factors_.emplace_back(var, e);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interval

absl::StatusOr<Interval> Interval::Make(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    return absl::InvalidArgumentError("interval bounds must be finite");
  }
  if (lo > hi) {
    return absl::InvalidArgumentError(
        absl::StrCat("empty interval [", lo, ", ", hi, "]"));
  }
  return Interval{lo, hi};
}

double Interval::MaxAbs() const { return std::max(std::fabs(lo), std::fabs(hi)); }

// ---------------------------------------------------------------------------
// Builder

absl::Status PolynomialBuilder::AddTerm(const Monomial& m, double coefficient) {
  if (!std::isfinite(coefficient)) {
    return absl::OutOfRangeError(
        "coefficient overflow: polynomial coefficient is not finite");
  }
  if (coefficient == 0) return absl::OkStatus();
  auto [it, inserted] = terms_.try_emplace(m, coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (!std::isfinite(it->second)) {
      return absl::OutOfRangeError(
          "coefficient overflow: polynomial coefficient is not finite");
    }
    if (it->second == 0) terms_.erase(it);
  } else if (terms_.size() > limits_.max_terms) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "polynomial exceeds the term cap of ", limits_.max_terms, " terms"));
  }
  return absl::OkStatus();
}

absl::StatusOr<Polynomial> PolynomialBuilder::Build() && {
  return Polynomial(std::move(terms_));
}

// ---------------------------------------------------------------------------
// Polynomial

absl::StatusOr<Polynomial> Polynomial::Constant(double c) {
  if (!std::isfinite(c)) {
    return absl::InvalidArgumentError("constant must be finite");
  }
  PolynomialBuilder b;
  if (auto s = b.AddTerm(Monomial(), c); !s.ok()) return s;
  return std::move(b).Build();
}

Polynomial Polynomial::Var(const VarId& v) {
  TermMap t;
  t.emplace(Monomial::Of(v), 1.0);
  return Polynomial(std::move(t));
}

int Polynomial::TotalDegree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

int Polynomial::DegreeIn(const VarId& v) const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.ExponentOf(v));
  return d;
}

bool Polynomial::IsMultilinear() const {
  for (const auto& [m, c] : terms_) {
    for (const auto& [v, e] : m.factors()) {
      if (e > 1) return false;
    }
  }
  return true;
}

std::set<VarId> Polynomial::Variables() const {
  std::set<VarId> out;
  for (const auto& [m, c] : terms_) {
    for (const auto& [v, e] : m.factors()) out.insert(v);
  }
  return out;
}

double Polynomial::CoefficientOf(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

std::string Polynomial::ToString() const {
  if (terms_.empty()) return "0";
  std::vector<const TermMap::value_type*> order;
  order.reserve(terms_.size());
  for (const auto& t : terms_) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return GradedLexGreater(a->first, b->first);
  });
  std::string out;
  bool first = true;
  for (const auto* t : order) {
    const Monomial& m = t->first;
    double c = t->second;
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    c = std::fabs(c);
    std::string body;
    for (const auto& [v, e] : m.factors()) {
      if (!body.empty()) body += "*";
      absl::StrAppend(&body, "x[", VarIdToString(v), "]");
      if (e > 1) absl::StrAppend(&body, "^", e);
    }
    if (body.empty()) {
      out += FormatDouble(c);
    } else if (c == 1) {
      out += body;
    } else {
      absl::StrAppend(&out, FormatDouble(c), "*", body);
    }
    first = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ring operations

absl::StatusOr<Polynomial> Add(const Polynomial& a, const Polynomial& b,
                               const PolynomialLimits& limits) {
  PolynomialBuilder out(limits);
  for (const auto& [m, c] : a.terms()) {
    if (auto s = out.AddTerm(m, c); !s.ok()) return s;
  }
  for (const auto& [m, c] : b.terms()) {
    if (auto s = out.AddTerm(m, c); !s.ok()) return s;
  }
  return std::move(out).Build();
}

Polynomial Negate(const Polynomial& a) {
  PolynomialBuilder out(PolynomialLimits{a.term_count()});
  for (const auto& [m, c] : a.terms()) out.AddTerm(m, -c).IgnoreError();
  return *std::move(out).Build();
}

absl::StatusOr<Polynomial> Subtract(const Polynomial& a, const Polynomial& b,
                                    const PolynomialLimits& limits) {
  return Add(a, Negate(b), limits);
}

absl::StatusOr<Polynomial> Multiply(const Polynomial& a, const Polynomial& b,
                                    const PolynomialLimits& limits) {
  PolynomialBuilder out(limits);
  for (const auto& [ma, ca] : a.terms()) {
    for (const auto& [mb, cb] : b.terms()) {
      if (auto s = out.AddTerm(ma * mb, ca * cb); !s.ok()) return s;
    }
  }
  return std::move(out).Build();
}

absl::StatusOr<Polynomial> Scale(const Polynomial& a, double c) {
  if (!std::isfinite(c)) {
    return absl::InvalidArgumentError("scale factor must be finite");
  }
  PolynomialBuilder out(PolynomialLimits{a.term_count()});
  for (const auto& [m, coef] : a.terms()) {
    if (auto s = out.AddTerm(m, coef * c); !s.ok()) return s;
  }
  return std::move(out).Build();
}

absl::StatusOr<Polynomial> Pow(const Polynomial& a, int k,
                               const PolynomialLimits& limits) {
  if (k < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("exponent must be non-negative, got ", k));
  }
  absl::StatusOr<Polynomial> result = Polynomial::Constant(1.0);
  Polynomial base = a;
  while (k > 0) {
    if (k & 1) {
      result = Multiply(*result, base, limits);
      if (!result.ok()) return result;
    }
    k >>= 1;
    if (k > 0) {
      auto sq = Multiply(base, base, limits);
      if (!sq.ok()) return sq.status();
      base = *std::move(sq);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation and calculus

absl::StatusOr<double> Evaluate(const Polynomial& a,
                                const Assignment& assignment) {
  double sum = 0;
  for (const auto& [m, c] : a.terms()) {
    double term = c;
    for (const auto& [v, e] : m.factors()) {
      auto it = assignment.find(v);
      if (it == assignment.end()) {
        return absl::InvalidArgumentError(
            absl::StrCat("missing value for variable x[", VarIdToString(v),
                         "]"));
      }
      for (int i = 0; i < e; ++i) term *= it->second;
    }
    sum += term;
  }
  return sum;
}

absl::StatusOr<Polynomial> Partial(const Polynomial& a, const VarId& v) {
  PolynomialBuilder out(PolynomialLimits{a.term_count()});
  for (const auto& [m, c] : a.terms()) {
    const int e = m.ExponentOf(v);
    if (e == 0) continue;
    if (auto s = out.AddTerm(m.DropOne(v), c * e); !s.ok()) return s;
  }
  return std::move(out).Build();
}

absl::StatusOr<Interval> IntervalEvaluate(const Polynomial& a, const Box& box) {
  Interval sum{0.0, 0.0};
  for (const auto& [m, c] : a.terms()) {
    Interval mono{1.0, 1.0};
    for (const auto& [v, e] : m.factors()) {
      auto it = box.find(v);
      if (it == box.end()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "missing interval for variable x[", VarIdToString(v), "]"));
      }
      mono = MulInterval(mono, PowInterval(it->second, e));
    }
    Interval term = c >= 0 ? Interval{MulRounded(c, mono.lo).down,
                                      MulRounded(c, mono.hi).up}
                           : Interval{MulRounded(c, mono.hi).down,
                                      MulRounded(c, mono.lo).up};
    sum = {AddRounded(sum.lo, term.lo).down, AddRounded(sum.hi, term.hi).up};
  }
  return sum;
}

// ---------------------------------------------------------------------------
// CompiledPolynomial

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) {
  const std::set<VarId> vars = p.Variables();
  variables_.assign(vars.begin(), vars.end());
  terms_.reserve(p.term_count());
  for (const auto& [m, c] : p.terms()) {
    Term t{c, {}};
    for (const auto& [v, e] : m.factors()) {
      const auto idx = std::lower_bound(variables_.begin(), variables_.end(), v) -
                       variables_.begin();
      t.factors.emplace_back(static_cast<int>(idx), e);
    }
    terms_.push_back(std::move(t));
  }
}

double CompiledPolynomial::Evaluate(const std::vector<double>& values) const {
  double sum = 0;
  for (const Term& t : terms_) {
    double term = t.coefficient;
    for (const auto& [idx, e] : t.factors) {
      for (int i = 0; i < e; ++i) term *= values[idx];
    }
    sum += term;
  }
  return sum;
}

}  // namespace pscalar

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

#include "pscalar/private_scalar.h"

#include <cmath>
#include <functional>
#include <random>

#include "gtest/gtest.h"

namespace pscalar {
namespace {

const VarId kA{"A", ""};
const VarId kB{"B", ""};

PrivateScalar Priv(const VarId& v, double value, double lo, double hi) {
  return *PrivateScalar::MakePrivate(v, value, lo, hi);
}
PrivateScalar Bin(BinaryOp op, const PrivateScalar& a, const PrivateScalar& b) {
  return *ApplyBinary(op, a, b);
}
PrivateScalar Un(UnaryOp::Kind kind, const PrivateScalar& a, double c = 0,
                 int k = 0) {
  return *ApplyUnary(UnaryOp{kind, c, k}, a);
}

TEST(PrivateScalarTest, MakePrivateIsOneHot) {
  const PrivateScalar s = Priv(VarId{"7", ""}, 30, 0, 122);
  EXPECT_EQ(s.poly(), Polynomial::Var(VarId{"7", ""}));
  EXPECT_EQ(s.Value(), 30);
}

TEST(PrivateScalarTest, MakePrivateClips) {
  EXPECT_EQ(Priv(kA, 150, 0, 122).Value(), 122);
  EXPECT_EQ(Priv(kA, -5, 0, 122).Value(), 0);
}

TEST(PrivateScalarTest, MakePrivateRejectsBadRanges) {
  EXPECT_EQ(PrivateScalar::MakePrivate(kA, 30, 10, 5).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(PrivateScalar::MakePrivate(kA, NAN, 0, 1).ok());
  EXPECT_FALSE(PrivateScalar::MakePrivate(kA, 0, -INFINITY, 1).ok());
}

TEST(PrivateScalarTest, DegenerateRangeIsLegal) {
  EXPECT_EQ(Priv(kA, 9, 4, 4).Value(), 4);
}

TEST(PrivateScalarTest, FromPublicHasNoEntities) {
  EXPECT_EQ(PrivateScalar::FromPublic(0)->Value(), 0);
  EXPECT_TRUE(PrivateScalar::FromPublic(5)->Entities().empty());
  EXPECT_EQ(PrivateScalar::FromPublic(2)->Value(), 2);
  EXPECT_FALSE(PrivateScalar::FromPublic(INFINITY).ok());
}

TEST(PrivateScalarTest, BinaryExamples) {
  const auto sum = Bin(BinaryOp::kAdd, Priv(kA, 30, 0, 122), Priv(kB, 40, 0, 122));
  EXPECT_EQ(sum.poly().ToString(), "x[A] + x[B]");
  EXPECT_EQ(sum.Value(), 70);
  EXPECT_EQ(sum.Entities(), (std::set<VarId>{kA, kB}));

  const auto prod = Bin(BinaryOp::kMul, Priv(kA, 3, 0, 10), Priv(kB, 5, 0, 10));
  EXPECT_EQ(prod.poly().ToString(), "x[A]*x[B]");
  EXPECT_EQ(prod.Value(), 15);

  const auto a = Priv(kA, 30, 0, 122);
  const auto twice = Bin(BinaryOp::kAdd, a, a);
  EXPECT_EQ(twice.poly().ToString(), "2*x[A]");
  EXPECT_EQ(twice.Value(), 60);
}

TEST(PrivateScalarTest, CancelledEntityIsRetained) {
  const auto a = Priv(kA, 30, 0, 122);
  const auto zero = Bin(BinaryOp::kSub, a, a);
  EXPECT_TRUE(zero.poly().is_zero());
  EXPECT_EQ(zero.Entities(), std::set<VarId>{kA});
}

TEST(PrivateScalarTest, ConflictingMetadataIsAnError) {
  auto r = ApplyBinary(BinaryOp::kAdd, Priv(kA, 30, 0, 122),
                       Priv(kA, 30, 0, 100));
  EXPECT_EQ(r.status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(
      ApplyBinary(BinaryOp::kAdd, Priv(kA, 30, 0, 122), Priv(kA, 31, 0, 122))
          .ok());
}

TEST(PrivateScalarTest, UnaryExamples) {
  const auto a = Priv(kA, 30, 0, 122);
  EXPECT_EQ(Un(UnaryOp::Kind::kScale, a, 0.01).poly().ToString(), "0.01*x[A]");
  EXPECT_EQ(Un(UnaryOp::Kind::kPow, Priv(kA, 3, 0, 10), 0, 2).Value(), 9);
  EXPECT_EQ(Un(UnaryOp::Kind::kShift, a, 5).Value(), 35);
  EXPECT_EQ(Un(UnaryOp::Kind::kNeg, a).Value(), -30);
  EXPECT_FALSE(ApplyUnary({UnaryOp::Kind::kScale, NAN, 0}, a).ok());
  EXPECT_FALSE(ApplyUnary({UnaryOp::Kind::kPow, 0, -1}, a).ok());
}

TEST(PrivateScalarTest, PowRespectsTermCap) {
  PrivateScalar sum = *PrivateScalar::FromPublic(0);
  for (int i = 0; i < 30; ++i) {
    sum = Bin(BinaryOp::kAdd, sum, Priv(VarId{std::to_string(i), ""}, 1, 0, 1));
  }
  auto r = ApplyUnary({UnaryOp::Kind::kPow, 0, 4}, sum, PolynomialLimits{5000});
  EXPECT_EQ(r.status().code(), absl::StatusCode::kResourceExhausted);
}

TEST(PrivateScalarTest, DivisionRejectedWithReason) {
  auto r = ParseBinaryOp("div");
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.status().message().find("division"), std::string::npos);
  EXPECT_FALSE(ParseUnaryOp("sqrt").ok());
  EXPECT_EQ(*ParseBinaryOp("mul"), BinaryOp::kMul);
  EXPECT_EQ(*ParseUnaryOp("shift"), UnaryOp::Kind::kShift);
}

TEST(PrivateScalarTest, AttributesAreDistinctVariables) {
  const auto age = Priv(VarId{"p1", "age"}, 40, 0, 120);
  const auto weight = Priv(VarId{"p1", "weight"}, 70, 0, 300);
  const auto s = Bin(BinaryOp::kAdd, age, weight);
  EXPECT_EQ(s.Entities().size(), 2u);
  EXPECT_EQ(s.Value(), 110);
}

// Random expression trees evaluated two ways: through the library and over
// plain doubles with leaves clipped by hand.
class ExpressionTreeTest : public ::testing::Test {
 protected:
  struct Pair {
    PrivateScalar ps;
    double reference;
  };

  Pair RandomTree(int depth, const std::vector<double>& raw) {
    std::uniform_int_distribution<int> pick(0, 6);
    if (depth == 0) {
      std::uniform_int_distribution<int> leaf(0, static_cast<int>(raw.size()));
      const int i = leaf(rng_);
      if (i == static_cast<int>(raw.size())) {
        return {*PrivateScalar::FromPublic(1.5), 1.5};
      }
      const double clipped = std::min(std::max(raw[i], lo_), hi_);
      return {Priv(VarId{std::to_string(i), ""}, raw[i], lo_, hi_), clipped};
    }
    Pair a = RandomTree(depth - 1, raw);
    switch (pick(rng_)) {
      case 0: {
        Pair b = RandomTree(depth - 1, raw);
        return {Bin(BinaryOp::kAdd, a.ps, b.ps), a.reference + b.reference};
      }
      case 1: {
        Pair b = RandomTree(depth - 1, raw);
        return {Bin(BinaryOp::kSub, a.ps, b.ps), a.reference - b.reference};
      }
      case 2: {
        Pair b = RandomTree(depth - 1, raw);
        return {Bin(BinaryOp::kMul, a.ps, b.ps), a.reference * b.reference};
      }
      case 3:
        return {Un(UnaryOp::Kind::kNeg, a.ps), -a.reference};
      case 4:
        return {Un(UnaryOp::Kind::kScale, a.ps, 0.25), 0.25 * a.reference};
      case 5:
        return {Un(UnaryOp::Kind::kShift, a.ps, -2), a.reference - 2};
      default:
        return {Un(UnaryOp::Kind::kPow, a.ps, 0, 2), a.reference * a.reference};
    }
  }

  std::mt19937_64 rng_{7};
  double lo_ = -2, hi_ = 3;
};

TEST_F(ExpressionTreeTest, ValueMatchesTreeOverClippedLeaves) {
  std::uniform_real_distribution<double> u(-4, 5);
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<double> raw(4);
    for (double& x : raw) x = u(rng_);
    const Pair t = RandomTree(3, raw);
    EXPECT_NEAR(t.ps.Value(), t.reference,
                1e-12 * std::max(1.0, std::fabs(t.reference)) * 100);
    // Value lies inside the interval enclosure over the public box.
    const Interval enc = *IntervalEvaluate(t.ps.poly(), t.ps.PublicBox());
    const double slack = 1e-9 * std::max(1.0, enc.MaxAbs());
    EXPECT_GE(t.ps.Value(), enc.lo - slack);
    EXPECT_LE(t.ps.Value(), enc.hi + slack);
    // Each entity stores its raw value exactly once.
    for (const auto& [v, in] : t.ps.inputs()) {
      EXPECT_EQ(in.value, raw[std::stoi(v.entity)]);
    }
  }
}

}  // namespace
}  // namespace pscalar

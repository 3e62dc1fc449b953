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

#include <algorithm>
#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace pscalar {

absl::StatusOr<EntityInput> EntityInput::Make(double value, double floor,
                                              double ceiling) {
  if (!std::isfinite(value) || !std::isfinite(floor) ||
      !std::isfinite(ceiling)) {
    return absl::InvalidArgumentError(
        "value, floor and ceiling must all be finite");
  }
  if (floor > ceiling) {
    return absl::InvalidArgumentError(absl::StrCat(
        "floor ", floor, " is greater than ceiling ", ceiling));
  }
  return EntityInput{value, floor, ceiling};
}

double EntityInput::Clipped() const {
  return std::min(std::max(value, floor), ceiling);
}

absl::StatusOr<PrivateScalar> MakeScalar(Polynomial poly,
                                         std::map<VarId, EntityInput> inputs) {
  for (const VarId& v : poly.Variables()) {
    if (!inputs.contains(v)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "variable x[", VarIdToString(v), "] has no input metadata"));
    }
  }
  return PrivateScalar(std::move(poly), std::move(inputs));
}

absl::StatusOr<PrivateScalar> PrivateScalar::MakePrivate(const VarId& entity,
                                                         double value,
                                                         double floor,
                                                         double ceiling) {
  auto input = EntityInput::Make(value, floor, ceiling);
  if (!input.ok()) return input.status();
  return PrivateScalar(Polynomial::Var(entity), {{entity, *input}});
}

absl::StatusOr<PrivateScalar> PrivateScalar::FromPublic(double c) {
  auto poly = Polynomial::Constant(c);
  if (!poly.ok()) return poly.status();
  return PrivateScalar(*std::move(poly), {});
}

double PrivateScalar::Value() const {
  Assignment clipped;
  for (const auto& [v, in] : inputs_) clipped.emplace(v, in.Clipped());
  // Every polynomial variable has an input, so evaluation cannot fail.
  return *Evaluate(poly_, clipped);
}

std::set<VarId> PrivateScalar::Entities() const {
  std::set<VarId> out;
  for (const auto& [v, in] : inputs_) out.insert(v);
  return out;
}

Box PrivateScalar::PublicBox() const {
  Box box;
  for (const auto& [v, in] : inputs_) box.emplace(v, in.Range());
  return box;
}

absl::StatusOr<BinaryOp> ParseBinaryOp(std::string_view name) {
  if (name == "add") return BinaryOp::kAdd;
  if (name == "sub") return BinaryOp::kSub;
  if (name == "mul") return BinaryOp::kMul;
  if (name == "div") {
    return absl::InvalidArgumentError(
        "division is not supported: private scalars are closed under "
        "polynomial operations only (multiply by a public reciprocal instead)");
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unsupported binary operation '", std::string(name),
      "'; only add, sub and mul keep the query polynomial"));
}

absl::StatusOr<UnaryOp::Kind> ParseUnaryOp(std::string_view name) {
  if (name == "neg") return UnaryOp::Kind::kNeg;
  if (name == "scale") return UnaryOp::Kind::kScale;
  if (name == "shift") return UnaryOp::Kind::kShift;
  if (name == "pow") return UnaryOp::Kind::kPow;
  return absl::InvalidArgumentError(absl::StrCat(
      "unsupported unary operation '", std::string(name),
      "'; only neg, scale, shift and pow keep the query polynomial"));
}

std::string_view BinaryOpName(BinaryOp op) {
  switch (op) {
    case BinaryOp::kAdd:
      return "add";
    case BinaryOp::kSub:
      return "sub";
    case BinaryOp::kMul:
      return "mul";
  }
  return "?";
}

std::string_view UnaryOpName(UnaryOp::Kind kind) {
  switch (kind) {
    case UnaryOp::Kind::kNeg:
      return "neg";
    case UnaryOp::Kind::kScale:
      return "scale";
    case UnaryOp::Kind::kShift:
      return "shift";
    case UnaryOp::Kind::kPow:
      return "pow";
  }
  return "?";
}

absl::StatusOr<PrivateScalar> ApplyBinary(BinaryOp op, const PrivateScalar& a,
                                          const PrivateScalar& b,
                                          const PolynomialLimits& limits) {
  std::map<VarId, EntityInput> inputs = a.inputs();
  for (const auto& [v, in] : b.inputs()) {
    auto [it, inserted] = inputs.emplace(v, in);
    if (!inserted && !(it->second == in)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "conflicting inputs for variable x[", VarIdToString(v),
          "]: two different values or ranges share one identifier"));
    }
  }
  absl::StatusOr<Polynomial> poly;
  switch (op) {
    case BinaryOp::kAdd:
      poly = Add(a.poly(), b.poly(), limits);
      break;
    case BinaryOp::kSub:
      poly = Subtract(a.poly(), b.poly(), limits);
      break;
    case BinaryOp::kMul:
      poly = Multiply(a.poly(), b.poly(), limits);
      break;
  }
  if (!poly.ok()) return poly.status();
  return MakeScalar(*std::move(poly), std::move(inputs));
}

absl::StatusOr<PrivateScalar> ApplyUnary(const UnaryOp& op,
                                         const PrivateScalar& a,
                                         const PolynomialLimits& limits) {
  absl::StatusOr<Polynomial> poly;
  switch (op.kind) {
    case UnaryOp::Kind::kNeg:
      poly = Negate(a.poly());
      break;
    case UnaryOp::Kind::kScale:
      poly = Scale(a.poly(), op.constant);
      break;
    case UnaryOp::Kind::kShift: {
      auto c = Polynomial::Constant(op.constant);
      if (!c.ok()) return c.status();
      poly = Add(a.poly(), *c, limits);
      break;
    }
    case UnaryOp::Kind::kPow:
      poly = Pow(a.poly(), op.exponent, limits);
      break;
  }
  if (!poly.ok()) return poly.status();
  return MakeScalar(*std::move(poly), a.inputs());
}

}  // namespace pscalar

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

#ifndef PSCALAR_PRIVATE_SCALAR_H_
#define PSCALAR_PRIVATE_SCALAR_H_

#include <map>
#include <set>
#include <string_view>

#include "absl/status/statusor.h"
#include "pscalar/polynomial.h"

namespace pscalar {

// One entity's raw input plus its public clipping range.
struct EntityInput {
  double value = 0;
  double floor = 0;
  double ceiling = 0;

  static absl::StatusOr<EntityInput> Make(double value, double floor,
                                          double ceiling);
  double Clipped() const;
  Interval Range() const { return {floor, ceiling}; }

  friend bool operator==(const EntityInput&, const EntityInput&) = default;
};

// A query expressed as a polynomial over clipped per-entity indeterminates,
// together with the inputs it ranges over. Arithmetic manipulates the
// polynomial only; raw inputs are stored once per variable and combined
// numerically only by Value().
//
// `inputs` covers every variable of `poly` and may also hold variables whose
// terms cancelled out. Those still count as entities but have zero
// sensitivity.
class PrivateScalar {
 public:
  static absl::StatusOr<PrivateScalar> MakePrivate(const VarId& entity,
                                                   double value, double floor,
                                                   double ceiling);
  static absl::StatusOr<PrivateScalar> FromPublic(double c);

  const Polynomial& poly() const { return poly_; }
  const std::map<VarId, EntityInput>& inputs() const { return inputs_; }

  // Owner-side only: the polynomial evaluated at the clipped inputs.
  double Value() const;
  std::set<VarId> Entities() const;
  // The public [floor, ceiling] box of every input.
  Box PublicBox() const;

 private:
  friend absl::StatusOr<PrivateScalar> MakeScalar(
      Polynomial poly, std::map<VarId, EntityInput> inputs);
  PrivateScalar(Polynomial poly, std::map<VarId, EntityInput> inputs)
      : poly_(std::move(poly)), inputs_(std::move(inputs)) {}

  Polynomial poly_;
  std::map<VarId, EntityInput> inputs_;
};

// Assembles a scalar from parts, checking that every polynomial variable has
// an input entry.
absl::StatusOr<PrivateScalar> MakeScalar(Polynomial poly,
                                         std::map<VarId, EntityInput> inputs);

enum class BinaryOp { kAdd, kSub, kMul };

struct UnaryOp {
  enum class Kind { kNeg, kScale, kShift, kPow };
  Kind kind = Kind::kNeg;
  double constant = 0;  // kScale factor or kShift offset.
  int exponent = 0;     // kPow.
};

// Accepts "add", "sub", "mul". Division and other non-polynomial operators are
// rejected with an explanation.
absl::StatusOr<BinaryOp> ParseBinaryOp(std::string_view name);
absl::StatusOr<UnaryOp::Kind> ParseUnaryOp(std::string_view name);
std::string_view BinaryOpName(BinaryOp op);
std::string_view UnaryOpName(UnaryOp::Kind kind);

// Fails when an entity present in both operands carries different inputs.
absl::StatusOr<PrivateScalar> ApplyBinary(BinaryOp op, const PrivateScalar& a,
                                          const PrivateScalar& b,
                                          const PolynomialLimits& limits = {});
absl::StatusOr<PrivateScalar> ApplyUnary(const UnaryOp& op,
                                         const PrivateScalar& a,
                                         const PolynomialLimits& limits = {});

}  // namespace pscalar

#endif  // PSCALAR_PRIVATE_SCALAR_H_

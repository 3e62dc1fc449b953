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

// Upper bounds on the per-entity Lipschitz constant of a query polynomial,
// i.e. sup over the public box of |dg/dx_i|. Bounds depend only on public
// data (polynomial structure, floors, ceilings), never on raw input values.

#ifndef PSCALAR_SENSITIVITY_H_
#define PSCALAR_SENSITIVITY_H_

#include <optional>
#include <string_view>

#include "absl/status/statusor.h"
#include "pscalar/polynomial.h"
#include "pscalar/private_scalar.h"

namespace pscalar {

enum class LipschitzStrategy {
  // Degree <= 1: |coefficient of x_i|.
  kFirstDegree,
  // Non-negative coefficients over a non-negative box: the partial derivative
  // evaluated with every variable at its ceiling.
  kMonotoneCeiling,
  // Multilinear partial derivative: max |dg/dx_i| over the box corners.
  kVertexExact,
  // Interval enclosure of the partial derivative; sound but possibly loose.
  kIntervalSound,
};

std::string_view StrategyName(LipschitzStrategy s);
absl::StatusOr<LipschitzStrategy> ParseStrategy(std::string_view name);

struct LipschitzBound {
  VarId entity;
  double bound = 0;
  LipschitzStrategy strategy = LipschitzStrategy::kIntervalSound;
  // True when `bound` equals the supremum rather than just dominating it.
  bool exact = false;
};

struct SensitivityOptions {
  // Vertex enumeration is skipped when the partial derivative has more
  // variables than this (2^cap corner evaluations).
  int vertex_cap = 20;
  // Forces a single strategy; fails if it does not apply.
  std::optional<LipschitzStrategy> strategy;
};

// Each returns std::nullopt when its precondition does not hold.
std::optional<LipschitzBound> FirstDegreeBound(const Polynomial& g,
                                               const VarId& entity);
absl::StatusOr<std::optional<LipschitzBound>> MonotoneCeilingBound(
    const Polynomial& g, const Box& box, const VarId& entity);
absl::StatusOr<std::optional<LipschitzBound>> VertexExactBound(
    const Polynomial& g, const Box& box, const VarId& entity, int vertex_cap);
absl::StatusOr<LipschitzBound> IntervalSoundBound(const Polynomial& g,
                                                  const Box& box,
                                                  const VarId& entity);

// Tries first-degree, monotone-ceiling, vertex-exact and interval-sound in
// that order and returns the first that applies. `entity` must be in `box`.
absl::StatusOr<LipschitzBound> LipschitzBoundOver(
    const Polynomial& g, const Box& box, const VarId& entity,
    const SensitivityOptions& options = {});

// Bound over the scalar's public box.
absl::StatusOr<LipschitzBound> ComputeLipschitzBound(
    const PrivateScalar& a, const VarId& entity,
    const SensitivityOptions& options = {});

// The public box with `entity`'s own range widened to include 0, the value
// that stands in for a removed entity. Bounds over this box control
// |g(x) - g(x with x_entity = 0)| <= L * |x_entity|.
Box RemovalBox(const PrivateScalar& a, const VarId& entity);

}  // namespace pscalar

#endif  // PSCALAR_SENSITIVITY_H_

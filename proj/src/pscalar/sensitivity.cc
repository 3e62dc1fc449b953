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

#include "pscalar/sensitivity.h"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace pscalar {
namespace {

absl::Status CheckCovered(const Polynomial& g, const Box& box,
                          const VarId& entity) {
  if (!box.contains(entity)) {
    return absl::NotFoundError(absl::StrCat(
        "entity x[", VarIdToString(entity), "] does not contribute to this scalar"));
  }
  for (const VarId& v : g.Variables()) {
    if (!box.contains(v)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "no public range for variable x[", VarIdToString(v), "]"));
    }
  }
  return absl::OkStatus();
}

}  // namespace

std::string_view StrategyName(LipschitzStrategy s) {
  switch (s) {
    case LipschitzStrategy::kFirstDegree:
      return "first_degree";
    case LipschitzStrategy::kMonotoneCeiling:
      return "monotone_ceiling";
    case LipschitzStrategy::kVertexExact:
      return "vertex_exact";
    case LipschitzStrategy::kIntervalSound:
      return "interval_sound";
  }
  return "?";
}

absl::StatusOr<LipschitzStrategy> ParseStrategy(std::string_view name) {
  for (auto s : {LipschitzStrategy::kFirstDegree,
                 LipschitzStrategy::kMonotoneCeiling,
                 LipschitzStrategy::kVertexExact,
                 LipschitzStrategy::kIntervalSound}) {
    if (StrategyName(s) == name) return s;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown Lipschitz strategy '", std::string(name), "'"));
}

std::optional<LipschitzBound> FirstDegreeBound(const Polynomial& g,
                                               const VarId& entity) {
  if (g.TotalDegree() > 1) return std::nullopt;
  return LipschitzBound{entity, std::fabs(g.CoefficientOf(Monomial::Of(entity))),
                        LipschitzStrategy::kFirstDegree, /*exact=*/true};
}

absl::StatusOr<std::optional<LipschitzBound>> MonotoneCeilingBound(
    const Polynomial& g, const Box& box, const VarId& entity) {
  for (const auto& [m, c] : g.terms()) {
    if (c < 0) return std::nullopt;
  }
  Assignment ceilings;
  for (const VarId& v : g.Variables()) {
    const Interval& range = box.at(v);
    if (range.lo < 0) return std::nullopt;
    ceilings.emplace(v, range.hi);
  }
  auto d = Partial(g, entity);
  if (!d.ok()) return d.status();
  auto at_ceiling = Evaluate(*d, ceilings);
  if (!at_ceiling.ok()) return at_ceiling.status();
  return LipschitzBound{entity, std::fabs(*at_ceiling),
                        LipschitzStrategy::kMonotoneCeiling, /*exact=*/true};
}

absl::StatusOr<std::optional<LipschitzBound>> VertexExactBound(
    const Polynomial& g, const Box& box, const VarId& entity, int vertex_cap) {
  auto d = Partial(g, entity);
  if (!d.ok()) return d.status();
  if (!d->IsMultilinear()) return std::nullopt;
  const CompiledPolynomial compiled(*d);
  const auto& vars = compiled.variables();
  if (static_cast<int>(vars.size()) > vertex_cap) return std::nullopt;

  std::vector<Interval> ranges;
  ranges.reserve(vars.size());
  for (const VarId& v : vars) ranges.push_back(box.at(v));
  std::vector<double> corner(vars.size());
  double best = 0;
  const std::uint64_t corners = std::uint64_t{1} << vars.size();
  for (std::uint64_t mask = 0; mask < corners; ++mask) {
    for (std::size_t i = 0; i < vars.size(); ++i) {
      corner[i] = (mask >> i) & 1 ? ranges[i].hi : ranges[i].lo;
    }
    best = std::max(best, std::fabs(compiled.Evaluate(corner)));
  }
  return LipschitzBound{entity, best, LipschitzStrategy::kVertexExact,
                        /*exact=*/true};
}

absl::StatusOr<LipschitzBound> IntervalSoundBound(const Polynomial& g,
                                                  const Box& box,
                                                  const VarId& entity) {
  auto d = Partial(g, entity);
  if (!d.ok()) return d.status();
  auto range = IntervalEvaluate(*d, box);
  if (!range.ok()) return range.status();
  return LipschitzBound{entity, range->MaxAbs(),
                        LipschitzStrategy::kIntervalSound, /*exact=*/false};
}

absl::StatusOr<LipschitzBound> LipschitzBoundOver(
    const Polynomial& g, const Box& box, const VarId& entity,
    const SensitivityOptions& options) {
  if (auto s = CheckCovered(g, box, entity); !s.ok()) return s;

  auto try_strategy = [&](LipschitzStrategy s)
      -> absl::StatusOr<std::optional<LipschitzBound>> {
    switch (s) {
      case LipschitzStrategy::kFirstDegree:
        return FirstDegreeBound(g, entity);
      case LipschitzStrategy::kMonotoneCeiling:
        return MonotoneCeilingBound(g, box, entity);
      case LipschitzStrategy::kVertexExact:
        return VertexExactBound(g, box, entity, options.vertex_cap);
      case LipschitzStrategy::kIntervalSound: {
        auto b = IntervalSoundBound(g, box, entity);
        if (!b.ok()) return b.status();
        return std::optional<LipschitzBound>(*b);
      }
    }
    return absl::InternalError("unhandled strategy");
  };

  if (options.strategy.has_value()) {
    auto b = try_strategy(*options.strategy);
    if (!b.ok()) return b.status();
    if (!b->has_value()) {
      return absl::FailedPreconditionError(
          absl::StrCat("strategy ", std::string(StrategyName(*options.strategy)),
                       " does not apply to this polynomial"));
    }
    return **b;
  }
  for (auto s : {LipschitzStrategy::kFirstDegree,
                 LipschitzStrategy::kMonotoneCeiling,
                 LipschitzStrategy::kVertexExact,
                 LipschitzStrategy::kIntervalSound}) {
    auto b = try_strategy(s);
    if (!b.ok()) return b.status();
    if (b->has_value()) return **b;
  }
  return absl::InternalError("interval strategy always applies");
}

absl::StatusOr<LipschitzBound> ComputeLipschitzBound(
    const PrivateScalar& a, const VarId& entity,
    const SensitivityOptions& options) {
  return LipschitzBoundOver(a.poly(), a.PublicBox(), entity, options);
}

Box RemovalBox(const PrivateScalar& a, const VarId& entity) {
  Box box = a.PublicBox();
  if (auto it = box.find(entity); it != box.end()) {
    it->second.lo = std::min(it->second.lo, 0.0);
    it->second.hi = std::max(it->second.hi, 0.0);
  }
  return box;
}

}  // namespace pscalar

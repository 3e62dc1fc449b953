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

#include "pscalar/accountant.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"

namespace pscalar {
namespace {

constexpr double kMinSigma = 1e-6;
constexpr double kMaxSigma = 1e9;
constexpr double kSigmaRelativePrecision = 1e-7;

// alpha - 1 spaced logarithmically from 1e-4 to 1e6 - 1.
constexpr int kAlphaGridPoints = 4001;

struct AlphaGrid {
  std::vector<double> alpha;
  std::vector<double> log1m_inv;  // ln(1 - 1/alpha)
  std::vector<double> log_alpha;
  std::vector<double> inv_am1;  // 1 / (alpha - 1)

  AlphaGrid() {
    const double lo = std::log10(1e-4);
    const double hi = std::log10(1e6 - 1);
    for (int i = 0; i < kAlphaGridPoints; ++i) {
      const double t = lo + (hi - lo) * i / (kAlphaGridPoints - 1);
      const double am1 = std::pow(10.0, t);
      const double a = 1 + am1;
      alpha.push_back(a);
      log1m_inv.push_back(std::log1p(-1 / a));
      log_alpha.push_back(std::log(a));
      inv_am1.push_back(1 / am1);
    }
  }
};

const AlphaGrid& Grid() {
  static const AlphaGrid* grid = new AlphaGrid();
  return *grid;
}

double ConvertUnchecked(double rho, double delta) {
  const AlphaGrid& g = Grid();
  const double log_inv_delta = -std::log(delta);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kAlphaGridPoints; ++i) {
    const double eps = rho * g.alpha[i] + g.log1m_inv[i] +
                       (log_inv_delta - g.log_alpha[i]) * g.inv_am1[i];
    best = std::min(best, eps);
  }
  return std::max(0.0, best);
}

std::map<std::string, double, std::less<>> ProposedByEntity(
    std::span<const RdpSpend> spends) {
  std::map<std::string, double, std::less<>> out;
  for (const RdpSpend& s : spends) out[s.var.entity] += s.rho;
  return out;
}

}  // namespace

absl::StatusOr<BudgetPolicy> BudgetPolicy::Make(double eps_cap, double delta) {
  if (!(eps_cap > 0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("eps cap must be positive, got ", eps_cap));
  }
  if (!(delta > 0 && delta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  return BudgetPolicy{eps_cap, delta};
}

absl::StatusOr<std::vector<SpendBasis>> ComputeSpendBasis(
    const PrivateScalar& a, const SensitivityOptions& options) {
  std::vector<SpendBasis> basis;
  std::map<std::string, double, std::less<>> shift_by_entity;
  for (const auto& [var, input] : a.inputs()) {
    auto bound = LipschitzBoundOver(a.poly(), RemovalBox(a, var), var, options);
    if (!bound.ok()) return bound.status();
    SpendBasis b{var, bound->bound, input.Clipped(), 0, bound->strategy};
    shift_by_entity[var.entity] += b.lipschitz * std::fabs(b.clipped_input);
    basis.push_back(std::move(b));
  }
  for (SpendBasis& b : basis) b.entity_shift = shift_by_entity[b.var.entity];
  return basis;
}

std::vector<RdpSpend> SpendsAtSigma(std::span<const SpendBasis> basis,
                                    double sigma) {
  std::vector<RdpSpend> out;
  out.reserve(basis.size());
  const double denom = 2 * sigma * sigma;
  for (const SpendBasis& b : basis) {
    const double own = b.lipschitz * std::fabs(b.clipped_input);
    out.push_back({b.var, b.lipschitz, b.clipped_input,
                   own * b.entity_shift / denom, b.strategy});
  }
  return out;
}

absl::StatusOr<std::vector<RdpSpend>> SpendForPublish(
    const PrivateScalar& a, double sigma, const SensitivityOptions& options) {
  if (!(sigma > 0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive and finite, got ", sigma));
  }
  auto basis = ComputeSpendBasis(a, options);
  if (!basis.ok()) return basis.status();
  return SpendsAtSigma(*basis, sigma);
}

absl::StatusOr<double> RdpToDp(double rho, double delta) {
  if (!(delta > 0 && delta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  if (!(rho >= 0) || !std::isfinite(rho)) {
    return absl::InvalidArgumentError(
        absl::StrCat("rho must be finite and non-negative, got ", rho));
  }
  return ConvertUnchecked(rho, delta);
}

// ---------------------------------------------------------------------------
// PrivacyLedger

double PrivacyLedger::Cumulative(std::string_view entity) const {
  auto it = cumulative_.find(entity);
  return it == cumulative_.end() ? 0.0 : it->second;
}

std::vector<LedgerEntry> PrivacyLedger::EntriesFor(
    std::span<const RdpSpend> spends, std::uint64_t publish_id) {
  std::vector<LedgerEntry> out;
  out.reserve(spends.size());
  for (const RdpSpend& s : spends) {
    out.push_back({publish_id, s.var.entity, s.rho});
  }
  return out;
}

void PrivacyLedger::Record(std::span<const RdpSpend> spends,
                           std::uint64_t publish_id) {
  for (const LedgerEntry& e : EntriesFor(spends, publish_id)) Apply(e);
}

void PrivacyLedger::Apply(const LedgerEntry& entry) {
  cumulative_[entry.entity] += entry.rho;
  history_.push_back(entry);
}

PrivacyLedger PrivacyLedger::ForkSimulated() const {
  PrivacyLedger copy = *this;
  copy.mode_ = LedgerMode::kSimulated;
  return copy;
}

std::string PrivacyLedger::SerializeCumulative() const {
  std::string out;
  for (const auto& [entity, rho] : cumulative_) {
    absl::StrAppendFormat(&out, "%s\t%.17g\n", entity, rho);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Filter and budget queries

FilterDecision FilterCheck(const PrivacyLedger& ledger,
                           std::span<const RdpSpend> spends,
                           const BudgetPolicy& policy) {
  FilterDecision decision;
  for (const auto& [entity, rho] : ProposedByEntity(spends)) {
    const double eps =
        ConvertUnchecked(ledger.Cumulative(entity) + rho, policy.delta);
    if (!(eps <= policy.eps_cap)) decision.violations.push_back({entity, eps});
  }
  return decision;
}

double RemainingBudget(const PrivacyLedger& ledger, std::string_view entity,
                       const BudgetPolicy& policy) {
  const double spent = ConvertUnchecked(ledger.Cumulative(entity), policy.delta);
  return std::max(0.0, policy.eps_cap - spent);
}

absl::StatusOr<double> CalibrateSigma(const PrivateScalar& a,
                                      const PrivacyLedger& ledger,
                                      const BudgetPolicy& policy,
                                      const SensitivityOptions& options) {
  auto basis = ComputeSpendBasis(a, options);
  if (!basis.ok()) return basis.status();

  std::vector<std::string> blocked;
  bool any_cost = false;
  for (const SpendBasis& b : *basis) {
    if (b.lipschitz * std::fabs(b.clipped_input) == 0) continue;
    any_cost = true;
    if (RemainingBudget(ledger, b.var.entity, policy) <= 0) {
      blocked.push_back(b.var.entity);
    }
  }
  if (!blocked.empty()) {
    std::sort(blocked.begin(), blocked.end());
    blocked.erase(std::unique(blocked.begin(), blocked.end()), blocked.end());
    return absl::FailedPreconditionError(
        absl::StrCat("no budget remains for entities: ",
                     absl::StrJoin(blocked, ", ")));
  }
  if (!any_cost) return kMinSigma;

  auto passes = [&](double sigma) {
    const std::vector<RdpSpend> spends = SpendsAtSigma(*basis, sigma);
    return FilterCheck(ledger, spends, policy).pass();
  };
  if (passes(kMinSigma)) return kMinSigma;
  if (!passes(kMaxSigma)) {
    const std::vector<RdpSpend> spends = SpendsAtSigma(*basis, kMaxSigma);
    std::vector<std::string> names;
    for (const Violation& v : FilterCheck(ledger, spends, policy).violations) {
      names.push_back(v.entity);
    }
    return absl::FailedPreconditionError(
        absl::StrCat("no sigma up to 1e9 fits the remaining budget of: ",
                     absl::StrJoin(names, ", ")));
  }
  // Invariant: passes(hi) && !passes(lo). Bisect in log space.
  double lo = kMinSigma;
  double hi = kMaxSigma;
  while (hi / lo > 1 + kSigmaRelativePrecision) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    (passes(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace pscalar

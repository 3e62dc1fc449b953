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

// Individual Renyi-DP accounting for Gaussian releases of private scalars.
//
// Releasing g(x) + N(0, sigma^2) costs entity i the RDP curve
// eps_i(alpha) = alpha * L_i^2 * x_i^2 / (2 sigma^2), where L_i bounds
// |dg/dx_i| and x_i is the clipped input. The curve is linear in alpha, so a
// ledger only needs the coefficient rho_i; composition across releases adds
// rho. Budgets are enforced on the (eps, delta) value obtained by converting
// the cumulative curve.

#ifndef PSCALAR_ACCOUNTANT_H_
#define PSCALAR_ACCOUNTANT_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "pscalar/private_scalar.h"
#include "pscalar/sensitivity.h"

namespace pscalar {

// Cost of one release to one variable: eps(alpha) = rho * alpha.
struct RdpSpend {
  VarId var;
  double lipschitz = 0;      // L over the removal box.
  double clipped_input = 0;  // owner-side only.
  double rho = 0;
  LipschitzStrategy strategy = LipschitzStrategy::kFirstDegree;
};

struct BudgetPolicy {
  double eps_cap = 1;
  double delta = 1e-6;

  // eps_cap > 0 (infinity allowed, meaning unlimited) and 0 < delta < 1.
  static absl::StatusOr<BudgetPolicy> Make(double eps_cap, double delta);
};

// Per-variable sensitivity data of a scalar, independent of sigma.
struct SpendBasis {
  VarId var;
  double lipschitz = 0;
  double clipped_input = 0;
  // Sum of lipschitz * |clipped_input| over all variables of the same entity.
  double entity_shift = 0;
  LipschitzStrategy strategy = LipschitzStrategy::kFirstDegree;
};

absl::StatusOr<std::vector<SpendBasis>> ComputeSpendBasis(
    const PrivateScalar& a, const SensitivityOptions& options = {});
std::vector<RdpSpend> SpendsAtSigma(std::span<const SpendBasis> basis,
                                    double sigma);

// One spend per variable of `a`. Variables sharing an entity split the joint
// cost (sum_j L_j |x_j|)^2 / (2 sigma^2) in proportion to L_j |x_j|; a lone
// variable gets L^2 x^2 / (2 sigma^2).
absl::StatusOr<std::vector<RdpSpend>> SpendForPublish(
    const PrivateScalar& a, double sigma,
    const SensitivityOptions& options = {});

// Smallest (eps, delta)-DP epsilon implied by the RDP curve rho * alpha, over
// a fixed log-spaced grid of alpha in [1 + 1e-4, 1e6], using
//   eps(alpha) = rho*alpha + ln(1 - 1/alpha) + (ln(1/delta) - ln(alpha))/(alpha - 1)
// clamped below at 0. Never exceeds rho + 2 sqrt(rho ln(1/delta)) + 1e-6.
absl::StatusOr<double> RdpToDp(double rho, double delta);

enum class LedgerMode { kReal, kSimulated };

struct LedgerEntry {
  std::uint64_t publish_id = 0;
  std::string entity;
  double rho = 0;

  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

// Privacy odometer: cumulative rho per entity identity plus the append-only
// history it was built from.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(LedgerMode mode = LedgerMode::kReal) : mode_(mode) {}

  LedgerMode mode() const { return mode_; }
  const std::map<std::string, double, std::less<>>& cumulative() const {
    return cumulative_;
  }
  const std::vector<LedgerEntry>& history() const { return history_; }
  double Cumulative(std::string_view entity) const;

  static std::vector<LedgerEntry> EntriesFor(std::span<const RdpSpend> spends,
                                             std::uint64_t publish_id);
  void Record(std::span<const RdpSpend> spends, std::uint64_t publish_id);
  void Apply(const LedgerEntry& entry);

  // Independent deep copy in simulated mode.
  PrivacyLedger ForkSimulated() const;

  // "entity\trho\n" lines with %.17g, sorted by entity.
  std::string SerializeCumulative() const;

 private:
  LedgerMode mode_;
  std::map<std::string, double, std::less<>> cumulative_;
  std::vector<LedgerEntry> history_;
};

struct Violation {
  std::string entity;
  double projected_eps = 0;
};

struct FilterDecision {
  std::vector<Violation> violations;
  bool pass() const { return violations.empty(); }
};

// Side-effect free: would recording `spends` keep every affected entity's
// converted epsilon within the cap?
FilterDecision FilterCheck(const PrivacyLedger& ledger,
                           std::span<const RdpSpend> spends,
                           const BudgetPolicy& policy);

// max(0, eps_cap - converted cumulative epsilon).
double RemainingBudget(const PrivacyLedger& ledger, std::string_view entity,
                       const BudgetPolicy& policy);

// Smallest sigma in [1e-6, 1e9] (relative precision 1e-7) at which publishing
// `a` passes the filter.
absl::StatusOr<double> CalibrateSigma(const PrivateScalar& a,
                                      const PrivacyLedger& ledger,
                                      const BudgetPolicy& policy,
                                      const SensitivityOptions& options = {});

}  // namespace pscalar

#endif  // PSCALAR_ACCOUNTANT_H_

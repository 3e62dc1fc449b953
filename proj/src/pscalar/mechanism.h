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

#ifndef PSCALAR_MECHANISM_H_
#define PSCALAR_MECHANISM_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "pscalar/accountant.h"
#include "pscalar/private_scalar.h"

namespace pscalar {

// Gaussian deviates from a 64-bit Mersenne Twister (std::mt19937_64) via the
// trigonometric Box-Muller transform:
//
//   u1 = (w1 >> 11 + 1) * 2^-53 in (0, 1]     u2 = (w2 >> 11) * 2^-53 in [0, 1)
//   r = sqrt(-2 ln u1)   z0 = r cos(2 pi u2)   z1 = r sin(2 pi u2)
//
// z0 is returned first and z1 on the following call. Equal seeds give equal
// streams. Floating-point noise attacks are not mitigated.
class GaussianNoiseSource {
 public:
  explicit GaussianNoiseSource(std::uint64_t seed) : engine_(seed) {}
  static GaussianNoiseSource FromEntropy();

  // One draw from N(0, sigma^2); sigma must be positive and finite.
  absl::StatusOr<double> Sample(double sigma);

 private:
  double StandardNormal();

  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct PublishReceipt {
  std::uint64_t publish_id = 0;
  // Absent for simulated publishes, which release nothing.
  std::optional<double> noisy_value;
  double sigma = 0;
  std::vector<RdpSpend> spends;
  std::int64_t timestamp_ms = 0;
};

struct PublishRejection {
  std::vector<Violation> violations;
};

using PublishOutcome = std::variant<PublishReceipt, PublishRejection>;

struct PublishOptions {
  SensitivityOptions sensitivity;
  // Runs after the filter passes and before the ledger is updated. A failure
  // aborts the publish with nothing recorded or released.
  std::function<absl::Status(const std::vector<LedgerEntry>&)> persist;
  std::function<std::int64_t()> clock;
  // When false the filter and ledger update run but no value is computed or
  // noise drawn.
  bool release_value = true;
};

// Filter-check, record and release as one step. The caller serializes access
// to `ledger`. On rejection nothing is recorded.
absl::StatusOr<PublishOutcome> Publish(const PrivateScalar& a, double sigma,
                                       PrivacyLedger& ledger,
                                       const BudgetPolicy& policy,
                                       GaussianNoiseSource& noise,
                                       std::uint64_t publish_id,
                                       const PublishOptions& options = {});

std::int64_t UnixMillisNow();

}  // namespace pscalar

#endif  // PSCALAR_MECHANISM_H_

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

#include "pscalar/mechanism.h"

#include <chrono>
#include <cmath>
#include <numbers>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace pscalar {

GaussianNoiseSource GaussianNoiseSource::FromEntropy() {
  std::random_device rd;
  const std::uint64_t seed =
      (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
  return GaussianNoiseSource(seed);
}

double GaussianNoiseSource::StandardNormal() {
  if (spare_.has_value()) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = static_cast<double>((engine_() >> 11) + 1) * kScale;
  const double u2 = static_cast<double>(engine_() >> 11) * kScale;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

absl::StatusOr<double> GaussianNoiseSource::Sample(double sigma) {
  if (!(sigma > 0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive and finite, got ", sigma));
  }
  return sigma * StandardNormal();
}

std::int64_t UnixMillisNow() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

absl::StatusOr<PublishOutcome> Publish(const PrivateScalar& a, double sigma,
                                       PrivacyLedger& ledger,
                                       const BudgetPolicy& policy,
                                       GaussianNoiseSource& noise,
                                       std::uint64_t publish_id,
                                       const PublishOptions& options) {
  auto spends = SpendForPublish(a, sigma, options.sensitivity);
  if (!spends.ok()) return spends.status();

  FilterDecision decision = FilterCheck(ledger, *spends, policy);
  if (!decision.pass()) {
    return PublishRejection{std::move(decision.violations)};
  }

  const std::vector<LedgerEntry> entries =
      PrivacyLedger::EntriesFor(*spends, publish_id);
  if (options.persist) {
    if (auto s = options.persist(entries); !s.ok()) return s;
  }
  for (const LedgerEntry& e : entries) ledger.Apply(e);

  PublishReceipt receipt;
  receipt.publish_id = publish_id;
  receipt.sigma = sigma;
  receipt.spends = *std::move(spends);
  receipt.timestamp_ms = options.clock ? options.clock() : UnixMillisNow();
  if (options.release_value) {
    auto xi = noise.Sample(sigma);
    if (!xi.ok()) return xi.status();
    receipt.noisy_value = a.Value() + *xi;
  }
  return receipt;
}

}  // namespace pscalar

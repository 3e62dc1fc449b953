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

#ifndef PSCALAR_CLIENT_H_
#define PSCALAR_CLIENT_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "pscalar/line_channel.h"
#include "pscalar/wire.h"

namespace pscalar {

class ClientSession;

// A reference to a scalar held by the node. Carries public shape only.
struct RemoteScalar {
  std::uint64_t handle = 0;
  int degree = 0;
  std::uint64_t terms = 0;
  std::uint64_t entities = 0;
  // Set for dataset roots.
  std::string entity;
  const ClientSession* session = nullptr;
};

using Operand = std::variant<RemoteScalar, double>;

struct PublishResult {
  bool accepted = false;
  double value = 0;   // accepted only
  double sigma = 0;
  Json spends;        // accepted only
  std::vector<std::string> rejected_entities;
  std::vector<double> projected_eps;
};

struct SimulateResult {
  bool pass = false;
  double sigma = 0;
  Json spends;
  std::vector<std::string> rejected_entities;
  std::vector<double> projected_eps;
};

// One authenticated connection. Not thread-safe.
class ClientSession {
 public:
  static absl::StatusOr<std::unique_ptr<ClientSession>> Connect(
      const std::string& host, int port, const std::string& api_key);

  const std::string& user() const { return user_; }
  const Json& datasets() const { return datasets_; }

  // Sends `request` with a fresh id. Returns the response when it has
  // "ok": true, otherwise a status built from its error object.
  absl::StatusOr<Json> Call(Json request);
  // Like Call but returns error responses too; transport failures only as
  // status.
  absl::StatusOr<Json> RawCall(Json request);

  absl::StatusOr<std::vector<RemoteScalar>> Roots(const std::string& dataset,
                                                  const std::string& column = "");
  absl::StatusOr<RemoteScalar> Binary(const std::string& kind, const Operand& a,
                                      const Operand& b);
  absl::StatusOr<RemoteScalar> Unary(const std::string& kind,
                                     const RemoteScalar& a, double c = 0,
                                     int k = 0);
  // An absent sigma asks the node to calibrate.
  absl::StatusOr<PublishResult> Publish(const RemoteScalar& a,
                                        std::optional<double> sigma);
  absl::StatusOr<SimulateResult> Simulate(const RemoteScalar& a,
                                          std::optional<double> sigma);
  absl::StatusOr<double> Calibrate(const RemoteScalar& a, bool simulated = false);
  // entity: an entity id, "min", or empty for every entity.
  absl::StatusOr<Json> RemainingBudget(const std::string& entity,
                                       bool simulated = false);
  absl::Status ForkSim();
  absl::Status Drop(const RemoteScalar& a);

 private:
  explicit ClientSession(std::unique_ptr<LineChannel> channel)
      : channel_(std::move(channel)) {}
  absl::StatusOr<Json> OperandJson(const Operand& op) const;
  RemoteScalar FromResponse(const Json& r) const;

  std::unique_ptr<LineChannel> channel_;
  std::int64_t next_id_ = 1;
  std::string user_;
  Json datasets_;
};

// Status with the wire error code and detail.
absl::Status StatusFromError(const Json& response);

}  // namespace pscalar

#endif  // PSCALAR_CLIENT_H_

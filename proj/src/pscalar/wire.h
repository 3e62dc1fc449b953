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

// JSON encodings shared by the node, the client and the audit log.
//
// Requests are {"id": int, "op": string, ...}. Responses echo the id and carry
// "ok": true plus op-specific fields, or "ok": false with
// {"error": {"code", "detail"}} and, for budget refusals, a "rejection"
// object {"entities": [...], "projected_eps": [...]}.

#ifndef PSCALAR_WIRE_H_
#define PSCALAR_WIRE_H_

#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "json.hpp"
#include "pscalar/mechanism.h"
#include "pscalar/private_scalar.h"

namespace pscalar {

using Json = nlohmann::json;

// Error codes on the wire.
inline constexpr std::string_view kUnknownHandle = "unknown_handle";
inline constexpr std::string_view kForbidden = "forbidden";
inline constexpr std::string_view kBudgetExceeded = "budget_exceeded";
inline constexpr std::string_view kInvalidArgument = "invalid_argument";
inline constexpr std::string_view kUnknownOp = "unknown_op";
inline constexpr std::string_view kUnauthenticated = "unauthenticated";
inline constexpr std::string_view kResourceExhausted = "resource_exhausted";
inline constexpr std::string_view kNotFound = "not_found";
inline constexpr std::string_view kFailedPrecondition = "failed_precondition";
inline constexpr std::string_view kInternal = "internal";

std::string_view WireCodeFor(const absl::Status& status);
// Inverse of WireCodeFor for the codes it produces; unknown codes map to
// kUnknown.
absl::StatusCode StatusCodeFor(std::string_view wire_code);

Json ErrorResponse(const Json& id, std::string_view code, std::string_view detail);
Json StatusResponse(const Json& id, const absl::Status& status);
Json RejectionResponse(const Json& id, const PublishRejection& rejection);

// Public shape of a scalar: degree, term and entity counts and the polynomial
// text. Never includes input values.
Json ScalarSummary(const PrivateScalar& s);

// Spends as [{entity, attribute, lipschitz, rho, strategy}]. Clipped inputs
// are included only when `owner_view` is set.
Json SpendsToJson(const std::vector<RdpSpend>& spends, bool owner_view);
Json ReceiptToJson(const PublishReceipt& receipt, bool owner_view);

// Structural scan for data that must never reach a scientist: a "value" key in
// any object that also has "floor" or "ceiling", or a "clipped_input" key
// anywhere. Returns the JSON path of the first hit.
absl::Status ScanForConfinedValues(const Json& message);

// Status <-> std::string_view bridging for the system absl, whose string_view
// is its own type.
inline std::string Str(absl::string_view s) { return std::string(s); }

}  // namespace pscalar

#endif  // PSCALAR_WIRE_H_

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

#include "pscalar/wire.h"

#include "absl/strings/str_cat.h"

namespace pscalar {

std::string_view WireCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
      return kInvalidArgument;
    case absl::StatusCode::kNotFound:
      return kNotFound;
    case absl::StatusCode::kPermissionDenied:
      return kForbidden;
    case absl::StatusCode::kUnauthenticated:
      return kUnauthenticated;
    case absl::StatusCode::kResourceExhausted:
      return kResourceExhausted;
    case absl::StatusCode::kFailedPrecondition:
      return kFailedPrecondition;
    case absl::StatusCode::kUnimplemented:
      return kUnknownOp;
    default:
      return kInternal;
  }
}

absl::StatusCode StatusCodeFor(std::string_view code) {
  if (code == kInvalidArgument) return absl::StatusCode::kInvalidArgument;
  if (code == kNotFound || code == kUnknownHandle) {
    return absl::StatusCode::kNotFound;
  }
  if (code == kForbidden) return absl::StatusCode::kPermissionDenied;
  if (code == kUnauthenticated) return absl::StatusCode::kUnauthenticated;
  if (code == kResourceExhausted || code == kBudgetExceeded) {
    return absl::StatusCode::kResourceExhausted;
  }
  if (code == kFailedPrecondition) return absl::StatusCode::kFailedPrecondition;
  if (code == kUnknownOp) return absl::StatusCode::kUnimplemented;
  if (code == kInternal) return absl::StatusCode::kInternal;
  return absl::StatusCode::kUnknown;
}

Json ErrorResponse(const Json& id, std::string_view code,
                   std::string_view detail) {
  return Json{{"id", id},
              {"ok", false},
              {"error", {{"code", std::string(code)}, {"detail", std::string(detail)}}}};
}

Json StatusResponse(const Json& id, const absl::Status& status) {
  return ErrorResponse(id, WireCodeFor(status), Str(status.message()));
}

Json RejectionResponse(const Json& id, const PublishRejection& rejection) {
  Json entities = Json::array();
  Json eps = Json::array();
  for (const Violation& v : rejection.violations) {
    entities.push_back(v.entity);
    eps.push_back(v.projected_eps);
  }
  Json r = ErrorResponse(id, kBudgetExceeded,
                         absl::StrCat(rejection.violations.size(),
                                      " entities would exceed their budget"));
  r["rejection"] = {{"entities", entities}, {"projected_eps", eps}};
  return r;
}

Json ScalarSummary(const PrivateScalar& s) {
  return Json{{"degree", s.poly().TotalDegree()},
              {"terms", s.poly().term_count()},
              {"entities", s.Entities().size()},
              {"poly", s.poly().ToString()}};
}

Json SpendsToJson(const std::vector<RdpSpend>& spends, bool owner_view) {
  Json out = Json::array();
  for (const RdpSpend& s : spends) {
    Json j{{"entity", s.var.entity},
           {"attribute", s.var.attribute},
           {"lipschitz", s.lipschitz},
           {"rho", s.rho},
           {"strategy", std::string(StrategyName(s.strategy))}};
    if (owner_view) j["clipped_input"] = s.clipped_input;
    out.push_back(std::move(j));
  }
  return out;
}

Json ReceiptToJson(const PublishReceipt& r, bool owner_view) {
  Json j{{"publish_id", r.publish_id},
         {"sigma", r.sigma},
         {"spends", SpendsToJson(r.spends, owner_view)},
         {"timestamp_ms", r.timestamp_ms}};
  if (r.noisy_value.has_value()) j["value"] = *r.noisy_value;
  return j;
}

namespace {

absl::Status Scan(const Json& j, const std::string& path) {
  if (j.is_object()) {
    if (j.contains("value") && (j.contains("floor") || j.contains("ceiling"))) {
      return absl::InternalError(
          absl::StrCat("raw input value exposed at ", path, ".value"));
    }
    for (const auto& [key, child] : j.items()) {
      if (key == "clipped_input") {
        return absl::InternalError(
            absl::StrCat("clipped input exposed at ", path, ".", key));
      }
      if (auto s = Scan(child, absl::StrCat(path, ".", key)); !s.ok()) return s;
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (auto s = Scan(j[i], absl::StrCat(path, "[", i, "]")); !s.ok()) return s;
    }
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status ScanForConfinedValues(const Json& message) {
  return Scan(message, "$");
}

}  // namespace pscalar

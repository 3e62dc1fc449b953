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

#include "pscalar/client.h"

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace pscalar {

absl::Status StatusFromError(const Json& response) {
  std::string code = "internal", detail = "malformed error response";
  if (auto it = response.find("error"); it != response.end() && it->is_object()) {
    code = it->value("code", code);
    detail = it->value("detail", detail);
  }
  return absl::Status(StatusCodeFor(code), absl::StrCat(code, ": ", detail));
}

absl::StatusOr<std::unique_ptr<ClientSession>> ClientSession::Connect(
    const std::string& host, int port, const std::string& api_key) {
  auto fd = ConnectTcp(host, port);
  if (!fd.ok()) return fd.status();
  std::unique_ptr<ClientSession> session(
      new ClientSession(std::make_unique<LineChannel>(*fd)));
  auto auth = session->Call({{"op", "auth"}, {"key", api_key}});
  if (!auth.ok()) return auth.status();
  session->user_ = auth->value("user", "");
  auto list = session->Call({{"op", "list_datasets"}});
  if (!list.ok()) return list.status();
  session->datasets_ = (*list)["datasets"];
  return session;
}

absl::StatusOr<Json> ClientSession::RawCall(Json request) {
  const std::int64_t id = next_id_++;
  request["id"] = id;
  if (auto s = channel_->WriteLine(request.dump()); !s.ok()) return s;
  auto line = channel_->ReadLine();
  if (!line.ok()) return line.status();
  if (!line->has_value()) {
    return absl::UnavailableError("node closed the connection");
  }
  Json response = Json::parse(**line, nullptr, /*allow_exceptions=*/false);
  if (response.is_discarded() || !response.is_object()) {
    return absl::DataLossError("node sent a malformed response");
  }
  if (response.value("id", Json()) != Json(id)) {
    return absl::DataLossError("response id does not match request");
  }
  return response;
}

absl::StatusOr<Json> ClientSession::Call(Json request) {
  auto response = RawCall(std::move(request));
  if (!response.ok()) return response.status();
  if (!response->value("ok", false)) return StatusFromError(*response);
  return response;
}

RemoteScalar ClientSession::FromResponse(const Json& r) const {
  RemoteScalar s;
  s.handle = r.at("handle").get<std::uint64_t>();
  s.degree = r.value("degree", 0);
  s.terms = r.value("terms", std::uint64_t{0});
  s.entities = r.value("entities", std::uint64_t{0});
  s.session = this;
  return s;
}

absl::StatusOr<std::vector<RemoteScalar>> ClientSession::Roots(
    const std::string& dataset, const std::string& column) {
  Json req{{"op", "get_roots"}, {"dataset", dataset}};
  if (!column.empty()) req["column"] = column;
  auto r = Call(std::move(req));
  if (!r.ok()) return r.status();
  std::vector<RemoteScalar> out;
  for (const Json& root : (*r)["roots"]) {
    RemoteScalar s;
    s.handle = root.at("handle").get<std::uint64_t>();
    s.degree = 1;
    s.terms = 1;
    s.entities = 1;
    s.entity = root.value("entity", "");
    s.session = this;
    out.push_back(std::move(s));
  }
  return out;
}

absl::StatusOr<Json> ClientSession::OperandJson(const Operand& op) const {
  if (const double* c = std::get_if<double>(&op)) return Json{{"const", *c}};
  const RemoteScalar& r = std::get<RemoteScalar>(op);
  if (r.session != this) {
    return absl::InvalidArgumentError(
        "operand belongs to a different session");
  }
  return Json(r.handle);
}

absl::StatusOr<RemoteScalar> ClientSession::Binary(const std::string& kind,
                                                   const Operand& a,
                                                   const Operand& b) {
  auto ja = OperandJson(a);
  if (!ja.ok()) return ja.status();
  auto jb = OperandJson(b);
  if (!jb.ok()) return jb.status();
  auto r = Call({{"op", "binop"}, {"kind", kind}, {"a", *ja}, {"b", *jb}});
  if (!r.ok()) return r.status();
  return FromResponse(*r);
}

absl::StatusOr<RemoteScalar> ClientSession::Unary(const std::string& kind,
                                                  const RemoteScalar& a,
                                                  double c, int k) {
  auto ja = OperandJson(a);
  if (!ja.ok()) return ja.status();
  Json req{{"op", "unop"}, {"kind", kind}, {"a", *ja}};
  if (kind == "scale" || kind == "shift") req["c"] = c;
  if (kind == "pow") req["k"] = k;
  auto r = Call(std::move(req));
  if (!r.ok()) return r.status();
  return FromResponse(*r);
}

namespace {

void ReadRejection(const Json& rejection, std::vector<std::string>* entities,
                   std::vector<double>* eps) {
  for (const Json& e : rejection.value("entities", Json::array())) {
    entities->push_back(e.get<std::string>());
  }
  for (const Json& e : rejection.value("projected_eps", Json::array())) {
    eps->push_back(e.get<double>());
  }
}

}  // namespace

absl::StatusOr<PublishResult> ClientSession::Publish(
    const RemoteScalar& a, std::optional<double> sigma) {
  auto ja = OperandJson(a);
  if (!ja.ok()) return ja.status();
  Json req{{"op", "publish"}, {"handle", *ja}};
  req["sigma"] = sigma.has_value() ? Json(*sigma) : Json("auto");
  auto r = RawCall(std::move(req));
  if (!r.ok()) return r.status();
  PublishResult out;
  if (r->value("ok", false)) {
    out.accepted = true;
    out.value = (*r)["value"].get<double>();
    out.sigma = (*r)["sigma"].get<double>();
    out.spends = (*r)["spends"];
    return out;
  }
  if (r->contains("rejection")) {
    ReadRejection((*r)["rejection"], &out.rejected_entities, &out.projected_eps);
    return out;
  }
  return StatusFromError(*r);
}

absl::StatusOr<SimulateResult> ClientSession::Simulate(
    const RemoteScalar& a, std::optional<double> sigma) {
  auto ja = OperandJson(a);
  if (!ja.ok()) return ja.status();
  Json req{{"op", "simulate_publish"}, {"handle", *ja}};
  req["sigma"] = sigma.has_value() ? Json(*sigma) : Json("auto");
  auto r = Call(std::move(req));
  if (!r.ok()) return r.status();
  SimulateResult out;
  out.pass = (*r)["pass"].get<bool>();
  out.sigma = (*r)["sigma"].get<double>();
  out.spends = (*r)["spends"];
  if (r->contains("rejection")) {
    ReadRejection((*r)["rejection"], &out.rejected_entities, &out.projected_eps);
  }
  return out;
}

absl::StatusOr<double> ClientSession::Calibrate(const RemoteScalar& a,
                                                bool simulated) {
  auto ja = OperandJson(a);
  if (!ja.ok()) return ja.status();
  auto r = Call({{"op", "calibrate"}, {"handle", *ja}, {"simulated", simulated}});
  if (!r.ok()) return r.status();
  return (*r)["sigma"].get<double>();
}

absl::StatusOr<Json> ClientSession::RemainingBudget(const std::string& entity,
                                                    bool simulated) {
  Json req{{"op", "remaining_budget"}, {"simulated", simulated}};
  if (!entity.empty()) req["entity"] = entity;
  return Call(std::move(req));
}

absl::Status ClientSession::ForkSim() {
  return Call({{"op", "fork_sim"}}).status();
}

absl::Status ClientSession::Drop(const RemoteScalar& a) {
  auto ja = OperandJson(a);
  if (!ja.ok()) return ja.status();
  return Call({{"op", "drop"}, {"handle", *ja}}).status();
}

}  // namespace pscalar

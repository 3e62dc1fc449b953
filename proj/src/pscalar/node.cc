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

#include "pscalar/node.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace pscalar {
namespace {

constexpr char kSharedLedgerId[] = "*shared*";

std::uint64_t Fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t SessionSeed(std::uint64_t seed, std::string_view user,
                          std::uint64_t ordinal) {
  const std::uint64_t u = Fnv1a(user);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(u),
                    static_cast<std::uint32_t>(u >> 32),
                    static_cast<std::uint32_t>(ordinal),
                    static_cast<std::uint32_t>(ordinal >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

bool GetNumber(const Json& req, const char* key, double* out) {
  auto it = req.find(key);
  if (it == req.end() || !it->is_number()) return false;
  *out = it->get<double>();
  return true;
}

bool GetString(const Json& req, const char* key, std::string* out) {
  auto it = req.find(key);
  if (it == req.end() || !it->is_string()) return false;
  *out = it->get<std::string>();
  return true;
}

bool GetBool(const Json& req, const char* key, bool fallback) {
  auto it = req.find(key);
  return it != req.end() && it->is_boolean() ? it->get<bool>() : fallback;
}

const Json& IdOf(const Json& req) {
  static const Json* const kNull = new Json();
  auto it = req.find("id");
  return it == req.end() ? *kNull : *it;
}

Json Ok(const Json& id) { return Json{{"id", id}, {"ok", true}}; }

Json BadArg(const Json& id, std::string_view detail) {
  return ErrorResponse(id, kInvalidArgument, detail);
}

}  // namespace

std::string GenerateApiKey() {
  std::random_device rd;
  std::string key;
  for (int i = 0; i < 4; ++i) absl::StrAppendFormat(&key, "%08x", rd());
  return key;
}

Node::Node(NodeOptions options) : options_(std::move(options)) {}
Node::~Node() = default;

absl::StatusOr<std::unique_ptr<Node>> Node::Create(NodeOptions options) {
  auto policy = BudgetPolicy::Make(options.policy.eps_cap, options.policy.delta);
  if (!policy.ok()) return policy.status();
  std::unique_ptr<Node> node(new Node(std::move(options)));
  if (!node->options_.journal_path.empty()) {
    auto records = ReadJournal(node->options_.journal_path);
    if (!records.ok()) return records.status();
    std::uint64_t max_id = 0;
    for (const JournalRecord& r : *records) {
      node->SlotFor(r.ledger_id).ledger.Apply(r.entry);
      max_id = std::max(max_id, r.entry.publish_id);
    }
    node->next_publish_id_ = max_id + 1;
    auto journal = LedgerJournal::Open(node->options_.journal_path);
    if (!journal.ok()) return journal.status();
    node->journal_ = *std::move(journal);
  }
  return node;
}

absl::Status Node::AddDataset(Dataset dataset) {
  for (const Dataset& d : datasets_) {
    if (d.name == dataset.name) {
      return absl::AlreadyExistsError(
          absl::StrCat("dataset '", dataset.name, "' already loaded"));
    }
  }
  for (const DatasetColumn& c : dataset.columns) {
    for (const DatasetRow& r : c.rows) {
      if (auto s = ValidateEntityId(r.entity); !s.ok()) return s;
      entities_.insert(r.entity);
    }
  }
  datasets_.push_back(std::move(dataset));
  return absl::OkStatus();
}

absl::Status Node::IngestCsv(std::string_view spec) {
  auto ds = ReadCsvDataset(spec);
  if (!ds.ok()) return ds.status();
  return AddDataset(*std::move(ds));
}

absl::Status Node::AddUser(const std::string& name, const std::string& key) {
  if (name.empty() || key.empty()) {
    return absl::InvalidArgumentError("user name and key must be non-empty");
  }
  if (auto s = ValidateEntityId(name); !s.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("user name '", name, "' contains a control character"));
  }
  std::lock_guard lock(users_mu_);
  if (users_.contains(name)) {
    return absl::AlreadyExistsError(absl::StrCat("user '", name, "' exists"));
  }
  if (user_by_key_.contains(key)) {
    return absl::AlreadyExistsError("api key already in use");
  }
  auto user = std::make_unique<User>();
  user->name = name;
  user->ledger_id = options_.shared_ledger ? kSharedLedgerId : name;
  user_by_key_[key] = name;
  users_[name] = std::move(user);
  return absl::OkStatus();
}

std::uint64_t Node::OpenSession() {
  std::lock_guard lock(sessions_mu_);
  const std::uint64_t id = next_session_++;
  sessions_[id] = std::make_shared<Session>();
  return id;
}

void Node::CloseSession(std::uint64_t session) {
  {
    std::lock_guard lock(sessions_mu_);
    sessions_.erase(session);
  }
  std::unique_lock lock(objects_mu_);
  std::erase_if(objects_, [&](const auto& kv) { return kv.second.owner == session; });
}

std::shared_ptr<Node::Session> Node::FindSession(std::uint64_t id) {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

Node::LedgerSlot& Node::SlotFor(const std::string& ledger_id) {
  std::lock_guard lock(ledgers_mu_);
  auto& slot = ledgers_[ledger_id];
  if (!slot) slot = std::make_unique<LedgerSlot>();
  return *slot;
}

std::int64_t Node::Now() const {
  return options_.clock ? options_.clock() : UnixMillisNow();
}

void Node::Audit(Json event) {
  event["ts"] = Now();
  std::lock_guard lock(audit_mu_);
  if (!options_.audit_path.empty()) {
    std::ofstream out(options_.audit_path, std::ios::app);
    out << event.dump() << "\n";
  }
  audit_.push_back(std::move(event));
}

std::vector<Json> Node::AuditLog() const {
  std::lock_guard lock(audit_mu_);
  return audit_;
}

std::string Node::SerializeLedgers() const {
  std::lock_guard lock(ledgers_mu_);
  std::string out;
  for (const auto& [id, slot] : ledgers_) {
    std::lock_guard slot_lock(slot->mu);
    for (const auto& [entity, rho] : slot->ledger.cumulative()) {
      absl::StrAppendFormat(&out, "%s\t%s\t%.17g\n", id, entity, rho);
    }
  }
  return out;
}

std::string Node::HandleLine(std::uint64_t session, std::string_view line) {
  Json request = Json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (request.is_discarded() || !request.is_object()) {
    return BadArg(nullptr, "request is not a JSON object").dump();
  }
  return Handle(session, request).dump();
}

Json Node::Handle(std::uint64_t sid, const Json& req) {
  if (!req.is_object()) return BadArg(nullptr, "request is not a JSON object");
  const Json id = IdOf(req);
  std::shared_ptr<Session> session = FindSession(sid);
  if (!session) return ErrorResponse(id, kInternal, "session is closed");
  std::lock_guard lock(session->mu);

  Json response;
  try {
    response = Dispatch(sid, *session, req);
  } catch (const Json::exception& e) {
    response = BadArg(id, absl::StrCat("malformed request: ", e.what()));
  }
  if (options_.check_confinement) {
    if (auto s = ScanForConfinedValues(response); !s.ok()) {
      ++confinement_violations_;
      Audit({{"event", "confinement_violation"}, {"detail", Str(s.message())}});
      response = ErrorResponse(id, kInternal, "response withheld");
    }
  }
  Json event{{"event", "request"},
             {"session", sid},
             {"user", session->user ? Json(session->user->name) : Json()},
             {"op", req.value("op", Json())},
             {"ok", response.value("ok", false)}};
  if (!event["ok"].get<bool>() && response.contains("error")) {
    event["code"] = response["error"]["code"];
  }
  Audit(std::move(event));
  return response;
}

Json Node::Dispatch(std::uint64_t sid, Session& s, const Json& req) {
  const Json& id = IdOf(req);
  std::string op;
  if (!GetString(req, "op", &op)) return BadArg(id, "missing string field 'op'");
  if (op == "auth") return OpAuth(s, sid, req);
  if (s.user == nullptr) {
    return ErrorResponse(id, kUnauthenticated, "send {\"op\":\"auth\"} first");
  }
  if (op == "list_datasets") return OpListDatasets(req);
  if (op == "get_roots") return OpGetRoots(sid, req);
  if (op == "binop") return OpBinop(sid, req);
  if (op == "unop") return OpUnop(sid, req);
  if (op == "describe") return OpDescribe(sid, req);
  if (op == "publish") return OpPublish(sid, s, req);
  if (op == "simulate_publish") return OpSimulate(sid, s, req);
  if (op == "calibrate") return OpCalibrate(sid, s, req);
  if (op == "remaining_budget") return OpRemaining(s, req);
  if (op == "fork_sim") return OpForkSim(s, req);
  if (op == "drop") return OpDrop(sid, req);
  return ErrorResponse(id, kUnknownOp, absl::StrCat("unknown op '", op, "'"));
}

Json Node::OpAuth(Session& s, std::uint64_t sid, const Json& req) {
  const Json& id = IdOf(req);
  std::string key;
  if (!GetString(req, "key", &key)) return BadArg(id, "missing string field 'key'");
  std::lock_guard lock(users_mu_);
  auto it = user_by_key_.find(key);
  if (it == user_by_key_.end()) {
    return ErrorResponse(id, kUnauthenticated, "unknown api key");
  }
  if (s.user != nullptr) {
    return ErrorResponse(id, kFailedPrecondition, "session already authenticated");
  }
  User& user = *users_.at(it->second);
  s.user = &user;
  const std::uint64_t ordinal = user.sessions_opened++;
  s.noise = options_.seed.has_value()
                ? GaussianNoiseSource(SessionSeed(*options_.seed, user.name, ordinal))
                : GaussianNoiseSource::FromEntropy();
  Json r = Ok(id);
  r["user"] = user.name;
  r["session"] = sid;
  return r;
}

Json Node::OpListDatasets(const Json& req) {
  Json list = Json::array();
  for (const Dataset& d : datasets_) {
    Json cols = Json::array();
    for (const DatasetColumn& c : d.columns) {
      cols.push_back(
          {{"name", c.name}, {"attribute", c.attribute}, {"rows", c.rows.size()}});
    }
    list.push_back({{"name", d.name}, {"columns", cols}});
  }
  Json r = Ok(IdOf(req));
  r["datasets"] = list;
  return r;
}

std::uint64_t Node::Store(std::uint64_t sid, PrivateScalar scalar) {
  std::unique_lock lock(objects_mu_);
  const std::uint64_t h = next_handle_++;
  objects_[h] = {std::make_shared<const PrivateScalar>(std::move(scalar)), sid};
  return h;
}

std::shared_ptr<const PrivateScalar> Node::Lookup(std::uint64_t sid,
                                                  const Json& req,
                                                  const char* key, Json* error) {
  const Json& id = IdOf(req);
  auto it = req.find(key);
  if (it == req.end() || !it->is_number_integer() || it->get<std::int64_t>() < 0) {
    *error = BadArg(id, absl::StrCat("field '", key, "' must be a handle"));
    return nullptr;
  }
  const std::uint64_t h = it->get<std::uint64_t>();
  std::shared_lock lock(objects_mu_);
  auto obj = objects_.find(h);
  if (obj == objects_.end()) {
    *error = ErrorResponse(id, kUnknownHandle, absl::StrCat("no handle ", h));
    return nullptr;
  }
  if (obj->second.owner != sid) {
    *error = ErrorResponse(id, kForbidden,
                           absl::StrCat("handle ", h, " belongs to another session"));
    return nullptr;
  }
  return obj->second.scalar;
}

Json Node::OpGetRoots(std::uint64_t sid, const Json& req) {
  const Json& id = IdOf(req);
  std::string name, column;
  if (!GetString(req, "dataset", &name)) {
    return BadArg(id, "missing string field 'dataset'");
  }
  GetString(req, "column", &column);
  const Dataset* ds = nullptr;
  for (const Dataset& d : datasets_) {
    if (d.name == name) ds = &d;
  }
  if (ds == nullptr) {
    return ErrorResponse(id, kNotFound, absl::StrCat("no dataset '", name, "'"));
  }
  const DatasetColumn* col = nullptr;
  if (column.empty() && ds->columns.size() == 1) col = &ds->columns[0];
  for (const DatasetColumn& c : ds->columns) {
    if (c.name == column) col = &c;
  }
  if (col == nullptr) {
    return ErrorResponse(id, kNotFound,
                         absl::StrCat("dataset '", name, "' has no column '",
                                      column, "'"));
  }
  Json roots = Json::array();
  for (const DatasetRow& row : col->rows) {
    auto s = PrivateScalar::MakePrivate(VarId{row.entity, col->attribute},
                                        row.input.value, row.input.floor,
                                        row.input.ceiling);
    if (!s.ok()) return StatusResponse(id, s.status());
    roots.push_back({{"handle", Store(sid, *std::move(s))},
                     {"entity", row.entity},
                     {"floor", row.input.floor},
                     {"ceiling", row.input.ceiling}});
  }
  Json r = Ok(id);
  r["attribute"] = col->attribute;
  r["roots"] = roots;
  return r;
}

Json Node::OpBinop(std::uint64_t sid, const Json& req) {
  const Json& id = IdOf(req);
  std::string kind;
  if (!GetString(req, "kind", &kind)) return BadArg(id, "missing string field 'kind'");
  auto op = ParseBinaryOp(kind);
  if (!op.ok()) return StatusResponse(id, op.status());

  std::shared_ptr<const PrivateScalar> operands[2];
  const char* keys[2] = {"a", "b"};
  for (int i = 0; i < 2; ++i) {
    auto it = req.find(keys[i]);
    if (it != req.end() && it->is_object() && it->contains("const")) {
      const Json& c = (*it)["const"];
      if (!c.is_number()) return BadArg(id, "constant operand must be a number");
      auto s = PrivateScalar::FromPublic(c.get<double>());
      if (!s.ok()) return StatusResponse(id, s.status());
      operands[i] = std::make_shared<const PrivateScalar>(*std::move(s));
    } else {
      Json error;
      operands[i] = Lookup(sid, req, keys[i], &error);
      if (!operands[i]) return error;
    }
  }
  auto result = ApplyBinary(*op, *operands[0], *operands[1], options_.limits);
  if (!result.ok()) return StatusResponse(id, result.status());
  Json r = Ok(id);
  r.update(ScalarSummary(*result));
  r["handle"] = Store(sid, *std::move(result));
  return r;
}

Json Node::OpUnop(std::uint64_t sid, const Json& req) {
  const Json& id = IdOf(req);
  std::string kind;
  if (!GetString(req, "kind", &kind)) return BadArg(id, "missing string field 'kind'");
  auto k = ParseUnaryOp(kind);
  if (!k.ok()) return StatusResponse(id, k.status());
  Json error;
  auto a = Lookup(sid, req, "a", &error);
  if (!a) return error;
  UnaryOp op{*k, 0, 0};
  if (*k == UnaryOp::Kind::kScale || *k == UnaryOp::Kind::kShift) {
    if (!GetNumber(req, "c", &op.constant)) {
      return BadArg(id, absl::StrCat(kind, " needs a numeric field 'c'"));
    }
  } else if (*k == UnaryOp::Kind::kPow) {
    auto it = req.find("k");
    if (it == req.end() || !it->is_number_integer()) {
      return BadArg(id, "pow needs an integer field 'k'");
    }
    const std::int64_t e = it->get<std::int64_t>();
    if (e < 0 || e > 1024) return BadArg(id, "pow exponent must be in [0, 1024]");
    op.exponent = static_cast<int>(e);
  }
  auto result = ApplyUnary(op, *a, options_.limits);
  if (!result.ok()) return StatusResponse(id, result.status());
  Json r = Ok(id);
  r.update(ScalarSummary(*result));
  r["handle"] = Store(sid, *std::move(result));
  return r;
}

Json Node::OpDescribe(std::uint64_t sid, const Json& req) {
  Json error;
  auto a = Lookup(sid, req, "handle", &error);
  if (!a) return error;
  Json r = Ok(IdOf(req));
  r.update(ScalarSummary(*a));
  return r;
}

PrivacyLedger& Node::SimulatedLedger(Session& s) {
  if (!s.simulated.has_value()) {
    LedgerSlot& slot = SlotFor(s.user->ledger_id);
    std::lock_guard lock(slot.mu);
    s.simulated = slot.ledger.ForkSimulated();
  }
  return *s.simulated;
}

Json Node::OpPublish(std::uint64_t sid, Session& s, const Json& req) {
  const Json& id = IdOf(req);
  Json error;
  auto a = Lookup(sid, req, "handle", &error);
  if (!a) return error;
  const bool auto_sigma = req.contains("sigma") && req["sigma"] == "auto";
  double sigma = 0;
  if (!auto_sigma && !GetNumber(req, "sigma", &sigma)) {
    return BadArg(id, "missing numeric field 'sigma' (or \"auto\")");
  }

  LedgerSlot& slot = SlotFor(s.user->ledger_id);
  std::lock_guard lock(slot.mu);
  if (auto_sigma) {
    auto calibrated = CalibrateSigma(*a, slot.ledger, options_.policy,
                                     options_.sensitivity);
    if (!calibrated.ok()) return StatusResponse(id, calibrated.status());
    sigma = *calibrated;
  }
  const std::uint64_t publish_id = next_publish_id_++;
  const std::int64_t now = Now();
  PublishOptions po;
  po.sensitivity = options_.sensitivity;
  po.clock = [now] { return now; };
  if (journal_) {
    po.persist = [&](const std::vector<LedgerEntry>& entries) {
      return journal_->Append(s.user->ledger_id, entries, now);
    };
  }
  auto outcome = Publish(*a, sigma, slot.ledger, options_.policy, *s.noise,
                         publish_id, po);
  if (!outcome.ok()) return StatusResponse(id, outcome.status());

  Json event{{"event", "publish"},
             {"user", s.user->name},
             {"ledger", s.user->ledger_id},
             {"publish_id", publish_id},
             {"handle", req.at("handle")},
             {"sigma", sigma}};
  Json response;
  if (const auto* rejection = std::get_if<PublishRejection>(&*outcome)) {
    response = RejectionResponse(id, *rejection);
    event["status"] = "rejected";
    event["recorded_rho"] = 0;
    event["rejection"] = response["rejection"];
  } else {
    const auto& receipt = std::get<PublishReceipt>(*outcome);
    response = Ok(id);
    response.update(ReceiptToJson(receipt, /*owner_view=*/false));
    event["status"] = "released";
    event["spends"] = SpendsToJson(receipt.spends, /*owner_view=*/false);
    Json cumulative = Json::object();
    for (const RdpSpend& sp : receipt.spends) {
      cumulative[sp.var.entity] = slot.ledger.Cumulative(sp.var.entity);
    }
    event["cumulative_rho"] = cumulative;
  }
  Audit(std::move(event));
  return response;
}

Json Node::OpSimulate(std::uint64_t sid, Session& s, const Json& req) {
  const Json& id = IdOf(req);
  Json error;
  auto a = Lookup(sid, req, "handle", &error);
  if (!a) return error;
  PrivacyLedger& ledger = SimulatedLedger(s);
  double sigma = 0;
  if (req.contains("sigma") && req["sigma"] == "auto") {
    auto calibrated = CalibrateSigma(*a, ledger, options_.policy, options_.sensitivity);
    if (!calibrated.ok()) return StatusResponse(id, calibrated.status());
    sigma = *calibrated;
  } else if (!GetNumber(req, "sigma", &sigma)) {
    return BadArg(id, "missing numeric field 'sigma' (or \"auto\")");
  }
  PublishOptions po;
  po.sensitivity = options_.sensitivity;
  po.release_value = false;
  po.clock = [this] { return Now(); };
  // The simulated stream never releases noise, so any source will do.
  GaussianNoiseSource unused(0);
  auto outcome = Publish(*a, sigma, ledger, options_.policy, unused,
                         ++s.simulated_publishes, po);
  if (!outcome.ok()) return StatusResponse(id, outcome.status());
  Json r = Ok(id);
  r["sigma"] = sigma;
  if (const auto* rejection = std::get_if<PublishRejection>(&*outcome)) {
    r["pass"] = false;
    r["rejection"] = RejectionResponse(id, *rejection)["rejection"];
    r["spends"] = Json::array();
  } else {
    r["pass"] = true;
    r["spends"] =
        SpendsToJson(std::get<PublishReceipt>(*outcome).spends, /*owner_view=*/false);
  }
  Audit({{"event", "simulate"},
         {"user", s.user->name},
         {"handle", req.at("handle")},
         {"sigma", sigma},
         {"pass", r["pass"]}});
  return r;
}

Json Node::OpCalibrate(std::uint64_t sid, Session& s, const Json& req) {
  const Json& id = IdOf(req);
  Json error;
  auto a = Lookup(sid, req, "handle", &error);
  if (!a) return error;
  absl::StatusOr<double> sigma;
  if (GetBool(req, "simulated", false)) {
    sigma = CalibrateSigma(*a, SimulatedLedger(s), options_.policy,
                           options_.sensitivity);
  } else {
    LedgerSlot& slot = SlotFor(s.user->ledger_id);
    std::lock_guard lock(slot.mu);
    sigma = CalibrateSigma(*a, slot.ledger, options_.policy, options_.sensitivity);
  }
  if (!sigma.ok()) return StatusResponse(id, sigma.status());
  Json r = Ok(id);
  r["sigma"] = *sigma;
  return r;
}

Json Node::OpRemaining(Session& s, const Json& req) {
  const Json& id = IdOf(req);
  std::string entity;
  const bool has_entity = GetString(req, "entity", &entity);
  if (has_entity && entity != "min" && !entities_.contains(entity)) {
    return ErrorResponse(id, kNotFound, absl::StrCat("unknown entity '", entity, "'"));
  }
  auto compute = [&](const PrivacyLedger& ledger) {
    Json r = Ok(id);
    if (has_entity && entity != "min") {
      r["entity"] = entity;
      r["remaining"] = RemainingBudget(ledger, entity, options_.policy);
      return r;
    }
    Json all = Json::object();
    double min = std::numeric_limits<double>::infinity();
    std::string argmin;
    for (const std::string& e : entities_) {
      const double rem = RemainingBudget(ledger, e, options_.policy);
      if (rem < min) {
        min = rem;
        argmin = e;
      }
      if (!has_entity) all[e] = rem;
    }
    if (has_entity) {
      r["entity"] = argmin;
      r["remaining"] = entities_.empty() ? options_.policy.eps_cap : min;
    } else {
      r["remaining"] = all;
    }
    return r;
  };
  if (GetBool(req, "simulated", false)) return compute(SimulatedLedger(s));
  LedgerSlot& slot = SlotFor(s.user->ledger_id);
  std::lock_guard lock(slot.mu);
  return compute(slot.ledger);
}

Json Node::OpForkSim(Session& s, const Json& req) {
  s.simulated.reset();
  s.simulated_publishes = 0;
  SimulatedLedger(s);
  return Ok(IdOf(req));
}

Json Node::OpDrop(std::uint64_t sid, const Json& req) {
  Json error;
  if (!Lookup(sid, req, "handle", &error)) return error;
  std::unique_lock lock(objects_mu_);
  objects_.erase(req.at("handle").get<std::uint64_t>());
  return Ok(IdOf(req));
}

}  // namespace pscalar

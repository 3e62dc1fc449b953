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

#include "pscalar.h"

#include <sys/stat.h>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "pscalar/accountant.h"
#include "pscalar/csv_ingest.h"
#include "pscalar/node.h"
#include "pscalar/private_scalar.h"
#include "pscalar/script.h"
#include "pscalar/server.h"
#include "pscalar/wire.h"

struct psc_scalar {
  pscalar::PrivateScalar value;
};

struct psc_node {
  std::unique_ptr<pscalar::Node> node;
  std::unique_ptr<pscalar::Server> server;
};

struct psc_runner {
  std::unique_ptr<pscalar::ScriptRunner> runner;
};

namespace {

using pscalar::Json;

thread_local std::string last_error;

psc_status Fail(const absl::Status& status) {
  last_error = pscalar::Str(status.message());
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return PSC_OK;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
      return PSC_INVALID_ARGUMENT;
    case absl::StatusCode::kNotFound:
      return PSC_NOT_FOUND;
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kAlreadyExists:
      return PSC_FAILED_PRECONDITION;
    case absl::StatusCode::kResourceExhausted:
      return PSC_RESOURCE_EXHAUSTED;
    case absl::StatusCode::kUnavailable:
      return PSC_UNAVAILABLE;
    case absl::StatusCode::kPermissionDenied:
      return PSC_PERMISSION_DENIED;
    case absl::StatusCode::kUnauthenticated:
      return PSC_UNAUTHENTICATED;
    default:
      return PSC_INTERNAL;
  }
}

psc_status Ok() {
  last_error.clear();
  return PSC_OK;
}

psc_status NullArg(const char* name) {
  return Fail(absl::InvalidArgumentError(absl::StrCat(name, " is null")));
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

// Runs `body`, turning escaped exceptions into PSC_INTERNAL.
template <typename F>
psc_status Guard(F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return Fail(absl::InternalError(e.what()));
  } catch (...) {
    return Fail(absl::InternalError("unknown exception"));
  }
}

absl::StatusOr<Json> ParseObject(const char* text) {
  if (text == nullptr || *text == '\0') return Json::object();
  Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    return absl::InvalidArgumentError("options must be a JSON object");
  }
  return j;
}

absl::StatusOr<pscalar::ScriptOptions> RunnerOptions(const char* text) {
  auto j = ParseObject(text);
  if (!j.ok()) return j.status();
  pscalar::ScriptOptions options;
  for (const auto& [key, v] : j->items()) {
    if (key == "host" && v.is_string()) {
      options.host = v.get<std::string>();
    } else if (key == "port" && v.is_number_integer()) {
      options.port = v.get<int>();
    } else if (key == "key" && v.is_string()) {
      options.default_key = v.get<std::string>();
    } else if (key == "keys" && v.is_object()) {
      options.keys = v.get<std::map<std::string, std::string>>();
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("bad runner option '", key, "'"));
    }
  }
  return options;
}

absl::StatusOr<std::string> ReadFile(const char* path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Parses a users file into (name, key) pairs.
absl::StatusOr<std::vector<std::pair<std::string, std::string>>> ReadUsers(
    const std::string& text, const char* path) {
  std::vector<std::pair<std::string, std::string>> users;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields = absl::StrSplit(line, '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ":", line_no, ": expected name<TAB>key"));
    }
    users.emplace_back(fields[0], fields[1]);
  }
  return users;
}

}  // namespace

extern "C" {

const char* psc_version(void) { return "0.1.0"; }

const char* psc_last_error(void) { return last_error.c_str(); }

void psc_string_free(char* s) { std::free(s); }

psc_status psc_scalar_private(const char* entity, const char* attribute,
                              double value, double floor, double ceiling,
                              psc_scalar** out) {
  if (entity == nullptr) return NullArg("entity");
  if (attribute == nullptr) return NullArg("attribute");
  if (out == nullptr) return NullArg("out");
  return Guard([&] {
    auto s = pscalar::PrivateScalar::MakePrivate(
        pscalar::VarId{entity, attribute}, value, floor, ceiling);
    if (!s.ok()) return Fail(s.status());
    *out = new psc_scalar{*std::move(s)};
    return Ok();
  });
}

psc_status psc_scalar_constant(double c, psc_scalar** out) {
  if (out == nullptr) return NullArg("out");
  return Guard([&] {
    auto s = pscalar::PrivateScalar::FromPublic(c);
    if (!s.ok()) return Fail(s.status());
    *out = new psc_scalar{*std::move(s)};
    return Ok();
  });
}

psc_status psc_scalar_binary(const char* kind, const psc_scalar* a,
                             const psc_scalar* b, psc_scalar** out) {
  if (kind == nullptr) return NullArg("kind");
  if (a == nullptr || b == nullptr) return NullArg("operand");
  if (out == nullptr) return NullArg("out");
  return Guard([&] {
    auto op = pscalar::ParseBinaryOp(kind);
    if (!op.ok()) return Fail(op.status());
    auto s = pscalar::ApplyBinary(*op, a->value, b->value);
    if (!s.ok()) return Fail(s.status());
    *out = new psc_scalar{*std::move(s)};
    return Ok();
  });
}

psc_status psc_scalar_unary(const char* kind, const psc_scalar* a, double c,
                            int k, psc_scalar** out) {
  if (kind == nullptr) return NullArg("kind");
  if (a == nullptr) return NullArg("operand");
  if (out == nullptr) return NullArg("out");
  return Guard([&] {
    auto parsed = pscalar::ParseUnaryOp(kind);
    if (!parsed.ok()) return Fail(parsed.status());
    auto s = pscalar::ApplyUnary(pscalar::UnaryOp{*parsed, c, k}, a->value);
    if (!s.ok()) return Fail(s.status());
    *out = new psc_scalar{*std::move(s)};
    return Ok();
  });
}

psc_status psc_scalar_describe(const psc_scalar* a, char** json) {
  if (a == nullptr) return NullArg("scalar");
  if (json == nullptr) return NullArg("json");
  return Guard([&] {
    *json = Dup(pscalar::ScalarSummary(a->value).dump());
    return Ok();
  });
}

psc_status psc_scalar_spends(const psc_scalar* a, double sigma, char** json) {
  if (a == nullptr) return NullArg("scalar");
  if (json == nullptr) return NullArg("json");
  return Guard([&] {
    auto spends = pscalar::SpendForPublish(a->value, sigma);
    if (!spends.ok()) return Fail(spends.status());
    *json = Dup(pscalar::SpendsToJson(*spends, /*owner_view=*/false).dump());
    return Ok();
  });
}

void psc_scalar_free(psc_scalar* a) { delete a; }

psc_status psc_rdp_to_dp(double rho, double delta, double* eps) {
  if (eps == nullptr) return NullArg("eps");
  return Guard([&] {
    auto e = pscalar::RdpToDp(rho, delta);
    if (!e.ok()) return Fail(e.status());
    *eps = *e;
    return Ok();
  });
}

psc_status psc_users_add(const char* path, const char* name, char** key) {
  if (path == nullptr) return NullArg("path");
  if (name == nullptr) return NullArg("name");
  if (key == nullptr) return NullArg("key");
  return Guard([&] {
    if (auto s = pscalar::ValidateEntityId(name); !s.ok()) {
      return Fail(absl::InvalidArgumentError(
          absl::StrCat("bad user name '", name, "'")));
    }
    std::string existing;
    if (std::ifstream probe(path); probe) {
      std::stringstream buffer;
      buffer << probe.rdbuf();
      existing = buffer.str();
    }
    auto users = ReadUsers(existing, path);
    if (!users.ok()) return Fail(users.status());
    for (const auto& [n, k] : *users) {
      if (n == name) {
        return Fail(absl::AlreadyExistsError(
            absl::StrCat("user '", name, "' exists in ", path)));
      }
    }
    const std::string fresh = pscalar::GenerateApiKey();
    std::ofstream out(path, std::ios::app);
    if (!out) return Fail(absl::UnavailableError(absl::StrCat("cannot write ", path)));
    if (!existing.empty() && existing.back() != '\n') out << '\n';
    out << name << '\t' << fresh << '\n';
    out.close();
    if (!out) return Fail(absl::UnavailableError(absl::StrCat("cannot write ", path)));
    ::chmod(path, S_IRUSR | S_IWUSR);
    *key = Dup(fresh);
    return Ok();
  });
}

psc_status psc_node_create(const char* options_json, psc_node** out) {
  if (out == nullptr) return NullArg("out");
  return Guard([&] {
    auto j = ParseObject(options_json);
    if (!j.ok()) return Fail(j.status());
    pscalar::NodeOptions options;
    bool has_eps = false;
    for (const auto& [key, v] : j->items()) {
      if (key == "eps" && v.is_number()) {
        options.policy.eps_cap = v.get<double>();
        has_eps = true;
      } else if (key == "delta" && v.is_number()) {
        options.policy.delta = v.get<double>();
      } else if (key == "shared_ledger" && v.is_boolean()) {
        options.shared_ledger = v.get<bool>();
      } else if (key == "journal" && v.is_string()) {
        options.journal_path = v.get<std::string>();
      } else if (key == "audit" && v.is_string()) {
        options.audit_path = v.get<std::string>();
      } else if (key == "seed" && v.is_number_unsigned()) {
        options.seed = v.get<std::uint64_t>();
      } else if (key == "check_confinement" && v.is_boolean()) {
        options.check_confinement = v.get<bool>();
      } else {
        return Fail(absl::InvalidArgumentError(
            absl::StrCat("bad node option '", key, "'")));
      }
    }
    if (!has_eps) return Fail(absl::InvalidArgumentError("option 'eps' is required"));
    auto node = pscalar::Node::Create(std::move(options));
    if (!node.ok()) return Fail(node.status());
    *out = new psc_node{*std::move(node), nullptr};
    return Ok();
  });
}

psc_status psc_node_ingest_csv(psc_node* node, const char* spec) {
  if (node == nullptr) return NullArg("node");
  if (spec == nullptr) return NullArg("spec");
  return Guard([&] { return Fail(node->node->IngestCsv(spec)); });
}

psc_status psc_node_add_user(psc_node* node, const char* name, const char* key) {
  if (node == nullptr) return NullArg("node");
  if (name == nullptr) return NullArg("name");
  if (key == nullptr) return NullArg("key");
  return Guard([&] { return Fail(node->node->AddUser(name, key)); });
}

psc_status psc_node_load_users(psc_node* node, const char* path) {
  if (node == nullptr) return NullArg("node");
  if (path == nullptr) return NullArg("path");
  return Guard([&] {
    auto text = ReadFile(path);
    if (!text.ok()) return Fail(text.status());
    auto users = ReadUsers(*text, path);
    if (!users.ok()) return Fail(users.status());
    for (const auto& [name, key] : *users) {
      if (auto s = node->node->AddUser(name, key); !s.ok()) return Fail(s);
    }
    return Ok();
  });
}

psc_status psc_node_listen(psc_node* node, const char* host, int port,
                           int* bound_port) {
  if (node == nullptr) return NullArg("node");
  if (node->server != nullptr) {
    return Fail(absl::FailedPreconditionError("node is already listening"));
  }
  return Guard([&] {
    auto server =
        pscalar::Server::Start(node->node.get(), host ? host : "127.0.0.1", port);
    if (!server.ok()) return Fail(server.status());
    node->server = *std::move(server);
    if (bound_port != nullptr) *bound_port = node->server->port();
    return Ok();
  });
}

psc_status psc_node_wait(psc_node* node) {
  if (node == nullptr) return NullArg("node");
  if (node->server == nullptr) {
    return Fail(absl::FailedPreconditionError("node is not listening"));
  }
  node->server->Wait();
  return Ok();
}

psc_status psc_node_stop(psc_node* node) {
  if (node == nullptr) return NullArg("node");
  if (node->server != nullptr) node->server->Stop();
  return Ok();
}

psc_status psc_node_audit(const psc_node* node, char** jsonl) {
  if (node == nullptr) return NullArg("node");
  if (jsonl == nullptr) return NullArg("jsonl");
  return Guard([&] {
    std::string out;
    for (const Json& event : node->node->AuditLog()) {
      out += event.dump();
      out += '\n';
    }
    *jsonl = Dup(out);
    return Ok();
  });
}

psc_status psc_node_ledgers(const psc_node* node, char** text) {
  if (node == nullptr) return NullArg("node");
  if (text == nullptr) return NullArg("text");
  return Guard([&] {
    *text = Dup(node->node->SerializeLedgers());
    return Ok();
  });
}

void psc_node_destroy(psc_node* node) {
  if (node == nullptr) return;
  if (node->server != nullptr) node->server->Stop();
  delete node;
}

psc_status psc_audit_read(const char* path, char** jsonl) {
  if (path == nullptr) return NullArg("path");
  if (jsonl == nullptr) return NullArg("jsonl");
  return Guard([&] {
    auto text = ReadFile(path);
    if (!text.ok()) return Fail(text.status());
    int line_no = 0;
    for (absl::string_view line : absl::StrSplit(*text, '\n')) {
      ++line_no;
      if (line.empty()) continue;
      Json j = Json::parse(line.begin(), line.end(), nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        return Fail(absl::DataLossError(
            absl::StrCat(path, ":", line_no, ": not a JSON object")));
      }
    }
    *jsonl = Dup(*text);
    return Ok();
  });
}

psc_status psc_runner_create(const char* options_json, psc_runner** out) {
  if (out == nullptr) return NullArg("out");
  return Guard([&] {
    auto options = RunnerOptions(options_json);
    if (!options.ok()) return Fail(options.status());
    *out = new psc_runner{
        std::make_unique<pscalar::ScriptRunner>(*std::move(options))};
    return Ok();
  });
}

psc_status psc_runner_exec_line(psc_runner* runner, const char* line,
                                char** report) {
  if (runner == nullptr) return NullArg("runner");
  if (line == nullptr) return NullArg("line");
  if (report == nullptr) return NullArg("report");
  return Guard([&] {
    auto step = pscalar::TranslateReplLine(line);
    if (!step.ok()) return Fail(step.status());
    *report = step->is_null() ? nullptr
                              : Dup(runner->runner->Execute(*step).dump());
    return Ok();
  });
}

psc_status psc_runner_exec_step(psc_runner* runner, const char* step_json,
                                char** report) {
  if (runner == nullptr) return NullArg("runner");
  if (report == nullptr) return NullArg("report");
  return Guard([&] {
    auto step = ParseObject(step_json);
    if (!step.ok()) return Fail(step.status());
    *report = Dup(runner->runner->Execute(*step).dump());
    return Ok();
  });
}

psc_status psc_runner_snapshot(const psc_runner* runner, char** json) {
  if (runner == nullptr) return NullArg("runner");
  if (json == nullptr) return NullArg("json");
  return Guard([&] {
    *json = Dup(runner->runner->Snapshot().dump());
    return Ok();
  });
}

void psc_runner_destroy(psc_runner* runner) { delete runner; }

psc_status psc_run_script(const char* path, const char* options_json,
                          char** report, int* passed) {
  if (path == nullptr) return NullArg("path");
  if (report == nullptr) return NullArg("report");
  if (passed == nullptr) return NullArg("passed");
  return Guard([&] {
    auto options = RunnerOptions(options_json);
    if (!options.ok()) return Fail(options.status());
    auto result = pscalar::RunScriptFile(path, *std::move(options));
    if (!result.ok()) return Fail(result.status());
    *report = Dup(result->Text());
    *passed = result->passed ? 1 : 0;
    return Ok();
  });
}

}  // extern "C"

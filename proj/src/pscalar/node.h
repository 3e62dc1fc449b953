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

#ifndef PSCALAR_NODE_H_
#define PSCALAR_NODE_H_

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "pscalar/accountant.h"
#include "pscalar/csv_ingest.h"
#include "pscalar/ledger_journal.h"
#include "pscalar/mechanism.h"
#include "pscalar/wire.h"

namespace pscalar {

struct NodeOptions {
  BudgetPolicy policy;
  // One ledger for all users instead of one per user.
  bool shared_ledger = false;
  // Append-only ledger journal; replayed on startup. Empty disables it.
  std::string journal_path;
  // Audit events are appended here as JSON lines. Empty keeps them in memory.
  std::string audit_path;
  // Seeds every session's noise source deterministically. Absent: entropy.
  std::optional<std::uint64_t> seed;
  // Scan every outbound response for confined values.
  bool check_confinement = true;
  PolynomialLimits limits;
  SensitivityOptions sensitivity;
  std::function<std::int64_t()> clock;
};

// Random 128-bit token as 32 lowercase hex digits.
std::string GenerateApiKey();

// The data-owner side: datasets, users, per-session object stores and budget
// enforcement. Handle() may be called concurrently for different sessions.
class Node {
 public:
  static absl::StatusOr<std::unique_ptr<Node>> Create(NodeOptions options);
  ~Node();

  // Ingestion must finish before sessions open.
  absl::Status AddDataset(Dataset dataset);
  absl::Status IngestCsv(std::string_view spec);
  absl::Status AddUser(const std::string& name, const std::string& key);

  std::uint64_t OpenSession();
  void CloseSession(std::uint64_t session);

  Json Handle(std::uint64_t session, const Json& request);
  // Parses one request line and returns the serialized response line.
  std::string HandleLine(std::uint64_t session, std::string_view line);

  std::vector<Json> AuditLog() const;
  // "ledger_id\tentity\trho" lines, sorted; for tests and the owner CLI.
  std::string SerializeLedgers() const;
  std::uint64_t confinement_violations() const {
    return confinement_violations_.load();
  }
  const NodeOptions& options() const { return options_; }

 private:
  struct User {
    std::string name;
    std::string ledger_id;
    std::uint64_t sessions_opened = 0;
  };
  struct LedgerSlot {
    std::mutex mu;
    PrivacyLedger ledger;
  };
  struct Session {
    std::mutex mu;
    const User* user = nullptr;
    std::optional<GaussianNoiseSource> noise;
    std::optional<PrivacyLedger> simulated;
    std::uint64_t simulated_publishes = 0;
  };
  struct Object {
    std::shared_ptr<const PrivateScalar> scalar;
    std::uint64_t owner;
  };

  explicit Node(NodeOptions options);

  std::shared_ptr<Session> FindSession(std::uint64_t id);
  LedgerSlot& SlotFor(const std::string& ledger_id);
  std::int64_t Now() const;
  void Audit(Json event);

  Json Dispatch(std::uint64_t sid, Session& s, const Json& req);
  Json OpAuth(Session& s, std::uint64_t sid, const Json& req);
  Json OpListDatasets(const Json& req);
  Json OpGetRoots(std::uint64_t sid, const Json& req);
  Json OpBinop(std::uint64_t sid, const Json& req);
  Json OpUnop(std::uint64_t sid, const Json& req);
  Json OpDescribe(std::uint64_t sid, const Json& req);
  Json OpPublish(std::uint64_t sid, Session& s, const Json& req);
  Json OpSimulate(std::uint64_t sid, Session& s, const Json& req);
  Json OpCalibrate(std::uint64_t sid, Session& s, const Json& req);
  Json OpRemaining(Session& s, const Json& req);
  Json OpForkSim(Session& s, const Json& req);
  Json OpDrop(std::uint64_t sid, const Json& req);

  // Resolves a handle owned by `sid`; on failure fills `error`.
  std::shared_ptr<const PrivateScalar> Lookup(std::uint64_t sid, const Json& req,
                                              const char* key, Json* error);
  std::uint64_t Store(std::uint64_t sid, PrivateScalar scalar);
  PrivacyLedger& SimulatedLedger(Session& s);

  NodeOptions options_;
  std::unique_ptr<LedgerJournal> journal_;

  // Written during ingestion only.
  std::vector<Dataset> datasets_;
  std::set<std::string, std::less<>> entities_;

  mutable std::mutex users_mu_;
  std::map<std::string, std::string> user_by_key_;
  std::map<std::string, std::unique_ptr<User>> users_;

  mutable std::mutex ledgers_mu_;
  std::map<std::string, std::unique_ptr<LedgerSlot>> ledgers_;
  std::atomic<std::uint64_t> next_publish_id_{1};

  std::mutex sessions_mu_;
  std::map<std::uint64_t, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_session_ = 1;

  mutable std::shared_mutex objects_mu_;
  std::map<std::uint64_t, Object> objects_;
  std::uint64_t next_handle_ = 1;

  mutable std::mutex audit_mu_;
  std::vector<Json> audit_;
  std::atomic<std::uint64_t> confinement_violations_{0};
};

}  // namespace pscalar

#endif  // PSCALAR_NODE_H_

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

#ifndef PSCALAR_LEDGER_JOURNAL_H_
#define PSCALAR_LEDGER_JOURNAL_H_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "pscalar/accountant.h"

namespace pscalar {

// Journal line format, tab separated, one ledger entry per line:
//
//   <ledger id> <publish id> <entity> <rho as %.17g> <unix time ms>
//
// Lines are appended and fsync'ed before a release is answered, so replaying
// the file after a crash never under-counts what was released.
struct JournalRecord {
  std::string ledger_id;
  LedgerEntry entry;
  std::int64_t timestamp_ms = 0;
};

std::string FormatJournalLine(const JournalRecord& record);
absl::StatusOr<JournalRecord> ParseJournalLine(std::string_view line);

class LedgerJournal {
 public:
  static absl::StatusOr<std::unique_ptr<LedgerJournal>> Open(
      const std::string& path);
  ~LedgerJournal();
  LedgerJournal(const LedgerJournal&) = delete;
  LedgerJournal& operator=(const LedgerJournal&) = delete;

  // Writes all entries of one release and flushes them to stable storage.
  // Thread-safe.
  absl::Status Append(std::string_view ledger_id,
                      std::span<const LedgerEntry> entries,
                      std::int64_t timestamp_ms);

  const std::string& path() const { return path_; }

 private:
  LedgerJournal(std::string path, int fd) : path_(std::move(path)), fd_(fd) {}

  std::string path_;
  int fd_;
  std::mutex mu_;
};

// A missing file reads as empty. A final line without a newline is a write
// torn by a crash before the release was answered, and is ignored; Open()
// removes it.
absl::StatusOr<std::vector<JournalRecord>> ReadJournal(const std::string& path);

// Rebuilds every ledger in the journal by applying records in file order.
absl::StatusOr<std::map<std::string, PrivacyLedger>> ReplayJournal(
    const std::string& path);

}  // namespace pscalar

#endif  // PSCALAR_LEDGER_JOURNAL_H_

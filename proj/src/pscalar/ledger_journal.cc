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

#include "pscalar/ledger_journal.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"

namespace pscalar {

std::string FormatJournalLine(const JournalRecord& r) {
  return absl::StrFormat("%s\t%d\t%s\t%.17g\t%d\n", r.ledger_id,
                         r.entry.publish_id, r.entry.entity, r.entry.rho,
                         r.timestamp_ms);
}

absl::StatusOr<JournalRecord> ParseJournalLine(std::string_view line) {
  const absl::string_view text(line.data(), line.size());
  std::vector<absl::string_view> fields = absl::StrSplit(text, '\t');
  if (fields.size() != 5) {
    return absl::DataLossError(
        absl::StrCat("journal line has ", fields.size(), " fields, want 5"));
  }
  JournalRecord r;
  r.ledger_id = std::string(fields[0]);
  r.entry.entity = std::string(fields[2]);
  if (!absl::SimpleAtoi(fields[1], &r.entry.publish_id) ||
      !absl::SimpleAtod(fields[3], &r.entry.rho) ||
      !absl::SimpleAtoi(fields[4], &r.timestamp_ms) ||
      !std::isfinite(r.entry.rho) || r.entry.rho < 0) {
    return absl::DataLossError(absl::StrCat("malformed journal line: ", text));
  }
  return r;
}

namespace {

// Bytes of `path` up to and including its last newline. A crash during
// Append can leave a final line without one; that release was never answered.
absl::StatusOr<std::pair<std::string, std::size_t>> ReadComplete(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::pair<std::string, std::size_t>();
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) {
    return absl::DataLossError(absl::StrCat("cannot read journal ", path));
  }
  const std::size_t total = text.size();
  const std::size_t nl = text.rfind('\n');
  text.resize(nl == std::string::npos ? 0 : nl + 1);
  return std::pair(std::move(text), total);
}

}  // namespace

absl::StatusOr<std::unique_ptr<LedgerJournal>> LedgerJournal::Open(
    const std::string& path) {
  auto existing = ReadComplete(path);
  if (!existing.ok()) return existing.status();
  if (existing->first.size() < existing->second &&
      ::truncate(path.c_str(), static_cast<off_t>(existing->first.size())) != 0) {
    return absl::UnavailableError(absl::StrCat(
        "cannot trim torn journal tail of ", path, ": ", std::strerror(errno)));
  }
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC,
                        0600);
  if (fd < 0) {
    return absl::UnavailableError(absl::StrCat(
        "cannot open journal ", path, ": ", std::strerror(errno)));
  }
  return std::unique_ptr<LedgerJournal>(new LedgerJournal(path, fd));
}

LedgerJournal::~LedgerJournal() { ::close(fd_); }

absl::Status LedgerJournal::Append(std::string_view ledger_id,
                                   std::span<const LedgerEntry> entries,
                                   std::int64_t timestamp_ms) {
  if (entries.empty()) return absl::OkStatus();
  std::string buf;
  for (const LedgerEntry& e : entries) {
    buf += FormatJournalLine({std::string(ledger_id), e, timestamp_ms});
  }
  std::lock_guard lock(mu_);
  std::size_t written = 0;
  while (written < buf.size()) {
    const ssize_t n = ::write(fd_, buf.data() + written, buf.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      return absl::UnavailableError(
          absl::StrCat("journal write failed: ", std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) {
    return absl::UnavailableError(
        absl::StrCat("journal fsync failed: ", std::strerror(errno)));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<JournalRecord>> ReadJournal(const std::string& path) {
  std::vector<JournalRecord> out;
  auto complete = ReadComplete(path);
  if (!complete.ok()) return complete.status();
  std::istringstream in(complete->first);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto r = ParseJournalLine(line);
    if (!r.ok()) {
      return absl::DataLossError(
          absl::StrCat(path, ":", line_no, ": ", r.status().message()));
    }
    out.push_back(*std::move(r));
  }
  return out;
}

absl::StatusOr<std::map<std::string, PrivacyLedger>> ReplayJournal(
    const std::string& path) {
  auto records = ReadJournal(path);
  if (!records.ok()) return records.status();
  std::map<std::string, PrivacyLedger> ledgers;
  for (const JournalRecord& r : *records) ledgers[r.ledger_id].Apply(r.entry);
  return ledgers;
}

}  // namespace pscalar

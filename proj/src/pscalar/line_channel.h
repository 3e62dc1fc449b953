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

#ifndef PSCALAR_LINE_CHANNEL_H_
#define PSCALAR_LINE_CHANNEL_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"

namespace pscalar {

// Newline-delimited messages over a connected stream socket. Owns the fd.
class LineChannel {
 public:
  explicit LineChannel(int fd) : fd_(fd) {}
  ~LineChannel();
  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;

  // Next line without its terminator; nullopt on orderly end of stream.
  absl::StatusOr<std::optional<std::string>> ReadLine(
      std::size_t max_bytes = 64 << 20);
  absl::Status WriteLine(std::string_view line);
  // Unblocks a pending ReadLine from another thread.
  void Shutdown();

  int fd() const { return fd_; }

 private:
  int fd_;
  std::string buffer_;
};

// TCP connect to host:port.
absl::StatusOr<int> ConnectTcp(const std::string& host, int port);

// Splits "host:port"; a bare port means localhost.
absl::Status ParseAddress(std::string_view addr, std::string* host, int* port);

}  // namespace pscalar

#endif  // PSCALAR_LINE_CHANNEL_H_

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

#ifndef PSCALAR_SERVER_H_
#define PSCALAR_SERVER_H_

#include <condition_variable>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "absl/status/statusor.h"
#include "pscalar/line_channel.h"
#include "pscalar/node.h"

namespace pscalar {

// Serves a Node over TCP, one thread per connection and one node session per
// connection.
class Server {
 public:
  // Binds and starts accepting. Port 0 picks a free port.
  static absl::StatusOr<std::unique_ptr<Server>> Start(Node* node,
                                                       const std::string& host,
                                                       int port);
  ~Server();

  int port() const { return port_; }
  // Closes the listener and every connection, then joins all threads.
  void Stop();
  // Blocks until Stop() has been called.
  void Wait();

 private:
  struct Connection {
    std::unique_ptr<LineChannel> channel;
    std::thread thread;
    bool done = false;
  };

  Server(Node* node, int listen_fd, int port)
      : node_(node), listen_fd_(listen_fd), port_(port) {}
  void AcceptLoop();
  void Serve(Connection* conn);
  void ReapFinished();

  Node* node_;
  int listen_fd_;
  int port_;
  std::thread accept_thread_;

  std::mutex mu_;
  std::condition_variable stopped_cv_;
  bool stopping_ = false;
  bool stopped_ = false;
  std::list<Connection> connections_;
};

}  // namespace pscalar

#endif  // PSCALAR_SERVER_H_

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

// pscalar: data-owner node and data-scientist client.
//
//   pscalar node serve --data ages.csv --eps 3 --users users.tsv
//   pscalar node users add --name bob --users users.tsv
//   pscalar node audit --log audit.jsonl
//   pscalar client run demo_mean.script --addr 127.0.0.1:7070 --key <k>
//   pscalar client repl --addr 127.0.0.1:7070
//
// The client reads its key from PSCALAR_API_KEY unless --key is given.

#include <signal.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pscalar.h"

namespace {

using Json = nlohmann::json;

constexpr const char* kKeyEnv = "PSCALAR_API_KEY";

int Report(psc_status status, const char* what) {
  std::fprintf(stderr, "pscalar: %s: %s\n", what, psc_last_error());
  return status == PSC_OK ? 0 : 2;
}

// Owns a C string from the library.
struct CString {
  char* p = nullptr;
  ~CString() { psc_string_free(p); }
};

// Splits "a=x,b=y" style flag values into a map.
std::map<std::string, std::string> ParsePairs(
    const std::vector<std::string>& items, const std::string& flag) {
  std::map<std::string, std::string> out;
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw CLI::ValidationError(flag, "expected name=key, got '" + item + "'");
    }
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

struct ServeArgs {
  std::vector<std::string> data;
  std::string host = "127.0.0.1";
  int port = 7070;
  double eps = 3;
  double delta = 1e-6;
  bool shared_ledger = false;
  std::string journal;
  std::string audit;
  std::string users;
  std::vector<std::string> user_keys;
  std::optional<std::uint64_t> seed;
};

int Serve(const ServeArgs& args) {
  Json options{{"eps", args.eps},
               {"delta", args.delta},
               {"shared_ledger", args.shared_ledger}};
  if (!args.journal.empty()) options["journal"] = args.journal;
  if (!args.audit.empty()) options["audit"] = args.audit;
  if (args.seed) options["seed"] = *args.seed;

  psc_node* node = nullptr;
  if (psc_status s = psc_node_create(options.dump().c_str(), &node); s != PSC_OK) {
    return Report(s, "node");
  }
  auto fail = [&](psc_status s, const char* what) {
    psc_node_destroy(node);
    return Report(s, what);
  };
  for (const std::string& spec : args.data) {
    if (psc_status s = psc_node_ingest_csv(node, spec.c_str()); s != PSC_OK) {
      return fail(s, spec.c_str());
    }
  }
  if (!args.users.empty()) {
    if (psc_status s = psc_node_load_users(node, args.users.c_str()); s != PSC_OK) {
      return fail(s, args.users.c_str());
    }
  }
  for (const auto& [name, key] : ParsePairs(args.user_keys, "--user")) {
    if (psc_status s = psc_node_add_user(node, name.c_str(), key.c_str());
        s != PSC_OK) {
      return fail(s, name.c_str());
    }
  }

  // Block termination signals in every thread; this one waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  int port = 0;
  if (psc_status s = psc_node_listen(node, args.host.c_str(), args.port, &port);
      s != PSC_OK) {
    return fail(s, "listen");
  }
  std::printf("listening on %s:%d\n", args.host.c_str(), port);
  std::fflush(stdout);

  int sig = 0;
  sigwait(&signals, &sig);
  psc_node_stop(node);
  psc_node_destroy(node);
  return 0;
}

std::string ResolveKey(const std::string& flag) {
  if (!flag.empty()) return flag;
  const char* env = std::getenv(kKeyEnv);
  return env != nullptr ? env : "";
}

Json RunnerOptions(const std::string& addr, const std::string& key,
                   const std::map<std::string, std::string>& keys) {
  std::string host = "127.0.0.1";
  std::string port_text = addr;
  if (const auto colon = addr.rfind(':'); colon != std::string::npos) {
    host = addr.substr(0, colon);
    port_text = addr.substr(colon + 1);
  }
  int port = 0;
  try {
    port = std::stoi(port_text);
  } catch (const std::exception&) {
    throw CLI::ValidationError("--addr", "expected host:port");
  }
  return Json{{"host", host}, {"port", port}, {"key", key}, {"keys", keys}};
}

int RunScript(const std::string& path, const Json& options,
              const std::string& report_path) {
  CString report;
  int passed = 0;
  if (psc_status s = psc_run_script(path.c_str(), options.dump().c_str(),
                                    &report.p, &passed);
      s != PSC_OK) {
    return Report(s, path.c_str());
  }
  std::fputs(report.p, stdout);
  if (!report_path.empty()) {
    FILE* f = std::fopen(report_path.c_str(), "w");
    if (f == nullptr) {
      std::fprintf(stderr, "pscalar: cannot write %s\n", report_path.c_str());
      return 2;
    }
    std::fputs(report.p, f);
    std::fclose(f);
  }
  return passed ? 0 : 1;
}

int Repl(const Json& options) {
  psc_runner* runner = nullptr;
  if (psc_status s = psc_runner_create(options.dump().c_str(), &runner);
      s != PSC_OK) {
    return Report(s, "client");
  }
  std::string line;
  bool all_ok = true;
  while (true) {
    std::fputs("> ", stderr);
    if (!std::getline(std::cin, line)) break;
    if (line == "quit" || line == "exit") break;
    CString report;
    if (psc_status s = psc_runner_exec_line(runner, line.c_str(), &report.p);
        s != PSC_OK) {
      std::fprintf(stderr, "error: %s\n", psc_last_error());
      all_ok = false;
      continue;
    }
    if (report.p == nullptr) continue;
    std::puts(report.p);
    std::fflush(stdout);
    if (!Json::parse(report.p).value("ok", false)) all_ok = false;
  }
  psc_runner_destroy(runner);
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private scalar node and client"};
  app.require_subcommand(1);
  int exit_code = 0;

  CLI::App* node = app.add_subcommand("node", "Data-owner commands");
  node->require_subcommand(1);

  ServeArgs serve;
  std::uint64_t seed = 0;
  CLI::App* serve_cmd = node->add_subcommand("serve", "Serve datasets");
  serve_cmd->add_option("--data", serve.data,
                        "CSV dataset: path.csv or path.csv#col=lo..hi,...")
      ->required();
  serve_cmd->add_option("--host", serve.host, "Listen address");
  serve_cmd->add_option("--port", serve.port, "Listen port; 0 picks one")
      ->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--eps", serve.eps, "Per-entity epsilon cap");
  serve_cmd->add_option("--delta", serve.delta, "Delta of the epsilon cap");
  serve_cmd->add_flag("--shared-ledger", serve.shared_ledger,
                      "One ledger for all users");
  serve_cmd->add_option("--journal", serve.journal, "Ledger journal file");
  serve_cmd->add_option("--audit", serve.audit, "Audit log file (JSON lines)");
  serve_cmd->add_option("--users", serve.users, "Users file");
  serve_cmd->add_option("--user", serve.user_keys, "Extra user as name=key")
      ->delimiter(',');
  CLI::Option* seed_opt = serve_cmd->add_option("--seed", seed, "Noise seed");
  serve_cmd->callback([&] {
    if (seed_opt->count() > 0) serve.seed = seed;
    exit_code = Serve(serve);
  });

  CLI::App* users = node->add_subcommand("users", "Manage users");
  users->require_subcommand(1);
  std::string user_name, users_path = "users.tsv";
  CLI::App* users_add = users->add_subcommand("add", "Add a user; prints the key");
  users_add->add_option("--name", user_name, "User name")->required();
  users_add->add_option("--users", users_path, "Users file");
  users_add->callback([&] {
    CString key;
    if (psc_status s = psc_users_add(users_path.c_str(), user_name.c_str(), &key.p);
        s != PSC_OK) {
      exit_code = Report(s, "users add");
      return;
    }
    std::puts(key.p);
  });

  std::string audit_path = "audit.jsonl";
  CLI::App* audit = node->add_subcommand("audit", "Print the audit log");
  audit->add_option("--log", audit_path, "Audit log file");
  audit->callback([&] {
    CString log;
    if (psc_status s = psc_audit_read(audit_path.c_str(), &log.p); s != PSC_OK) {
      exit_code = Report(s, "audit");
      return;
    }
    std::fputs(log.p, stdout);
  });

  CLI::App* client = app.add_subcommand("client", "Data-scientist commands");
  client->require_subcommand(1);
  std::string addr = "127.0.0.1:7070", key_flag, report_path, script_path;
  std::vector<std::string> session_keys;

  CLI::App* run = client->add_subcommand("run", "Run a scenario script");
  run->add_option("script", script_path, "Script file")->required();
  run->add_option("--addr", addr, "Node address host:port");
  run->add_option("--key", key_flag, std::string("API key; default $") + kKeyEnv);
  run->add_option("--session-key", session_keys,
                  "Key for a named script session, label=key")
      ->delimiter(',');
  run->add_option("--report", report_path, "Also write the report here");
  run->callback([&] {
    exit_code = RunScript(
        script_path, RunnerOptions(addr, ResolveKey(key_flag),
                                   ParsePairs(session_keys, "--session-key")),
        report_path);
  });

  CLI::App* repl = client->add_subcommand("repl", "Interactive session");
  repl->add_option("--addr", addr, "Node address host:port");
  repl->add_option("--key", key_flag, std::string("API key; default $") + kKeyEnv);
  repl->callback([&] {
    exit_code = Repl(RunnerOptions(addr, ResolveKey(key_flag), {}));
  });

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}

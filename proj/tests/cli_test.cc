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

// Drives the pscalar binary as a user would.

#include <signal.h>

#include <atomic>
#include <chrono>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "pscalar.h"
#include "subprocess.h"
#include "test_util.h"

namespace {

using Json = nlohmann::json;
using pscalar::testing::Child;
using pscalar::testing::DemoPath;
using pscalar::testing::RunCommand;
using pscalar::testing::ServeProcess;
using pscalar::testing::TempDir;
using ::testing::HasSubstr;

const std::string kCli = PSCALAR_CLI;

std::string Trim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::vector<Json> JsonLines(const std::string& text) {
  std::vector<Json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(Json::parse(line));
  }
  return out;
}

TEST(CliTest, UsersAddThenServeThenRun) {
  TempDir dir;
  const std::string users = dir.File("users.tsv");
  auto added =
      RunCommand({kCli, "node", "users", "add", "--name", "dana", "--users", users});
  ASSERT_EQ(added.exit_code, 0);
  const std::string key = Trim(added.out);
  EXPECT_EQ(key.size(), 32u);
  EXPECT_NE(RunCommand({kCli, "node", "users", "add", "--name", "dana", "--users", users})
                .exit_code,
            0);

  ServeProcess node(kCli, {"--data", DemoPath("ages.csv"), "--users", users, "--audit",
                           dir.File("audit.jsonl"), "--seed", "4"});
  ASSERT_GT(node.port(), 0);

  // Key from the environment.
  auto run = RunCommand({kCli, "client", "run", DemoPath("demo_mean.script"), "--addr",
                         node.addr(), "--report", dir.File("report.jsonl")},
                        {"PSCALAR_API_KEY=" + key});
  EXPECT_EQ(run.exit_code, 0) << run.out;
  EXPECT_EQ(pscalar::testing::ReadAll(dir.File("report.jsonl")), run.out);
  const auto lines = JsonLines(run.out);
  ASSERT_FALSE(lines.empty());
  EXPECT_TRUE(lines.back()["summary"]["passed"].get<bool>());

  // Second run hits the exhausted budget: a failed script, exit 1.
  auto again = RunCommand({kCli, "client", "run", DemoPath("demo_mean.script"), "--addr",
                           node.addr(), "--key", key});
  EXPECT_EQ(again.exit_code, 1);

  auto bad_key = RunCommand({kCli, "client", "run", DemoPath("demo_mean.script"),
                             "--addr", node.addr(), "--key", "nope"});
  EXPECT_EQ(bad_key.exit_code, 1);
  EXPECT_THAT(bad_key.out, HasSubstr("unauthenticated"));

  auto audit = RunCommand({kCli, "node", "audit", "--log", dir.File("audit.jsonl")});
  ASSERT_EQ(audit.exit_code, 0);
  int released = 0;
  for (const Json& e : JsonLines(audit.out)) {
    if (e["event"] == "publish" && e["status"] == "released") ++released;
  }
  EXPECT_EQ(released, 2);

  node.child().Kill(SIGTERM);
  EXPECT_EQ(node.child().Wait(), 0);
}

TEST(CliTest, BadInvocationsFail) {
  EXPECT_NE(RunCommand({kCli}).exit_code, 0);
  EXPECT_NE(RunCommand({kCli, "node", "serve"}).exit_code, 0);
  EXPECT_NE(RunCommand({kCli, "node", "serve", "--data", "/nonexistent.csv"}).exit_code,
            0);
  EXPECT_NE(RunCommand({kCli, "node", "serve", "--data", DemoPath("ages.csv"), "--user",
                        "novalue"})
                .exit_code,
            0);
  EXPECT_EQ(
      RunCommand({kCli, "client", "run", "/nonexistent.script", "--key", "k"}).exit_code,
      2);
  EXPECT_NE(RunCommand({kCli, "node", "audit", "--log", "/nonexistent.jsonl"}).exit_code,
            0);
}

TEST(CliTest, OverlapDemoWithSessionKeys) {
  ServeProcess node(
      kCli, {"--data", DemoPath("hospital_a.csv"), "--data", DemoPath("hospital_b.csv"),
             "--shared-ledger", "--user", "alice=ka,bob=kb"});
  ASSERT_GT(node.port(), 0);
  auto run =
      RunCommand({kCli, "client", "run", DemoPath("demo_overlap.script"), "--addr",
                  node.addr(), "--session-key", "alice=ka", "--session-key", "bob=kb"});
  EXPECT_EQ(run.exit_code, 0) << run.out;
}

TEST(CliTest, ReplRunsCommands) {
  ServeProcess node(kCli, {"--data", DemoPath("ages.csv"), "--user", "eve=ke"});
  ASSERT_GT(node.port(), 0);
  TempDir dir;
  const std::string input = dir.Write(
      "in.txt", "load ages\nlet m = mean ages\n\nsimulate m 5\nbudget min\nquit\n");
  // The REPL reads stdin; a shell redirect keeps the helper simple.
  auto run =
      RunCommand({"/bin/sh", "-c",
                  kCli + " client repl --addr " + node.addr() + " --key ke < " + input});
  EXPECT_EQ(run.exit_code, 0) << run.out;
  const auto lines = JsonLines(run.out);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[2]["step"], "simulate");
  EXPECT_EQ(lines[3]["remaining"], 3.0);
}

std::map<std::string, double> JournalRho(const std::string& path) {
  std::map<std::string, double> rho;
  std::istringstream in(pscalar::testing::ReadAll(path));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string x; std::getline(fields, x, '\t');) f.push_back(x);
    if (f.size() == 5) rho[f[2]] += std::stod(f[3]);
  }
  return rho;
}

// Kills the node with SIGKILL while a client is publishing in a loop. After a
// restart on the same journal, every acknowledged release must be counted.
TEST(CliTest, KilledNodeNeverUndercountsOnRestart) {
  TempDir dir;
  const std::string journal = dir.File("journal.tsv");
  const std::vector<std::string> args = {
      "--data", DemoPath("ages.csv"), "--journal", journal, "--user", "fay=kf"};
  std::atomic<int> acknowledged{0};
  std::atomic<bool> stopped{false};
  double acknowledged_rho = 0;
  {
    ServeProcess node(kCli, args);
    ASSERT_GT(node.port(), 0);
    psc_runner* runner = nullptr;
    ASSERT_EQ(psc_runner_create(Json{{"port", node.port()}, {"key", "kf"}}.dump().c_str(),
                                &runner),
              PSC_OK);
    for (const char* line : {"load ages", "let m = mean ages"}) {
      char* report = nullptr;
      ASSERT_EQ(psc_runner_exec_line(runner, line, &report), PSC_OK);
      psc_string_free(report);
    }
    std::thread publisher([&] {
      while (true) {
        char* report = nullptr;
        if (psc_runner_exec_line(runner, "publish m 40", &report) != PSC_OK) break;
        Json r = Json::parse(report);
        psc_string_free(report);
        if (!r["ok"].get<bool>()) break;
        acknowledged_rho += r["total_rho"].get<double>();
        ++acknowledged;
      }
      stopped = true;
    });
    while (acknowledged < 20 && !stopped) {
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    node.child().Kill(SIGKILL);
    node.child().Wait();
    publisher.join();
    psc_runner_destroy(runner);
  }
  ASSERT_GE(acknowledged.load(), 20);

  ServeProcess restarted(kCli, args);
  ASSERT_GT(restarted.port(), 0);
  double replayed = 0;
  for (const auto& [entity, rho] : JournalRho(journal)) replayed += rho;
  EXPECT_GE(replayed, acknowledged_rho * (1 - 1e-12));
  // At most the one in-flight release was written without being answered.
  const double per_release = acknowledged_rho / acknowledged;
  EXPECT_LE(replayed, acknowledged_rho + per_release * (1 + 1e-9));

  // The restarted node enforces the replayed ledger.
  auto budget = RunCommand({"/bin/sh", "-c",
                            "echo 'budget min' | " + kCli + " client repl --addr " +
                                restarted.addr() + " --key kf"});
  const auto lines = JsonLines(budget.out);
  ASSERT_EQ(lines.size(), 1u) << budget.out;
  EXPECT_LT(lines[0]["remaining"].get<double>(), 3);
}

}  // namespace

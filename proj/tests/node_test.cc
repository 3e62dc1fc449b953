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
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "pscalar/ledger_journal.h"
#include "test_util.h"

namespace pscalar {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

constexpr double kDelta = 1e-6;

Dataset MakeDataset(const std::string& name,
                    const std::vector<std::pair<std::string, double>>& rows,
                    double floor = 0, double ceiling = 100) {
  DatasetColumn col{"value", name, {}};
  for (const auto& [entity, v] : rows) {
    col.rows.push_back({entity, EntityInput{v, floor, ceiling}});
  }
  return Dataset{name, {std::move(col)}};
}

Dataset Ages(int n) {
  std::vector<std::pair<std::string, double>> rows;
  for (int i = 1; i <= n; ++i) rows.emplace_back(std::to_string(i), 20 + (i * 7) % 60);
  return MakeDataset("ages", rows, 0, 120);
}

NodeOptions BaseOptions() {
  NodeOptions o;
  o.policy.eps_cap = 3;
  o.policy.delta = kDelta;
  o.seed = 42;
  o.clock = [] { return std::int64_t{1700000000000}; };
  return o;
}

class NodeHarness {
 public:
  explicit NodeHarness(NodeOptions options = BaseOptions()) {
    auto node = Node::Create(std::move(options));
    EXPECT_TRUE(node.ok()) << node.status();
    node_ = *std::move(node);
  }

  Node& node() { return *node_; }

  std::uint64_t Login(const std::string& key) {
    const std::uint64_t sid = node_->OpenSession();
    Json r = Call(sid, {{"op", "auth"}, {"key", key}});
    EXPECT_TRUE(r["ok"].get<bool>()) << r;
    return sid;
  }

  Json Call(std::uint64_t sid, Json req) {
    req["id"] = next_id_++;
    Json r = node_->Handle(sid, req);
    EXPECT_EQ(r["id"], req["id"]);
    return r;
  }

  std::vector<std::uint64_t> Roots(std::uint64_t sid, const std::string& dataset) {
    Json r = Call(sid, {{"op", "get_roots"}, {"dataset", dataset}});
    EXPECT_TRUE(r["ok"].get<bool>()) << r;
    std::vector<std::uint64_t> out;
    for (const Json& root : r["roots"]) out.push_back(root["handle"]);
    return out;
  }

  std::uint64_t Sum(std::uint64_t sid, const std::vector<std::uint64_t>& hs) {
    std::uint64_t acc = hs[0];
    for (std::size_t i = 1; i < hs.size(); ++i) {
      Json r = Call(sid, {{"op", "binop"}, {"kind", "add"}, {"a", acc}, {"b", hs[i]}});
      EXPECT_TRUE(r["ok"].get<bool>()) << r;
      acc = r["handle"];
    }
    return acc;
  }

  std::uint64_t Mean(std::uint64_t sid, const std::vector<std::uint64_t>& hs) {
    Json r = Call(sid, {{"op", "unop"},
                        {"kind", "scale"},
                        {"a", Sum(sid, hs)},
                        {"c", 1.0 / static_cast<double>(hs.size())}});
    return r["handle"];
  }

  double Remaining(std::uint64_t sid, const std::string& entity, bool simulated = false) {
    Json r = Call(
        sid, {{"op", "remaining_budget"}, {"entity", entity}, {"simulated", simulated}});
    EXPECT_TRUE(r["ok"].get<bool>()) << r;
    return r["remaining"];
  }

 private:
  std::unique_ptr<Node> node_;
  std::int64_t next_id_ = 1;
};

std::string ErrorCode(const Json& r) {
  return r.contains("error") ? r["error"]["code"].get<std::string>() : "";
}

TEST(NodeTest, AuthMustComeFirst) {
  NodeHarness h;
  ASSERT_TRUE(h.node().AddDataset(Ages(3)).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k-sam").ok());
  const std::uint64_t sid = h.node().OpenSession();
  EXPECT_EQ(ErrorCode(h.Call(sid, {{"op", "list_datasets"}})), "unauthenticated");
  EXPECT_EQ(ErrorCode(h.Call(sid, {{"op", "auth"}, {"key", "wrong"}})),
            "unauthenticated");
  Json ok = h.Call(sid, {{"op", "auth"}, {"key", "k-sam"}});
  EXPECT_TRUE(ok["ok"].get<bool>());
  EXPECT_EQ(ok["user"], "sam");
  EXPECT_EQ(ErrorCode(h.Call(sid, {{"op", "auth"}, {"key", "k-sam"}})),
            "failed_precondition");
  Json list = h.Call(sid, {{"op", "list_datasets"}});
  ASSERT_TRUE(list["ok"].get<bool>());
  EXPECT_EQ(list["datasets"][0]["name"], "ages");
  EXPECT_EQ(list["datasets"][0]["columns"][0]["rows"], 3);
}

TEST(NodeTest, UsersNeedUniqueNamesAndKeys) {
  NodeHarness h;
  EXPECT_TRUE(h.node().AddUser("a", "k1").ok());
  EXPECT_FALSE(h.node().AddUser("a", "k2").ok());
  EXPECT_FALSE(h.node().AddUser("b", "k1").ok());
  EXPECT_FALSE(h.node().AddUser("", "k3").ok());
}

TEST(NodeTest, GeneratedKeysAre128BitHex) {
  const std::string a = GenerateApiKey(), b = GenerateApiKey();
  EXPECT_EQ(a.size(), 32u);
  EXPECT_EQ(a.find_first_not_of("0123456789abcdef"), std::string::npos);
  EXPECT_NE(a, b);
}

TEST(NodeTest, MalformedRequestsGetErrors) {
  NodeHarness h;
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  Json r = Json::parse(h.node().HandleLine(sid, "{not json"));
  EXPECT_EQ(ErrorCode(r), "invalid_argument");
  EXPECT_TRUE(r["id"].is_null());
  r = Json::parse(h.node().HandleLine(sid, R"({"id": "x", "op": "teleport"})"));
  EXPECT_EQ(r["id"], "x");
  EXPECT_EQ(ErrorCode(r), "unknown_op");
  EXPECT_EQ(ErrorCode(h.Call(sid, {{"op", "binop"}, {"kind", "add"}})),
            "invalid_argument");
  EXPECT_EQ(ErrorCode(h.Call(sid, {{"op", "get_roots"}, {"dataset", "nope"}})),
            "not_found");
}

TEST(NodeTest, BinopReturnsNewHandleWithoutValues) {
  NodeHarness h;
  ASSERT_TRUE(h.node().AddDataset(Ages(2)).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  const auto roots = h.Roots(sid, "ages");
  Json r =
      h.Call(sid, {{"op", "binop"}, {"kind", "add"}, {"a", roots[0]}, {"b", roots[1]}});
  ASSERT_TRUE(r["ok"].get<bool>());
  EXPECT_NE(r["handle"], roots[0]);
  EXPECT_NE(r["handle"], roots[1]);
  EXPECT_EQ(r["degree"], 1);
  EXPECT_EQ(r["entities"], 2);
  EXPECT_FALSE(r.contains("value"));

  Json product =
      h.Call(sid, {{"op", "binop"}, {"kind", "mul"}, {"a", roots[0]}, {"b", roots[1]}});
  EXPECT_EQ(product["degree"], 2);
  Json with_const = h.Call(
      sid, {{"op", "binop"}, {"kind", "sub"}, {"a", {{"const", 10}}}, {"b", roots[1]}});
  EXPECT_TRUE(with_const["ok"].get<bool>()) << with_const;
  Json div =
      h.Call(sid, {{"op", "binop"}, {"kind", "div"}, {"a", roots[0]}, {"b", roots[1]}});
  EXPECT_EQ(ErrorCode(div), "invalid_argument");
  Json pow = h.Call(sid, {{"op", "unop"}, {"kind", "pow"}, {"a", roots[0]}, {"k", 3}});
  EXPECT_EQ(pow["degree"], 3);
}

TEST(NodeTest, HandlesAreIsolatedBetweenSessions) {
  NodeHarness h;
  ASSERT_TRUE(h.node().AddDataset(Ages(5)).ok());
  ASSERT_TRUE(h.node().AddUser("a", "ka").ok());
  ASSERT_TRUE(h.node().AddUser("b", "kb").ok());
  const std::uint64_t sa = h.Login("ka");
  const std::uint64_t sb = h.Login("kb");
  const std::uint64_t sa2 = h.Login("ka");  // same user, other session
  std::vector<std::uint64_t> owned_by_a = h.Roots(sa, "ages");
  owned_by_a.push_back(h.Sum(sa, owned_by_a));
  const std::uint64_t b_root = h.Roots(sb, "ages")[0];

  std::mt19937_64 rng(7);
  const char* ops[] = {"binop",     "unop", "describe", "publish", "simulate_publish",
                       "calibrate", "drop"};
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint64_t foreign = owned_by_a[rng() % owned_by_a.size()];
    const std::string op = ops[rng() % std::size(ops)];
    Json req{{"op", op}};
    if (op == "binop") {
      req["kind"] = "add";
      req["a"] = rng() % 2 ? foreign : b_root;
      req["b"] = req["a"] == foreign ? b_root : foreign;
    } else if (op == "unop") {
      req["kind"] = "neg";
      req["a"] = foreign;
    } else {
      req["handle"] = foreign;
      req["sigma"] = 10;
    }
    const std::uint64_t intruder = rng() % 2 ? sb : sa2;
    EXPECT_EQ(ErrorCode(h.Call(intruder, req)), "forbidden") << req;
  }
  EXPECT_EQ(ErrorCode(h.Call(sb, {{"op", "describe"}, {"handle", 999999}})),
            "unknown_handle");
  // Closing a session releases its handles.
  h.node().CloseSession(sa);
  EXPECT_EQ(ErrorCode(h.Call(sb, {{"op", "describe"}, {"handle", owned_by_a[0]}})),
            "unknown_handle");
}

TEST(NodeTest, PublishHappyPathAdvancesLedger) {
  NodeHarness h;
  ASSERT_TRUE(h.node().AddDataset(Ages(2)).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  const std::uint64_t sum = h.Sum(sid, h.Roots(sid, "ages"));
  Json r = h.Call(sid, {{"op", "publish"}, {"handle", sum}, {"sigma", 100}});
  ASSERT_TRUE(r["ok"].get<bool>()) << r;
  EXPECT_TRUE(r["value"].is_number());
  EXPECT_EQ(r["sigma"], 100.0);
  ASSERT_EQ(r["spends"].size(), 2u);
  for (const Json& s : r["spends"]) {
    EXPECT_FALSE(s.contains("clipped_input"));
    EXPECT_GT(s["rho"].get<double>(), 0);
    EXPECT_EQ(s["lipschitz"], 1.0);
  }
  // Entities "1" and "2" have ages 27 and 34: rho = x^2 / (2 * 100^2).
  std::istringstream ledgers(h.node().SerializeLedgers());
  std::vector<double> rhos;
  for (std::string line; std::getline(ledgers, line);) {
    EXPECT_EQ(line.substr(0, 4), "sam\t");
    rhos.push_back(std::stod(line.substr(line.rfind('\t') + 1)));
  }
  ASSERT_EQ(rhos.size(), 2u);
  EXPECT_DOUBLE_EQ(rhos[0], 27.0 * 27.0 / 20000);
  EXPECT_DOUBLE_EQ(rhos[1], 34.0 * 34.0 / 20000);
  EXPECT_LT(h.Remaining(sid, "1"), 3);
  EXPECT_EQ(ErrorCode(h.Call(sid, {{"op", "publish"}, {"handle", sum}, {"sigma", 0}})),
            "invalid_argument");
}

TEST(NodeTest, RejectedPublishLeavesLedgerAndJournalUntouched) {
  testing::TempDir dir;
  NodeOptions o = BaseOptions();
  o.journal_path = dir.File("journal.tsv");
  NodeHarness h(o);
  ASSERT_TRUE(h.node().AddDataset(Ages(3)).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  const auto roots = h.Roots(sid, "ages");
  ASSERT_TRUE(h.Call(sid, {{"op", "publish"}, {"handle", roots[0]}, {"sigma", 100}})["ok"]
                  .get<bool>());
  const std::string ledgers = h.node().SerializeLedgers();
  const std::string journal = testing::ReadAll(o.journal_path);
  ASSERT_FALSE(journal.empty());

  Json r = h.Call(sid, {{"op", "publish"}, {"handle", h.Sum(sid, roots)}, {"sigma", 1}});
  EXPECT_FALSE(r["ok"].get<bool>());
  EXPECT_EQ(ErrorCode(r), "budget_exceeded");
  ASSERT_TRUE(r.contains("rejection"));
  EXPECT_EQ(r["rejection"]["entities"].size(), 3u);
  EXPECT_EQ(r["rejection"]["projected_eps"].size(), 3u);
  for (const Json& e : r["rejection"]["projected_eps"]) EXPECT_GT(e.get<double>(), 3);
  EXPECT_FALSE(r.contains("value"));
  EXPECT_EQ(h.node().SerializeLedgers(), ledgers);
  EXPECT_EQ(testing::ReadAll(o.journal_path), journal);
}

TEST(NodeTest, ConstantPublishSpendsNothing) {
  NodeHarness h;
  ASSERT_TRUE(h.node().AddDataset(Ages(1)).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  const std::uint64_t root = h.Roots(sid, "ages")[0];
  Json zero = h.Call(sid, {{"op", "binop"}, {"kind", "sub"}, {"a", root}, {"b", root}});
  Json r = h.Call(sid, {{"op", "publish"}, {"handle", zero["handle"]}, {"sigma", 1}});
  ASSERT_TRUE(r["ok"].get<bool>()) << r;
  EXPECT_EQ(h.Remaining(sid, "1"), 3);
}

TEST(NodeTest, RemainingBudgetQueries) {
  NodeHarness h;
  ASSERT_TRUE(h.node().AddDataset(Ages(3)).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  EXPECT_NEAR(h.Remaining(sid, "1"), 3, 1e-9);
  EXPECT_NEAR(h.Remaining(sid, "min"), 3, 1e-9);
  EXPECT_EQ(ErrorCode(h.Call(sid, {{"op", "remaining_budget"}, {"entity", "zz"}})),
            "not_found");

  const auto roots = h.Roots(sid, "ages");
  Json pair =
      h.Call(sid, {{"op", "binop"}, {"kind", "add"}, {"a", roots[0]}, {"b", roots[2]}});
  ASSERT_TRUE(
      h.Call(sid, {{"op", "publish"}, {"handle", pair["handle"]}, {"sigma", 200}})["ok"]
          .get<bool>());
  const double r1 = h.Remaining(sid, "1"), r2 = h.Remaining(sid, "2"),
               r3 = h.Remaining(sid, "3");
  EXPECT_LT(r1, 3);
  EXPECT_LT(r3, 3);
  EXPECT_NEAR(r2, 3, 1e-9);
  Json all = h.Call(sid, {{"op", "remaining_budget"}});
  EXPECT_EQ(all["remaining"]["1"], r1);
  Json min = h.Call(sid, {{"op", "remaining_budget"}, {"entity", "min"}});
  EXPECT_EQ(min["remaining"], std::min({r1, r2, r3}));
  EXPECT_EQ(min["entity"], r1 < r3 ? "1" : "3");
}

TEST(NodeTest, SimulationNeverTouchesRealLedger) {
  testing::TempDir dir;
  NodeOptions o = BaseOptions();
  o.journal_path = dir.File("journal.tsv");
  NodeHarness h(o);
  ASSERT_TRUE(h.node().AddDataset(Ages(10)).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  const std::uint64_t mean = h.Mean(sid, h.Roots(sid, "ages"));
  ASSERT_TRUE(h.Call(sid, {{"op", "publish"}, {"handle", mean}, {"sigma", 20}})["ok"]
                  .get<bool>());
  const std::string journal = testing::ReadAll(o.journal_path);
  const double before = h.Remaining(sid, "min");

  for (int i = 0; i < 10; ++i) {
    Json r = h.Call(sid, {{"op", "simulate_publish"}, {"handle", mean}, {"sigma", 20}});
    ASSERT_TRUE(r["ok"].get<bool>()) << r;
    EXPECT_FALSE(r.contains("value"));
  }
  EXPECT_EQ(h.Remaining(sid, "min"), before);
  EXPECT_LT(h.Remaining(sid, "min", /*simulated=*/true), before);
  EXPECT_EQ(testing::ReadAll(o.journal_path), journal);

  // A new fork starts again from the real ledger.
  ASSERT_TRUE(h.Call(sid, {{"op", "fork_sim"}})["ok"].get<bool>());
  EXPECT_EQ(h.Remaining(sid, "min", /*simulated=*/true), before);
}

TEST(NodeTest, SimulatedDecisionsMatchRealOnes) {
  NodeHarness h;
  ASSERT_TRUE(h.node().AddDataset(Ages(6)).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  const auto roots = h.Roots(sid, "ages");
  std::vector<std::uint64_t> targets = {h.Sum(sid, roots), roots[0], roots[3],
                                        h.Mean(sid, roots)};
  std::mt19937_64 rng(11);
  std::vector<std::pair<std::uint64_t, double>> plan;
  for (int i = 0; i < 40; ++i) {
    plan.emplace_back(targets[rng() % targets.size()], 20 + double(rng() % 200));
  }
  ASSERT_TRUE(h.Call(sid, {{"op", "fork_sim"}})["ok"].get<bool>());
  std::vector<bool> simulated, real;
  for (const auto& [handle, sigma] : plan) {
    Json r =
        h.Call(sid, {{"op", "simulate_publish"}, {"handle", handle}, {"sigma", sigma}});
    simulated.push_back(r["pass"].get<bool>());
  }
  for (const auto& [handle, sigma] : plan) {
    Json r = h.Call(sid, {{"op", "publish"}, {"handle", handle}, {"sigma", sigma}});
    real.push_back(r["ok"].get<bool>());
  }
  EXPECT_EQ(simulated, real);
  EXPECT_NE(std::count(real.begin(), real.end(), false), 0);
  EXPECT_NE(std::count(real.begin(), real.end(), true), 0);
  // Both ledgers end in the same place.
  Json sim_all = h.Call(sid, {{"op", "remaining_budget"}, {"simulated", true}});
  Json real_all = h.Call(sid, {{"op", "remaining_budget"}});
  EXPECT_EQ(sim_all["remaining"], real_all["remaining"]);
}

TEST(NodeTest, RealPublishAfterSimulationMatchesTwinWithout) {
  NodeHarness with_sim, without_sim;
  for (NodeHarness* h : {&with_sim, &without_sim}) {
    ASSERT_TRUE(h->node().AddDataset(Ages(20)).ok());
    ASSERT_TRUE(h->node().AddUser("sam", "k").ok());
  }
  const std::uint64_t s1 = with_sim.Login("k"), s2 = without_sim.Login("k");
  const std::uint64_t m1 = with_sim.Mean(s1, with_sim.Roots(s1, "ages"));
  const std::uint64_t m2 = without_sim.Mean(s2, without_sim.Roots(s2, "ages"));
  for (int i = 0; i < 100; ++i) {
    with_sim.Call(s1, {{"op", "simulate_publish"}, {"handle", m1}, {"sigma", 3}});
  }
  Json a = with_sim.Call(s1, {{"op", "publish"}, {"handle", m1}, {"sigma", 3}});
  Json b = without_sim.Call(s2, {{"op", "publish"}, {"handle", m2}, {"sigma", 3}});
  a.erase("id");
  b.erase("id");
  EXPECT_EQ(a, b);
  EXPECT_EQ(with_sim.node().SerializeLedgers(), without_sim.node().SerializeLedgers());
}

TEST(NodeTest, AutoSigmaExhaustsTightestEntity) {
  NodeHarness h;
  ASSERT_TRUE(h.node().AddDataset(Ages(4)).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  const std::uint64_t sum = h.Sum(sid, h.Roots(sid, "ages"));
  Json cal = h.Call(sid, {{"op", "calibrate"}, {"handle", sum}});
  ASSERT_TRUE(cal["ok"].get<bool>()) << cal;
  Json r = h.Call(sid, {{"op", "publish"}, {"handle", sum}, {"sigma", "auto"}});
  ASSERT_TRUE(r["ok"].get<bool>()) << r;
  EXPECT_EQ(r["sigma"], cal["sigma"]);
  EXPECT_LT(h.Remaining(sid, "min"), 1e-3);
  Json after = h.Call(sid, {{"op", "calibrate"}, {"handle", sum}});
  // Only the calibration slack is left, so the next sigma is far larger.
  ASSERT_TRUE(after["ok"].get<bool>()) << after;
  EXPECT_GT(after["sigma"].get<double>(), 100 * cal["sigma"].get<double>());
}

TEST(NodeTest, AuditRecordsPublishesAndRejections) {
  NodeHarness empty;
  EXPECT_TRUE(empty.node().AuditLog().empty());

  NodeHarness h;
  ASSERT_TRUE(h.node().AddDataset(Ages(2)).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  const std::uint64_t root = h.Roots(sid, "ages")[0];
  for (int i = 0; i < 3; ++i) {
    ASSERT_TRUE(h.Call(sid, {{"op", "publish"}, {"handle", root}, {"sigma", 120}})["ok"]
                    .get<bool>());
  }
  EXPECT_FALSE(h.Call(sid, {{"op", "publish"}, {"handle", root}, {"sigma", 0.5}})["ok"]
                   .get<bool>());
  std::vector<Json> publishes;
  for (const Json& e : h.node().AuditLog()) {
    if (e["event"] == "publish") publishes.push_back(e);
  }
  ASSERT_EQ(publishes.size(), 4u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(publishes[i]["status"], "released");
    EXPECT_EQ(publishes[i]["spends"].size(), 1u);
    EXPECT_EQ(publishes[i]["user"], "sam");
  }
  EXPECT_EQ(publishes[3]["status"], "rejected");
  EXPECT_EQ(publishes[3]["recorded_rho"], 0);
  EXPECT_DOUBLE_EQ(publishes[2]["cumulative_rho"]["1"].get<double>(),
                   3 * 27.0 * 27.0 / (2 * 120.0 * 120.0));
}

TEST(NodeTest, AuditFileGetsJsonLines) {
  testing::TempDir dir;
  NodeOptions o = BaseOptions();
  o.audit_path = dir.File("audit.jsonl");
  NodeHarness h(o);
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  h.Login("k");
  const std::string text = testing::ReadAll(o.audit_path);
  ASSERT_FALSE(text.empty());
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    EXPECT_TRUE(Json::parse(line).is_object());
    ++n;
  }
  EXPECT_EQ(n, static_cast<int>(h.node().AuditLog().size()));
}

TEST(NodeTest, ResponsesNeverCarryInputs) {
  NodeHarness h;
  ASSERT_TRUE(h.node().AddDataset(Ages(8)).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  std::vector<Json> responses;
  Json roots = h.Call(sid, {{"op", "get_roots"}, {"dataset", "ages"}});
  responses.push_back(roots);
  std::vector<std::uint64_t> hs;
  for (const Json& r : roots["roots"]) hs.push_back(r["handle"]);
  const std::uint64_t mean = h.Mean(sid, hs);
  responses.push_back(h.Call(sid, {{"op", "describe"}, {"handle", mean}}));
  responses.push_back(h.Call(sid, {{"op", "publish"}, {"handle", mean}, {"sigma", 2}}));
  responses.push_back(
      h.Call(sid, {{"op", "simulate_publish"}, {"handle", mean}, {"sigma", 2}}));
  responses.push_back(
      h.Call(sid, {{"op", "publish"}, {"handle", mean}, {"sigma", 0.01}}));
  responses.push_back(h.Call(sid, {{"op", "remaining_budget"}}));
  for (const Json& r : responses) {
    EXPECT_TRUE(ScanForConfinedValues(r).ok()) << r;
    // No raw age appears as the value of any key either.
    for (const Json& root : roots["roots"]) {
      EXPECT_FALSE(root.contains("value"));
    }
  }
  EXPECT_EQ(h.node().confinement_violations(), 0u);
}

TEST(WireTest, ScanFlagsConfinedShapes) {
  EXPECT_TRUE(ScanForConfinedValues(Json{{"value", 3.5}, {"sigma", 1}}).ok());
  EXPECT_FALSE(ScanForConfinedValues(
                   Json{{"roots", {{{"value", 30}, {"floor", 0}, {"ceiling", 100}}}}})
                   .ok());
  EXPECT_FALSE(ScanForConfinedValues(Json{{"spends", {{{"clipped_input", 30}}}}}).ok());
  EXPECT_FALSE(ScanForConfinedValues(
                   Json::array({Json::object(), Json{{"x", {{"clipped_input", 1}}}}}))
                   .ok());

  PublishReceipt receipt;
  receipt.noisy_value = 1;
  receipt.sigma = 2;
  RdpSpend spend;
  spend.var = VarId{"e", "a"};
  spend.clipped_input = 5;
  spend.rho = 0.1;
  receipt.spends.push_back(spend);
  EXPECT_TRUE(ScanForConfinedValues(ReceiptToJson(receipt, false)).ok());
  EXPECT_FALSE(ScanForConfinedValues(ReceiptToJson(receipt, true)).ok());
}

TEST(WireTest, StatusCodesRoundTrip) {
  for (const absl::Status& s :
       {absl::InvalidArgumentError("x"), absl::NotFoundError("x"),
        absl::FailedPreconditionError("x"), absl::ResourceExhaustedError("x"),
        absl::UnauthenticatedError("x"), absl::PermissionDeniedError("x")}) {
    EXPECT_EQ(StatusCodeFor(WireCodeFor(s)), s.code()) << s;
  }
}

TEST(NodeTest, JournalReplayRestoresLedgers) {
  testing::TempDir dir;
  NodeOptions o = BaseOptions();
  o.journal_path = dir.File("journal.tsv");
  std::string before;
  {
    NodeHarness h(o);
    ASSERT_TRUE(h.node().AddDataset(Ages(5)).ok());
    ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
    const std::uint64_t sid = h.Login("k");
    const auto roots = h.Roots(sid, "ages");
    for (double sigma : {300.0, 400.0, 500.0}) {
      ASSERT_TRUE(h.Call(sid, {{"op", "publish"},
                               {"handle", h.Sum(sid, roots)},
                               {"sigma", sigma}})["ok"]
                      .get<bool>());
    }
    before = h.node().SerializeLedgers();
  }
  // A crash in the middle of an append leaves a line without its newline.
  {
    std::ofstream(o.journal_path, std::ios::app) << "sam\t99\t1\t0.5";
  }
  NodeHarness restarted(o);
  EXPECT_EQ(restarted.node().SerializeLedgers(), before);
  const std::string journal = testing::ReadAll(o.journal_path);
  EXPECT_EQ(journal.back(), '\n');
  EXPECT_EQ(journal.find("\t99\t"), std::string::npos);

  // Publish ids keep increasing across restarts.
  ASSERT_TRUE(restarted.node().AddDataset(Ages(5)).ok());
  ASSERT_TRUE(restarted.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = restarted.Login("k");
  ASSERT_TRUE(restarted
                  .Call(sid, {{"op", "publish"},
                              {"handle", restarted.Roots(sid, "ages")[0]},
                              {"sigma", 90}})["ok"]
                  .get<bool>());
  auto records = ReadJournal(o.journal_path);
  ASSERT_TRUE(records.ok());
  EXPECT_EQ(records->back().entry.publish_id, 4u);
}

TEST(NodeTest, SeededSessionsAreReproducible) {
  auto run = [](std::uint64_t seed, const std::string& user) {
    NodeOptions o = BaseOptions();
    o.seed = seed;
    NodeHarness h(o);
    EXPECT_TRUE(h.node().AddDataset(Ages(3)).ok());
    EXPECT_TRUE(h.node().AddUser(user, "k").ok());
    const std::uint64_t sid = h.Login("k");
    const std::uint64_t sum = h.Sum(sid, h.Roots(sid, "ages"));
    return h.Call(sid, {{"op", "publish"}, {"handle", sum}, {"sigma", 100}})["value"]
        .get<double>();
  };
  EXPECT_EQ(run(5, "sam"), run(5, "sam"));
  EXPECT_NE(run(5, "sam"), run(6, "sam"));
  EXPECT_NE(run(5, "sam"), run(5, "ann"));
}

// Two datasets share ten entities. One user, one ledger: the shared entities'
// cumulative rho is the sum over both datasets' releases.
TEST(NodeTest, OverlappingDatasetsShareEntityBudget) {
  NodeHarness h;
  ASSERT_TRUE(h.node().IngestCsv(testing::DemoPath("hospital_a.csv")).ok());
  ASSERT_TRUE(h.node().IngestCsv(testing::DemoPath("hospital_b.csv")).ok());
  ASSERT_TRUE(h.node().AddUser("sam", "k").ok());
  const std::uint64_t sid = h.Login("k");
  const std::uint64_t sa = h.Sum(sid, h.Roots(sid, "hospital_a"));
  const std::uint64_t sb = h.Sum(sid, h.Roots(sid, "hospital_b"));
  Json ra = h.Call(sid, {{"op", "publish"}, {"handle", sa}, {"sigma", 250}});
  Json rb = h.Call(sid, {{"op", "publish"}, {"handle", sb}, {"sigma", 250}});
  ASSERT_TRUE(ra["ok"].get<bool>() && rb["ok"].get<bool>());
  std::map<std::string, double> expected;
  for (const Json* r : {&ra, &rb}) {
    for (const Json& s : (*r)["spends"]) expected[s["entity"]] += s["rho"].get<double>();
  }
  std::istringstream ledgers(h.node().SerializeLedgers());
  std::string line;
  int shared = 0;
  while (std::getline(ledgers, line)) {
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string x; std::getline(fields, x, '\t');) f.push_back(x);
    ASSERT_EQ(f.size(), 3u);
    EXPECT_DOUBLE_EQ(std::stod(f[2]), expected.at(f[1])) << f[1];
    const int n = std::stoi(f[1].substr(1));
    if (n >= 11 && n <= 20) ++shared;
  }
  EXPECT_EQ(shared, 10);
  // p15 has value 90 in both files.
  EXPECT_DOUBLE_EQ(expected.at("p15"), 2 * 90.0 * 90.0 / (2 * 250.0 * 250.0));
}

TEST(NodeTest, ConcurrentSessionsRespectSharedCap) {
  NodeOptions o = BaseOptions();
  o.shared_ledger = true;
  NodeHarness h(o);
  ASSERT_TRUE(h.node().AddDataset(Ages(12)).ok());
  constexpr int kThreads = 8;
  for (int t = 0; t < kThreads; ++t) {
    ASSERT_TRUE(h.node().AddUser("u" + std::to_string(t), "k" + std::to_string(t)).ok());
  }
  std::vector<std::map<std::string, double>> accepted(kThreads);
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      Node& node = h.node();
      const std::uint64_t sid = node.OpenSession();
      std::int64_t id = 0;
      auto call = [&](Json req) {
        req["id"] = ++id;
        return node.Handle(sid, req);
      };
      call({{"op", "auth"}, {"key", "k" + std::to_string(t)}});
      Json roots = call({{"op", "get_roots"}, {"dataset", "ages"}});
      std::mt19937_64 rng(t);
      for (int i = 0; i < 30; ++i) {
        const Json& a = roots["roots"][rng() % 12];
        const Json& b = roots["roots"][rng() % 12];
        std::uint64_t handle = a["handle"];
        if (a["entity"] != b["entity"]) {
          handle = call({{"op", "binop"},
                         {"kind", "add"},
                         {"a", a["handle"]},
                         {"b", b["handle"]}})["handle"];
        }
        Json r = call(
            {{"op", "publish"}, {"handle", handle}, {"sigma", 60 + double(rng() % 100)}});
        if (r["ok"].get<bool>()) {
          for (const Json& s : r["spends"]) {
            accepted[t][s["entity"]] += s["rho"].get<double>();
          }
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();

  std::map<std::string, double> total;
  for (const auto& m : accepted) {
    for (const auto& [e, rho] : m) total[e] += rho;
  }
  std::istringstream ledgers(h.node().SerializeLedgers());
  std::string line;
  while (std::getline(ledgers, line)) {
    const auto t1 = line.find('\t'), t2 = line.find('\t', t1 + 1);
    const std::string entity = line.substr(t1 + 1, t2 - t1 - 1);
    const double rho = std::stod(line.substr(t2 + 1));
    EXPECT_NEAR(rho, total[entity], 1e-12) << entity;
    EXPECT_LE(testing::GoldenSectionRdpToDp(rho, kDelta), 3 + 1e-9) << entity;
  }
}

}  // namespace
}  // namespace pscalar

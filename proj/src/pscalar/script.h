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

// Scenario scripts: JSON lines, one step per line. Blank lines and lines
// starting with '#' are skipped. Every step has a "step" field:
//
//   session        {"as": user label, "key" | "key_env": optional}
//                  Switches to (or opens) a session. Without a key the
//                  runner's key table is consulted, then its default key.
//   load           {"dataset", "column"?, "as"}  binds a list of roots
//   op             {"kind", "args": [...], "as"}
//                  kinds add sub mul take two operands; neg one; scale shift
//                  take an operand and a number; pow an operand and an
//                  integer; sum product mean fold over their arguments.
//                  Operands are bound names, "name[i]", "name[i:j]" slices,
//                  numbers, or "$var" numbers.
//   simulate       {"value", "sigma": number | "auto", "expect"?: "pass" |
//                  "reject"}
//   publish        {"value", "sigma", "as"?}  must be accepted; "as" binds
//                  the released number
//   expect_reject  {"value", "sigma", "entities"?: [...]}
//   assert_budget  {"entity"?: id | "min", "simulated"?, "record"?,
//                   "eq" | "lt" | "le" | "gt" | "ge": number | "$var",
//                   "tol"?}
//   fork_sim       {}
//   drop           {"value"}
//
// The report is one JSON object per executed step followed by a summary. It
// contains no handles or timestamps, so equal seeds give equal reports.

#ifndef PSCALAR_SCRIPT_H_
#define PSCALAR_SCRIPT_H_

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "pscalar/client.h"

namespace pscalar {

struct ScriptOptions {
  std::string host = "127.0.0.1";
  int port = 0;
  std::string default_key;
  // Keys by session label.
  std::map<std::string, std::string> keys;
};

struct ScriptStep {
  int line = 0;
  Json step;
};

// Parses a script and checks that every step references only names bound by
// earlier steps.
absl::StatusOr<std::vector<ScriptStep>> ParseScript(std::string_view text);

struct ScriptReport {
  std::vector<Json> lines;
  bool passed = false;
  std::string Text() const;
};

// Executes steps against a node. One runner may hold several sessions.
class ScriptRunner {
 public:
  explicit ScriptRunner(ScriptOptions options);
  ~ScriptRunner();

  // Runs one step. The returned report line has "ok" set; on failure it also
  // has "error".
  Json Execute(const Json& step, int line = 0);

  // Every value the runner holds: bound scalars (public shape only), lists
  // and released numbers.
  Json Snapshot() const;

 private:
  struct Binding;
  struct State;
  std::unique_ptr<State> state_;
};

ScriptReport RunScript(const std::vector<ScriptStep>& steps,
                       ScriptOptions options);
absl::StatusOr<ScriptReport> RunScriptFile(const std::string& path,
                                           ScriptOptions options);

// One REPL command as a step:
//   load <dataset>[.<column>] [as <name>]
//   let <name> = <kind> <args...>
//   simulate <name> <sigma|auto>
//   publish <name> <sigma|auto>
//   budget [<entity>|min] [sim]
//   fork | drop <name> | session <label>
// Returns null for blank input.
absl::StatusOr<Json> TranslateReplLine(std::string_view line);

}  // namespace pscalar

#endif  // PSCALAR_SCRIPT_H_

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

#include "pscalar/script.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace pscalar {
namespace {

const std::set<std::string, std::less<>>& KnownSteps() {
  static const auto* steps = new std::set<std::string, std::less<>>{
      "session", "load",          "op",       "simulate", "publish",
      "expect_reject", "assert_budget", "fork_sim", "drop"};
  return *steps;
}

const char* const kComparisons[] = {"eq", "lt", "le", "gt", "ge"};

struct NameRef {
  std::string name;
  bool indexed = false;
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive; only for slices
  bool slice = false;
};

// "name", "name[i]" or "name[i:j]".
absl::StatusOr<NameRef> ParseNameRef(std::string_view text) {
  NameRef ref;
  const std::size_t open = text.find('[');
  if (open == std::string_view::npos) {
    ref.name = std::string(text);
  } else {
    if (text.back() != ']') {
      return absl::InvalidArgumentError(
          absl::StrCat("bad reference '", std::string(text), "'"));
    }
    ref.name = std::string(text.substr(0, open));
    ref.indexed = true;
    const std::string inner(text.substr(open + 1, text.size() - open - 2));
    std::vector<std::string> parts = absl::StrSplit(inner, ':');
    std::uint64_t a = 0, b = 0;
    if (parts.size() == 1 && absl::SimpleAtoi(parts[0], &a)) {
      ref.begin = a;
      ref.end = a + 1;
    } else if (parts.size() == 2 && absl::SimpleAtoi(parts[0], &a) &&
               absl::SimpleAtoi(parts[1], &b) && a <= b) {
      ref.begin = a;
      ref.end = b;
      ref.slice = true;
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("bad index in '", std::string(text), "'"));
    }
  }
  if (ref.name.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad reference '", std::string(text), "'"));
  }
  return ref;
}

std::string StepName(const Json& step) {
  auto it = step.find("step");
  return it != step.end() && it->is_string() ? it->get<std::string>() : "";
}

std::string StringField(const Json& step, const char* key) {
  auto it = step.find(key);
  return it != step.end() && it->is_string() ? it->get<std::string>() : "";
}

// Names a step reads, split into scalar names and "$" numbers.
void ReferencedNames(const Json& step, std::vector<std::string>* scalars,
                     std::vector<std::string>* numbers) {
  auto visit = [&](const Json& v) {
    if (!v.is_string()) return;
    const std::string s = v.get<std::string>();
    if (!s.empty() && s[0] == '$') {
      numbers->push_back(s.substr(1));
    } else if (auto ref = ParseNameRef(s); ref.ok()) {
      scalars->push_back(ref->name);
    } else {
      scalars->push_back(s);
    }
  };
  const std::string kind = StepName(step);
  if (kind == "op") {
    for (const Json& a : step.value("args", Json::array())) visit(a);
  } else if (kind == "simulate" || kind == "publish" ||
             kind == "expect_reject" || kind == "drop") {
    visit(step.value("value", Json()));
  } else if (kind == "assert_budget") {
    for (const char* c : kComparisons) {
      if (step.contains(c)) visit(step[c]);
    }
  }
}

absl::Status CheckStep(const Json& step, std::set<std::string>* scalars,
                       std::set<std::string>* numbers) {
  if (!step.is_object()) return absl::InvalidArgumentError("step is not an object");
  const std::string kind = StepName(step);
  if (!KnownSteps().contains(kind)) {
    return absl::InvalidArgumentError(absl::StrCat("unknown step '", kind, "'"));
  }
  auto require = [&](const char* key) -> absl::Status {
    if (!step.contains(key)) {
      return absl::InvalidArgumentError(
          absl::StrCat(kind, " needs field '", key, "'"));
    }
    return absl::OkStatus();
  };
  if (kind == "load") {
    if (auto s = require("dataset"); !s.ok()) return s;
    if (auto s = require("as"); !s.ok()) return s;
  } else if (kind == "op") {
    for (const char* k : {"kind", "args", "as"}) {
      if (auto s = require(k); !s.ok()) return s;
    }
    if (!step["args"].is_array() || step["args"].empty()) {
      return absl::InvalidArgumentError("op args must be a non-empty array");
    }
  } else if (kind == "simulate" || kind == "publish" || kind == "expect_reject") {
    if (auto s = require("value"); !s.ok()) return s;
    if (auto s = require("sigma"); !s.ok()) return s;
  } else if (kind == "drop") {
    if (auto s = require("value"); !s.ok()) return s;
  }

  std::vector<std::string> used_scalars, used_numbers;
  ReferencedNames(step, &used_scalars, &used_numbers);
  for (const std::string& n : used_scalars) {
    if (!scalars->contains(n)) {
      return absl::InvalidArgumentError(absl::StrCat("'", n, "' is not bound"));
    }
  }
  for (const std::string& n : used_numbers) {
    if (!numbers->contains(n)) {
      return absl::InvalidArgumentError(absl::StrCat("'$", n, "' is not bound"));
    }
  }
  if (kind == "load" || kind == "op") scalars->insert(StringField(step, "as"));
  if (kind == "publish" && step.contains("as")) {
    numbers->insert(StringField(step, "as"));
  }
  if (kind == "assert_budget" && step.contains("record")) {
    numbers->insert(StringField(step, "record"));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::optional<double>> SigmaOf(const Json& v) {
  if (v.is_string() && v.get<std::string>() == "auto") {
    return std::optional<double>();
  }
  if (v.is_number()) return std::optional<double>(v.get<double>());
  return absl::InvalidArgumentError("sigma must be a number or \"auto\"");
}

std::pair<double, double> RhoTotals(const Json& spends) {
  double total = 0, max = 0;
  for (const Json& s : spends) {
    const double rho = s.value("rho", 0.0);
    total += rho;
    max = std::max(max, rho);
  }
  return {total, max};
}

}  // namespace

absl::StatusOr<std::vector<ScriptStep>> ParseScript(std::string_view text) {
  std::vector<ScriptStep> steps;
  std::set<std::string> scalars, numbers;
  int line_no = 0;
  for (absl::string_view raw : absl::StrSplit(
           absl::string_view(text.data(), text.size()), '\n')) {
    ++line_no;
    absl::string_view line = absl::StripAsciiWhitespace(raw);
    if (line.empty() || line[0] == '#') continue;
    Json step = Json::parse(line.begin(), line.end(), nullptr,
                            /*allow_exceptions=*/false);
    if (step.is_discarded()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": not valid JSON"));
    }
    if (auto s = CheckStep(step, &scalars, &numbers); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": ", Str(s.message())));
    }
    steps.push_back({line_no, std::move(step)});
  }
  return steps;
}

std::string ScriptReport::Text() const {
  std::string out;
  for (const Json& line : lines) {
    out += line.dump();
    out += '\n';
  }
  return out;
}

struct ScriptRunner::Binding {
  std::vector<RemoteScalar> items;
  bool is_list = false;
};

struct ScriptRunner::State {
  ScriptOptions options;
  std::map<std::string, std::unique_ptr<ClientSession>> sessions;
  ClientSession* current = nullptr;
  std::map<std::string, Binding> scalars;
  std::map<std::string, double> numbers;
  int executed = 0;

  absl::Status Switch(const std::string& label, std::string key) {
    auto it = sessions.find(label);
    if (it == sessions.end()) {
      if (key.empty()) {
        auto k = options.keys.find(label);
        key = k != options.keys.end() ? k->second : options.default_key;
      }
      auto session = ClientSession::Connect(options.host, options.port, key);
      if (!session.ok()) return session.status();
      it = sessions.emplace(label, *std::move(session)).first;
    }
    current = it->second.get();
    return absl::OkStatus();
  }

  absl::Status EnsureSession() {
    if (current != nullptr) return absl::OkStatus();
    return Switch("default", "");
  }

  absl::StatusOr<double> Number(const Json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (!s.empty() && s[0] == '$') {
        auto it = numbers.find(s.substr(1));
        if (it != numbers.end()) return it->second;
        return absl::InvalidArgumentError(absl::StrCat("'", s, "' is not bound"));
      }
    }
    return absl::InvalidArgumentError(absl::StrCat("expected a number, got ", v.dump()));
  }

  // Expands one argument into operands.
  absl::StatusOr<std::vector<Operand>> Expand(const Json& v) {
    if (v.is_number() || (v.is_string() && !v.get<std::string>().empty() &&
                          v.get<std::string>()[0] == '$')) {
      auto n = Number(v);
      if (!n.ok()) return n.status();
      return std::vector<Operand>{*n};
    }
    if (!v.is_string()) {
      return absl::InvalidArgumentError(absl::StrCat("bad operand ", v.dump()));
    }
    auto ref = ParseNameRef(v.get<std::string>());
    if (!ref.ok()) return ref.status();
    auto it = scalars.find(ref->name);
    if (it == scalars.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("'", ref->name, "' is not bound"));
    }
    const std::vector<RemoteScalar>& items = it->second.items;
    std::size_t begin = 0, end = items.size();
    if (ref->indexed) {
      if (ref->end > items.size()) {
        return absl::OutOfRangeError(absl::StrCat(
            "index out of range for '", ref->name, "' of size ", items.size()));
      }
      begin = ref->begin;
      end = ref->end;
    }
    return std::vector<Operand>(items.begin() + begin, items.begin() + end);
  }

  absl::StatusOr<Operand> Single(const Json& v) {
    auto ops = Expand(v);
    if (!ops.ok()) return ops.status();
    if (ops->size() != 1) {
      return absl::InvalidArgumentError(
          absl::StrCat(v.dump(), " names ", ops->size(), " scalars, not one"));
    }
    return (*ops)[0];
  }

  absl::StatusOr<RemoteScalar> SingleScalar(const Json& v) {
    auto op = Single(v);
    if (!op.ok()) return op.status();
    if (!std::holds_alternative<RemoteScalar>(*op)) {
      return absl::InvalidArgumentError(
          absl::StrCat(v.dump(), " is a number, not a scalar"));
    }
    return std::get<RemoteScalar>(*op);
  }

  absl::StatusOr<RemoteScalar> Fold(const std::string& binary,
                                    const std::vector<Operand>& ops) {
    if (ops.empty()) return absl::InvalidArgumentError("nothing to fold");
    Operand acc = ops[0];
    for (std::size_t i = 1; i < ops.size(); ++i) {
      auto next = current->Binary(binary, acc, ops[i]);
      if (!next.ok()) return next.status();
      acc = *next;
    }
    if (!std::holds_alternative<RemoteScalar>(acc)) {
      // A fold over one constant; lift it through the node.
      auto lifted = current->Binary("add", acc, 0.0);
      if (!lifted.ok()) return lifted.status();
      return *lifted;
    }
    return std::get<RemoteScalar>(acc);
  }

  absl::StatusOr<double> MinRemaining() {
    auto r = current->RemainingBudget("min");
    if (!r.ok()) return r.status();
    return (*r)["remaining"].get<double>();
  }

  absl::Status RunOp(const Json& step, Json* report) {
    const std::string kind = step["kind"].get<std::string>();
    const Json& args = step["args"];
    auto arity = [&](std::size_t n) -> absl::Status {
      if (args.size() != n) {
        return absl::InvalidArgumentError(
            absl::StrCat(kind, " takes ", n, " arguments"));
      }
      return absl::OkStatus();
    };
    absl::StatusOr<RemoteScalar> result = absl::UnknownError("unset");
    if (kind == "add" || kind == "sub" || kind == "mul") {
      if (auto s = arity(2); !s.ok()) return s;
      auto a = Single(args[0]);
      if (!a.ok()) return a.status();
      auto b = Single(args[1]);
      if (!b.ok()) return b.status();
      result = current->Binary(kind, *a, *b);
    } else if (kind == "neg") {
      if (auto s = arity(1); !s.ok()) return s;
      auto a = SingleScalar(args[0]);
      if (!a.ok()) return a.status();
      result = current->Unary(kind, *a);
    } else if (kind == "scale" || kind == "shift" || kind == "pow") {
      if (auto s = arity(2); !s.ok()) return s;
      auto a = SingleScalar(args[0]);
      if (!a.ok()) return a.status();
      auto c = Number(args[1]);
      if (!c.ok()) return c.status();
      if (kind == "pow") {
        if (*c != std::floor(*c)) {
          return absl::InvalidArgumentError("pow exponent must be an integer");
        }
        result = current->Unary(kind, *a, 0, static_cast<int>(*c));
      } else {
        result = current->Unary(kind, *a, *c);
      }
    } else if (kind == "sum" || kind == "product" || kind == "mean") {
      std::vector<Operand> ops;
      for (const Json& a : args) {
        auto more = Expand(a);
        if (!more.ok()) return more.status();
        ops.insert(ops.end(), more->begin(), more->end());
      }
      result = Fold(kind == "product" ? "mul" : "add", ops);
      if (result.ok() && kind == "mean") {
        result = current->Unary("scale", *result,
                                1.0 / static_cast<double>(ops.size()));
      }
    } else {
      return absl::InvalidArgumentError(absl::StrCat("unknown op kind '", kind, "'"));
    }
    if (!result.ok()) return result.status();
    (*report)["degree"] = result->degree;
    (*report)["terms"] = result->terms;
    (*report)["entities"] = result->entities;
    scalars[StringField(step, "as")] = Binding{{*result}, false};
    return absl::OkStatus();
  }

  absl::Status RunStep(const Json& step, Json* report) {
    const std::string kind = StepName(step);
    if (kind == "session") {
      std::string key = StringField(step, "key");
      if (const std::string env = StringField(step, "key_env"); !env.empty()) {
        const char* v = std::getenv(env.c_str());
        if (v == nullptr) {
          return absl::InvalidArgumentError(absl::StrCat("$", env, " is not set"));
        }
        key = v;
      }
      std::string label = StringField(step, "as");
      if (label.empty()) label = "default";
      if (auto s = Switch(label, key); !s.ok()) return s;
      (*report)["user"] = current->user();
      return absl::OkStatus();
    }
    if (auto s = EnsureSession(); !s.ok()) return s;

    if (kind == "load") {
      auto roots = current->Roots(StringField(step, "dataset"),
                                  StringField(step, "column"));
      if (!roots.ok()) return roots.status();
      (*report)["roots"] = roots->size();
      scalars[StringField(step, "as")] = Binding{*std::move(roots), true};
      return absl::OkStatus();
    }
    if (kind == "op") return RunOp(step, report);

    if (kind == "simulate") {
      auto a = SingleScalar(step["value"]);
      if (!a.ok()) return a.status();
      auto sigma = SigmaOf(step["sigma"]);
      if (!sigma.ok()) return sigma.status();
      auto r = current->Simulate(*a, *sigma);
      if (!r.ok()) return r.status();
      const auto [total, max] = RhoTotals(r->spends);
      (*report)["pass"] = r->pass;
      (*report)["sigma"] = r->sigma;
      (*report)["total_rho"] = total;
      (*report)["max_rho"] = max;
      if (!r->pass) {
        (*report)["rejected_entities"] = r->rejected_entities;
        (*report)["projected_eps"] = r->projected_eps;
      }
      const std::string expect = StringField(step, "expect");
      if (!expect.empty() && (expect == "pass") != r->pass) {
        return absl::FailedPreconditionError(
            absl::StrCat("expected simulate to ", expect));
      }
      return absl::OkStatus();
    }

    if (kind == "publish" || kind == "expect_reject") {
      auto a = SingleScalar(step["value"]);
      if (!a.ok()) return a.status();
      auto sigma = SigmaOf(step["sigma"]);
      if (!sigma.ok()) return sigma.status();
      auto r = current->Publish(*a, *sigma);
      if (!r.ok()) return r.status();
      (*report)["accepted"] = r->accepted;
      if (r->accepted) {
        const auto [total, max] = RhoTotals(r->spends);
        (*report)["value"] = r->value;
        (*report)["sigma"] = r->sigma;
        (*report)["total_rho"] = total;
        (*report)["max_rho"] = max;
        if (step.contains("as")) numbers[StringField(step, "as")] = r->value;
      } else {
        (*report)["rejected_entities"] = r->rejected_entities;
        (*report)["projected_eps"] = r->projected_eps;
      }
      auto min = MinRemaining();
      if (!min.ok()) return min.status();
      (*report)["remaining_min"] = *min;
      if (kind == "publish" && !r->accepted) {
        return absl::FailedPreconditionError("publish was rejected");
      }
      if (kind == "expect_reject") {
        if (r->accepted) {
          return absl::FailedPreconditionError("publish was accepted");
        }
        if (step.contains("entities")) {
          std::vector<std::string> want =
              step["entities"].get<std::vector<std::string>>();
          std::vector<std::string> got = r->rejected_entities;
          std::sort(want.begin(), want.end());
          std::sort(got.begin(), got.end());
          if (want != got) {
            return absl::FailedPreconditionError(
                "rejected entities differ from the expected set");
          }
        }
      }
      return absl::OkStatus();
    }

    if (kind == "assert_budget") {
      const std::string entity = StringField(step, "entity");
      const bool simulated = step.value("simulated", false);
      auto r = current->RemainingBudget(entity, simulated);
      if (!r.ok()) return r.status();
      (*report)["remaining"] = (*r)["remaining"];
      if (r->contains("entity")) (*report)["entity"] = (*r)["entity"];
      const Json& remaining = (*r)["remaining"];
      if (step.contains("record")) {
        if (!remaining.is_number()) {
          return absl::InvalidArgumentError("record needs an entity or \"min\"");
        }
        numbers[StringField(step, "record")] = remaining.get<double>();
      }
      const double tol = step.value("tol", 0.0);
      for (const char* c : kComparisons) {
        if (!step.contains(c)) continue;
        if (!remaining.is_number()) {
          return absl::InvalidArgumentError(
              "comparisons need an entity or \"min\"");
        }
        auto bound = Number(step[c]);
        if (!bound.ok()) return bound.status();
        const double v = remaining.get<double>();
        const std::string op = c;
        const bool holds = op == "eq"   ? std::abs(v - *bound) <= tol
                           : op == "lt" ? v < *bound
                           : op == "le" ? v <= *bound + tol
                           : op == "gt" ? v > *bound
                                        : v >= *bound - tol;
        if (!holds) {
          return absl::FailedPreconditionError(absl::StrCat(
              "remaining ", v, " is not ", op, " ", *bound));
        }
      }
      return absl::OkStatus();
    }

    if (kind == "fork_sim") return current->ForkSim();

    if (kind == "drop") {
      const std::string name = StringField(step, "value");
      auto it = scalars.find(name);
      if (it == scalars.end()) {
        return absl::InvalidArgumentError(absl::StrCat("'", name, "' is not bound"));
      }
      for (const RemoteScalar& s : it->second.items) {
        if (auto st = current->Drop(s); !st.ok()) return st;
      }
      scalars.erase(it);
      return absl::OkStatus();
    }
    return absl::InvalidArgumentError(absl::StrCat("unknown step '", kind, "'"));
  }
};

ScriptRunner::ScriptRunner(ScriptOptions options)
    : state_(std::make_unique<State>()) {
  state_->options = std::move(options);
}

ScriptRunner::~ScriptRunner() = default;

Json ScriptRunner::Execute(const Json& step, int line) {
  Json report{{"n", ++state_->executed}};
  if (line > 0) report["line"] = line;
  report["step"] = StepName(step);
  absl::Status status;
  try {
    status = state_->RunStep(step, &report);
  } catch (const Json::exception& e) {
    status = absl::InvalidArgumentError(e.what());
  }
  report["ok"] = status.ok();
  if (!status.ok()) report["error"] = Str(status.message());
  return report;
}

Json ScriptRunner::Snapshot() const {
  Json scalars = Json::object();
  for (const auto& [name, binding] : state_->scalars) {
    Json items = Json::array();
    for (const RemoteScalar& s : binding.items) {
      items.push_back({{"handle", s.handle},
                       {"degree", s.degree},
                       {"terms", s.terms},
                       {"entities", s.entities},
                       {"entity", s.entity}});
    }
    scalars[name] = items;
  }
  Json numbers = Json::object();
  for (const auto& [name, v] : state_->numbers) numbers[name] = v;
  Json sessions = Json::array();
  for (const auto& [label, session] : state_->sessions) {
    sessions.push_back({{"label", label},
                        {"user", session->user()},
                        {"datasets", session->datasets()}});
  }
  return {{"scalars", scalars}, {"numbers", numbers}, {"sessions", sessions}};
}

ScriptReport RunScript(const std::vector<ScriptStep>& steps,
                       ScriptOptions options) {
  ScriptRunner runner(std::move(options));
  ScriptReport report;
  report.passed = true;
  int failed_line = 0;
  for (const ScriptStep& step : steps) {
    Json line = runner.Execute(step.step, step.line);
    const bool ok = line["ok"].get<bool>();
    report.lines.push_back(std::move(line));
    if (!ok) {
      report.passed = false;
      failed_line = step.line;
      break;
    }
  }
  Json summary{{"steps", steps.size()},
               {"executed", report.lines.size()},
               {"passed", report.passed}};
  if (!report.passed) summary["failed_line"] = failed_line;
  report.lines.push_back({{"summary", summary}});
  return report;
}

absl::StatusOr<ScriptReport> RunScriptFile(const std::string& path,
                                           ScriptOptions options) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto steps = ParseScript(buffer.str());
  if (!steps.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": ", Str(steps.status().message())));
  }
  return RunScript(*steps, std::move(options));
}

absl::StatusOr<Json> TranslateReplLine(std::string_view line) {
  std::vector<std::string> words =
      absl::StrSplit(absl::string_view(line.data(), line.size()),
                     absl::ByAnyChar(" \t"), absl::SkipEmpty());
  if (words.empty() || words[0][0] == '#') return Json();
  const std::string& cmd = words[0];
  auto usage = [](const char* text) {
    return absl::InvalidArgumentError(absl::StrCat("usage: ", text));
  };
  auto sigma = [](const std::string& w) -> Json {
    double v;
    if (absl::SimpleAtod(w, &v)) return v;
    return w;
  };
  if (cmd == "load") {
    if (words.size() != 2 && !(words.size() == 4 && words[2] == "as")) {
      return usage("load <dataset>[.<column>] [as <name>]");
    }
    Json step{{"step", "load"}};
    const std::size_t dot = words[1].find('.');
    step["dataset"] = words[1].substr(0, dot);
    if (dot != std::string::npos) step["column"] = words[1].substr(dot + 1);
    step["as"] = words.size() == 4 ? words[3] : step["dataset"].get<std::string>();
    return step;
  }
  if (cmd == "let") {
    if (words.size() < 5 || words[2] != "=") {
      return usage("let <name> = <kind> <args...>");
    }
    Json args = Json::array();
    for (std::size_t i = 4; i < words.size(); ++i) {
      double v;
      if (absl::SimpleAtod(words[i], &v)) {
        args.push_back(v);
      } else {
        args.push_back(words[i]);
      }
    }
    return Json{{"step", "op"}, {"kind", words[3]}, {"args", args}, {"as", words[1]}};
  }
  if (cmd == "simulate" || cmd == "publish") {
    if (words.size() != 3) return usage("simulate|publish <name> <sigma|auto>");
    return Json{{"step", cmd}, {"value", words[1]}, {"sigma", sigma(words[2])}};
  }
  if (cmd == "budget") {
    Json step{{"step", "assert_budget"}};
    for (std::size_t i = 1; i < words.size(); ++i) {
      if (words[i] == "sim") {
        step["simulated"] = true;
      } else if (!step.contains("entity")) {
        step["entity"] = words[i];
      } else {
        return usage("budget [<entity>|min] [sim]");
      }
    }
    return step;
  }
  if (cmd == "fork") return Json{{"step", "fork_sim"}};
  if (cmd == "drop") {
    if (words.size() != 2) return usage("drop <name>");
    return Json{{"step", "drop"}, {"value", words[1]}};
  }
  if (cmd == "session") {
    if (words.size() < 2 || words.size() > 3) return usage("session <label> [<key>]");
    Json step{{"step", "session"}, {"as", words[1]}};
    if (words.size() == 3) step["key"] = words[2];
    return step;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown command '", cmd, "'"));
}

}  // namespace pscalar

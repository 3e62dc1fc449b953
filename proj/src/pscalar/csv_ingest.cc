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

#include "pscalar/csv_ingest.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace pscalar {
namespace {

std::string_view Trim(std::string_view s) {
  const auto not_space = [](char c) {
    return c != ' ' && c != '\t' && c != '\r' && c != '\n';
  };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> SplitComma(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(Trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool ParseDouble(std::string_view s, double* out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(*out);
}

struct ColumnSpec {
  std::string name;
  double floor = 0;
  double ceiling = 0;
};

absl::StatusOr<std::vector<ColumnSpec>> ParseColumnSpecs(std::string_view text) {
  std::vector<ColumnSpec> specs;
  for (std::string_view item : SplitComma(text)) {
    const std::size_t eq = item.find('=');
    const std::size_t dots = item.find("..");
    if (eq == std::string_view::npos || dots == std::string_view::npos ||
        dots < eq) {
      return absl::InvalidArgumentError(absl::StrCat(
          "column spec '", std::string(item), "' is not name=floor..ceiling"));
    }
    ColumnSpec c;
    c.name = std::string(Trim(item.substr(0, eq)));
    if (c.name.empty() ||
        !ParseDouble(Trim(item.substr(eq + 1, dots - eq - 1)), &c.floor) ||
        !ParseDouble(Trim(item.substr(dots + 2)), &c.ceiling)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "column spec '", std::string(item), "' is not name=floor..ceiling"));
    }
    if (c.floor > c.ceiling) {
      return absl::InvalidArgumentError(absl::StrCat(
          "column ", c.name, ": floor ", c.floor, " exceeds ceiling ", c.ceiling));
    }
    specs.push_back(std::move(c));
  }
  return specs;
}

}  // namespace

absl::Status ValidateEntityId(std::string_view id) {
  if (id.empty()) return absl::InvalidArgumentError("empty entity id");
  for (char c : id) {
    if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) {
      return absl::InvalidArgumentError(
          absl::StrCat("entity id '", std::string(id),
                       "' contains a control character"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<Dataset> ReadCsvDataset(std::string_view spec) {
  const std::size_t hash = spec.find('#');
  const std::string path(spec.substr(0, hash));
  std::vector<ColumnSpec> column_specs;
  if (hash != std::string_view::npos) {
    auto parsed = ParseColumnSpecs(spec.substr(hash + 1));
    if (!parsed.ok()) return parsed.status();
    column_specs = *std::move(parsed);
  }

  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open dataset ", path));
  }
  Dataset ds;
  ds.name = std::filesystem::path(path).stem().string();
  if (auto s = ValidateEntityId(ds.name); !s.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad dataset name '", ds.name, "'"));
  }

  std::string line;
  int line_no = 0;
  auto error_at = [&](std::string_view what) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ":", line_no, ": ", std::string(what)));
  };

  // Header.
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!Trim(line).empty()) break;
  }
  if (Trim(line).empty()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": no rows"));
  }
  for (std::string_view h : SplitComma(line)) header.emplace_back(h);
  if (header.empty() || header[0] != "entity") {
    return error_at("first header column must be 'entity'");
  }

  // Map each output column to its CSV field and range source.
  struct Source {
    int value_field;
    int floor_field = -1;  // -1: fixed range from the column list
    int ceiling_field = -1;
    double floor = 0;
    double ceiling = 0;
  };
  std::vector<Source> sources;
  if (column_specs.empty()) {
    if (header.size() != 4 || header[1] != "value" || header[2] != "floor" ||
        header[3] != "ceiling") {
      return error_at(
          "header must be entity,value,floor,ceiling (or give column ranges "
          "as path#name=floor..ceiling)");
    }
    ds.columns.push_back({"value", ds.name, {}});
    sources.push_back({1, 2, 3});
  } else {
    std::map<std::string, int, std::less<>> field_of;
    for (std::size_t i = 1; i < header.size(); ++i) {
      field_of.emplace(header[i], static_cast<int>(i));
    }
    for (const ColumnSpec& c : column_specs) {
      auto it = field_of.find(c.name);
      if (it == field_of.end()) {
        return error_at(absl::StrCat("no column named '", c.name, "'"));
      }
      ds.columns.push_back({c.name, absl::StrCat(ds.name, ".", c.name), {}});
      sources.push_back({it->second, -1, -1, c.floor, c.ceiling});
    }
  }

  std::set<std::string, std::less<>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const std::vector<std::string_view> fields = SplitComma(line);
    if (fields.size() != header.size()) {
      return error_at(absl::StrCat("expected ", header.size(), " fields, got ",
                                   fields.size()));
    }
    const std::string entity(fields[0]);
    if (auto s = ValidateEntityId(entity); !s.ok()) {
      return error_at(std::string(s.message()));
    }
    if (!seen.insert(entity).second) {
      return error_at(absl::StrCat("duplicate entity '", entity, "'"));
    }
    for (std::size_t c = 0; c < sources.size(); ++c) {
      const Source& src = sources[c];
      double value, floor = src.floor, ceiling = src.ceiling;
      if (!ParseDouble(fields[src.value_field], &value)) {
        return error_at(absl::StrCat("value '", std::string(fields[src.value_field]),
                                     "' is not a finite number"));
      }
      if (src.floor_field >= 0 &&
          (!ParseDouble(fields[src.floor_field], &floor) ||
           !ParseDouble(fields[src.ceiling_field], &ceiling))) {
        return error_at("floor and ceiling must be finite numbers");
      }
      if (floor > ceiling) {
        return error_at(absl::StrCat("floor ", floor, " exceeds ceiling ", ceiling));
      }
      ds.columns[c].rows.push_back({entity, EntityInput{value, floor, ceiling}});
    }
  }
  if (seen.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": no rows"));
  }
  return ds;
}

}  // namespace pscalar

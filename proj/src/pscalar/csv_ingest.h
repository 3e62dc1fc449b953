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

#ifndef PSCALAR_CSV_INGEST_H_
#define PSCALAR_CSV_INGEST_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "pscalar/private_scalar.h"

namespace pscalar {

struct DatasetRow {
  std::string entity;
  EntityInput input;
};

// One private attribute. Every row becomes one root scalar whose VarId is
// (entity, attribute).
struct DatasetColumn {
  std::string name;
  std::string attribute;
  std::vector<DatasetRow> rows;
};

struct Dataset {
  std::string name;
  std::vector<DatasetColumn> columns;
};

// Reads a dataset from `spec`, which is either
//
//   path.csv                            header: entity,value,floor,ceiling
//   path.csv#age=0..120,weight=0..300   header: entity plus the named columns
//
// The dataset is named after the file stem. In the first form the single
// column is named "value" with attribute "<stem>"; in the second each column
// gets attribute "<stem>.<column>" and the public range given after "#".
// Errors name the offending line.
absl::StatusOr<Dataset> ReadCsvDataset(std::string_view spec);

// Entity identifiers must be non-empty and free of control characters, since
// they are written to the tab-separated ledger journal.
absl::Status ValidateEntityId(std::string_view id);

}  // namespace pscalar

#endif  // PSCALAR_CSV_INGEST_H_

/*
 * Copyright 2026 The survbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace survbench {

using Index = Eigen::Index;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class ColumnKind { kContinuous, kBinary, kOrdinal };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view text);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  // Permitted codes for binary (exactly two) and ordinal (strictly increasing)
  // columns. Empty for continuous columns.
  std::vector<double> levels;

  bool is_categorical() const { return kind != ColumnKind::kContinuous; }
};

// Column layout of a CSV file: which columns carry the follow-up time and the
// event indicator, and which covariates to keep. Columns present in the file
// but absent here are ignored.
struct Schema {
  std::string time_column = "time";
  std::string status_column = "status";
  std::optional<std::string> treatment_column;
  std::vector<ColumnSpec> columns;

  // Throws InvalidInput when a column invariant is violated.
  void validate() const;
};

Schema load_schema(const std::filesystem::path& path);
Schema parse_schema(std::string_view json_text);

// Covariates, follow-up times and event indicators for n subjects.
struct SurvivalDataset {
  std::vector<ColumnSpec> columns;
  Eigen::MatrixXd x;        // n x d, NaN where missing
  Eigen::VectorXd time;     // strictly positive
  Eigen::VectorXi status;   // 0 = censored, 1 = event
  BoolMatrix missing;       // n x d

  Index rows() const { return time.size(); }
  Index cols() const { return x.cols(); }
  Index events() const { return status.sum(); }
  bool has_missing() const { return missing.size() > 0 && missing.any(); }

  // Position of a named column; throws InvalidInput when absent.
  Index column_index(std::string_view name) const;
  std::optional<Index> find_column(std::string_view name) const;
  std::vector<std::string> column_names() const;

  // Rows in the given order; duplicates allowed (bootstrap resamples).
  SurvivalDataset subset(const std::vector<Index>& rows) const;
  SurvivalDataset select_columns(const std::vector<Index>& cols) const;

  // Checks dimensions, time > 0 and status in {0, 1}.
  void validate() const;
};

// Reads a comma-separated file with a header row. Empty cells and the literal
// "NA" mark missing covariates; they are recorded in `missing` and never
// silently zeroed. Time and status must always be present.
SurvivalDataset load_csv(const std::filesystem::path& path, const Schema& schema);
SurvivalDataset parse_csv(std::istream& in, const Schema& schema);

// Replaces missing continuous cells by the mean of the observed cells of the
// same column.
SurvivalDataset impute_column_means(const SurvivalDataset& ds);

struct ColumnSummary {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  Index observed = 0;
  Index missing = 0;
  double median = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
  // (level, relative frequency among observed cells), categorical columns only.
  std::vector<std::pair<double, double>> frequencies;
};

struct SummaryTable {
  ColumnSummary time;
  ColumnSummary status;
  std::vector<ColumnSummary> columns;
};

ColumnSummary summarize_values(std::string name, ColumnKind kind,
                               const std::vector<double>& observed,
                               Index missing,
                               const std::vector<double>& levels = {});
SummaryTable summarize(const SurvivalDataset& ds);

}  // namespace survbench

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

#include "survbench/dataio.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "survbench/csv.h"
#include "survbench/error.h"
#include "survbench/stats.h"

namespace survbench {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool is_missing_token(std::string_view s) { return s.empty() || s == "NA"; }

std::optional<double> parse_number(std::string_view s) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string cell_context(std::size_t line, std::string_view column) {
  std::ostringstream os;
  os << "line " << line << ", column '" << column << "'";
  return os.str();
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kContinuous: return "continuous";
    case ColumnKind::kBinary: return "binary";
    case ColumnKind::kOrdinal: return "ordinal";
  }
  return "continuous";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "continuous") return ColumnKind::kContinuous;
  if (text == "binary") return ColumnKind::kBinary;
  if (text == "ordinal") return ColumnKind::kOrdinal;
  throw InvalidInput("unknown column kind '" + std::string(text) + "'");
}

void Schema::validate() const {
  std::set<std::string> names;
  for (const auto& c : columns) {
    if (c.name.empty()) throw InvalidInput("schema column with empty name");
    if (!names.insert(c.name).second) {
      throw InvalidInput("duplicate schema column '" + c.name + "'");
    }
    if (c.name == time_column || c.name == status_column) {
      throw InvalidInput("covariate '" + c.name + "' collides with time/status");
    }
    switch (c.kind) {
      case ColumnKind::kContinuous:
        if (!c.levels.empty()) {
          throw InvalidInput("continuous column '" + c.name + "' must not list levels");
        }
        break;
      case ColumnKind::kBinary:
        if (c.levels.size() != 2 || !(c.levels[0] < c.levels[1])) {
          throw InvalidInput("binary column '" + c.name +
                             "' needs exactly two increasing levels");
        }
        break;
      case ColumnKind::kOrdinal:
        if (c.levels.size() < 2 ||
            std::adjacent_find(c.levels.begin(), c.levels.end(),
                               std::greater_equal<>()) != c.levels.end()) {
          throw InvalidInput("ordinal column '" + c.name +
                             "' needs strictly increasing levels");
        }
        break;
    }
  }
  if (treatment_column && !names.count(*treatment_column)) {
    throw InvalidInput("treatment column '" + *treatment_column + "' is not a schema column");
  }
}

Schema parse_schema(std::string_view json_text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("schema is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("columns") || !j["columns"].is_object()) {
    throw InvalidInput("schema needs an object member 'columns'");
  }
  Schema schema;
  schema.time_column = j.value("time", std::string("time"));
  schema.status_column = j.value("status", std::string("status"));
  if (j.contains("treatment")) schema.treatment_column = j["treatment"].get<std::string>();
  for (const auto& [name, spec] : j["columns"].items()) {
    ColumnSpec c;
    c.name = name;
    if (spec.is_string()) {
      c.kind = parse_column_kind(spec.get<std::string>());
    } else {
      c.kind = parse_column_kind(spec.at("kind").get<std::string>());
      if (spec.contains("levels")) c.levels = spec["levels"].get<std::vector<double>>();
    }
    schema.columns.push_back(std::move(c));
  }
  schema.validate();
  return schema;
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open schema file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_schema(buffer.str());
}

Index SurvivalDataset::column_index(std::string_view name) const {
  if (auto idx = find_column(name)) return *idx;
  throw InvalidInput("no column named '" + std::string(name) + "'");
}

std::optional<Index> SurvivalDataset::find_column(std::string_view name) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].name == name) return static_cast<Index>(j);
  }
  return std::nullopt;
}

std::vector<std::string> SurvivalDataset::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

SurvivalDataset SurvivalDataset::subset(const std::vector<Index>& rows) const {
  SurvivalDataset out;
  out.columns = columns;
  const auto n = static_cast<Index>(rows.size());
  out.x.resize(n, cols());
  out.time.resize(n);
  out.status.resize(n);
  out.missing.resize(n, cols());
  for (Index i = 0; i < n; ++i) {
    const Index r = rows[static_cast<std::size_t>(i)];
    if (r < 0 || r >= this->rows()) throw InvalidInput("subset row out of range");
    out.x.row(i) = x.row(r);
    out.time(i) = time(r);
    out.status(i) = status(r);
    out.missing.row(i) = missing.row(r);
  }
  return out;
}

SurvivalDataset SurvivalDataset::select_columns(const std::vector<Index>& cols) const {
  SurvivalDataset out;
  out.time = time;
  out.status = status;
  out.x.resize(rows(), static_cast<Index>(cols.size()));
  out.missing.resize(rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const Index j = cols[k];
    if (j < 0 || j >= this->cols()) throw InvalidInput("column index out of range");
    out.columns.push_back(columns[static_cast<std::size_t>(j)]);
    out.x.col(static_cast<Index>(k)) = x.col(j);
    out.missing.col(static_cast<Index>(k)) = missing.col(j);
  }
  return out;
}

void SurvivalDataset::validate() const {
  const Index n = rows();
  if (status.size() != n || x.rows() != n || missing.rows() != n) {
    throw InvalidInput("dataset row counts disagree");
  }
  if (x.cols() != static_cast<Index>(columns.size()) || missing.cols() != x.cols()) {
    throw InvalidInput("dataset column counts disagree");
  }
  for (Index i = 0; i < n; ++i) {
    if (!(time(i) > 0.0) || !std::isfinite(time(i))) {
      throw InvalidInput("follow-up times must be finite and strictly positive");
    }
    if (status(i) != 0 && status(i) != 1) throw InvalidInput("status must be 0 or 1");
  }
}

SurvivalDataset parse_csv(std::istream& in, const Schema& schema) {
  schema.validate();
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("CSV input has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t k = 0; k < header.size(); ++k) {
    position.emplace(std::string(trim(header[k])), k);
  }
  auto locate = [&](const std::string& name) {
    auto it = position.find(name);
    if (it == position.end()) throw InvalidInput("CSV is missing required column '" + name + "'");
    return it->second;
  };
  const std::size_t time_pos = locate(schema.time_column);
  const std::size_t status_pos = locate(schema.status_column);
  std::vector<std::size_t> cov_pos;
  for (const auto& c : schema.columns) cov_pos.push_back(locate(c.name));

  std::vector<double> times;
  std::vector<int> statuses;
  std::vector<std::vector<double>> values(schema.columns.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InvalidInput("line " + std::to_string(line_no) + " has " +
                         std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(header.size()));
    }
    const auto t_text = trim(fields[time_pos]);
    const auto t = parse_number(t_text);
    if (!t) throw InvalidInput("non-numeric or missing time at " + cell_context(line_no, schema.time_column));
    if (!(*t > 0.0)) throw InvalidInput("non-positive time at " + cell_context(line_no, schema.time_column));
    const auto s = parse_number(trim(fields[status_pos]));
    if (!s) throw InvalidInput("non-numeric or missing status at " + cell_context(line_no, schema.status_column));
    if (*s != 0.0 && *s != 1.0) {
      throw InvalidInput("status outside {0,1} at " + cell_context(line_no, schema.status_column));
    }
    times.push_back(*t);
    statuses.push_back(static_cast<int>(*s));
    for (std::size_t k = 0; k < schema.columns.size(); ++k) {
      const auto& spec = schema.columns[k];
      const auto text = trim(fields[cov_pos[k]]);
      if (is_missing_token(text)) {
        values[k].push_back(kNaN);
        continue;
      }
      const auto v = parse_number(text);
      if (!v) throw InvalidInput("non-numeric value '" + std::string(text) + "' at " + cell_context(line_no, spec.name));
      if (spec.is_categorical() &&
          std::find(spec.levels.begin(), spec.levels.end(), *v) == spec.levels.end()) {
        throw InvalidInput("value outside declared levels at " + cell_context(line_no, spec.name));
      }
      values[k].push_back(*v);
    }
  }

  SurvivalDataset ds;
  ds.columns = schema.columns;
  const auto n = static_cast<Index>(times.size());
  const auto d = static_cast<Index>(schema.columns.size());
  ds.time = Eigen::Map<const Eigen::VectorXd>(times.data(), n);
  ds.status = Eigen::Map<const Eigen::VectorXi>(statuses.data(), n);
  ds.x.resize(n, d);
  ds.missing.resize(n, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double v = values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      ds.x(i, j) = v;
      ds.missing(i, j) = std::isnan(v);
    }
  }
  return ds;
}

SurvivalDataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open CSV file " + path.string());
  return parse_csv(in, schema);
}

SurvivalDataset impute_column_means(const SurvivalDataset& ds) {
  SurvivalDataset out = ds;
  for (Index j = 0; j < ds.cols(); ++j) {
    std::vector<double> observed;
    bool any_missing = false;
    for (Index i = 0; i < ds.rows(); ++i) {
      if (ds.missing(i, j)) {
        any_missing = true;
      } else {
        observed.push_back(ds.x(i, j));
      }
    }
    if (!any_missing) continue;
    const auto& spec = ds.columns[static_cast<std::size_t>(j)];
    if (spec.is_categorical()) {
      throw InvalidInput("missing values in categorical column '" + spec.name + "'");
    }
    if (observed.empty()) {
      throw DegenerateInput("column '" + spec.name + "' is entirely missing");
    }
    const double m = mean(observed);
    for (Index i = 0; i < ds.rows(); ++i) {
      if (ds.missing(i, j)) {
        out.x(i, j) = m;
        out.missing(i, j) = false;
      }
    }
  }
  return out;
}

ColumnSummary summarize_values(std::string name, ColumnKind kind,
                               const std::vector<double>& observed, Index missing,
                               const std::vector<double>& levels) {
  ColumnSummary s;
  s.name = std::move(name);
  s.kind = kind;
  s.observed = static_cast<Index>(observed.size());
  s.missing = missing;
  if (observed.empty()) {
    s.median = s.mean = s.sd = s.min = s.max = kNaN;
    return s;
  }
  std::vector<double> sorted = observed;
  std::sort(sorted.begin(), sorted.end());
  s.median = quantile_sorted(sorted, 0.5);
  s.mean = mean(sorted);
  s.sd = sample_sd(sorted);
  s.min = sorted.front();
  s.max = sorted.back();
  if (kind != ColumnKind::kContinuous) {
    std::vector<double> lv = levels;
    if (lv.empty()) {
      lv = sorted;
      lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
    }
    for (double level : lv) {
      const auto count = std::count(sorted.begin(), sorted.end(), level);
      s.frequencies.emplace_back(level, static_cast<double>(count) /
                                            static_cast<double>(sorted.size()));
    }
  }
  return s;
}

SummaryTable summarize(const SurvivalDataset& ds) {
  if (ds.rows() < 1) throw DegenerateInput("cannot summarize an empty dataset");
  SummaryTable table;
  std::vector<double> t(ds.time.data(), ds.time.data() + ds.rows());
  table.time = summarize_values("time", ColumnKind::kContinuous, t, 0);
  std::vector<double> st(static_cast<std::size_t>(ds.rows()));
  for (Index i = 0; i < ds.rows(); ++i) st[static_cast<std::size_t>(i)] = ds.status(i);
  table.status = summarize_values("status", ColumnKind::kBinary, st, 0, {0.0, 1.0});
  for (Index j = 0; j < ds.cols(); ++j) {
    std::vector<double> observed;
    Index missing = 0;
    for (Index i = 0; i < ds.rows(); ++i) {
      if (ds.missing(i, j)) {
        ++missing;
      } else {
        observed.push_back(ds.x(i, j));
      }
    }
    const auto& spec = ds.columns[static_cast<std::size_t>(j)];
    table.columns.push_back(summarize_values(spec.name, spec.kind, observed, missing, spec.levels));
  }
  return table;
}

}  // namespace survbench

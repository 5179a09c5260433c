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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "survbench/bootstrap.h"
#include "survbench/coxph.h"
#include "survbench/model.h"
#include "survbench/rsf.h"
#include "survbench/simgen.h"

namespace survbench {

enum class TuningMode { kPerReplicate, kPerScenario, kNone };

// per_replicate, per_scenario, none
std::string_view to_string(TuningMode mode);
TuningMode parse_tuning_mode(std::string_view text);

// "cox" or "rsf:<rule>".
struct MethodId {
  bool cox = true;
  SplitRule rule = SplitRule::kLogRankTest;

  std::string label() const;
  static MethodId parse(std::string_view text);
};

// The seven methods in canonical order: cox, then rsf with every rule.
std::vector<std::string> all_methods();

struct ExperimentPlan {
  std::vector<ScenarioConfig> scenarios;
  std::vector<std::string> methods;
  std::vector<Metric> metrics{Metric::kCIndex, Metric::kIbs};
  TuningMode tuning = TuningMode::kPerReplicate;
  ForestParams forest;
  std::optional<Criterion> cox_selection = Criterion::kAic;
  std::filesystem::path data_dir;
  std::uint64_t seed = 1;
  int workers = 1;
  bool record_timing = true;
  CensoringCalibration censoring;
  int calibration_grid = 50;

  void validate() const;
};

// Fields: seed, n_sim, n_test, methods, metrics, tuning, forest{...},
// cox_selection, data_dir, pilot_size, calibration_grid, and either
// scenarios[...] or grid{reference, n_train, censoring, beta_treatment, gamma}.
// A gamma entry is a number (proportional hazards) or [control, treated].
// Scenario seeds are derived from the plan seed and the scenario's content.
ExperimentPlan parse_plan(std::string_view json_text, const std::filesystem::path& default_data_dir);
ExperimentPlan load_plan(const std::filesystem::path& path, const std::filesystem::path& default_data_dir);

// Full grid: both references, N in {100, 200, 400}, censoring in {0.3, 0.6},
// beta_treatment in {0, 0.8, -0.4}, gamma in {0.8, 1, 2, (2, 5)}, n_sim 500,
// all seven methods.
ExperimentPlan default_plan(const std::filesystem::path& data_dir, std::uint64_t seed = 1);

// Caps n_sim at 20 for every scenario.
void apply_smoke_profile(ExperimentPlan& plan);

// Replaces the plan seed and rederives scenario seeds.
void set_plan_seed(ExperimentPlan& plan, std::uint64_t seed);

// Value of SURVBENCH_SEED, if set. Throws InvalidInput when it is not an
// unsigned integer.
std::optional<std::uint64_t> seed_from_environment();

// Data directory: SURVBENCH_DATA_DIR if set, else the build-time default.
std::filesystem::path default_data_dir();

std::uint64_t scenario_seed(std::uint64_t plan_seed, const ScenarioConfig& scenario);

struct ScenarioLabel {
  std::string reference;
  int n_train = 0;
  double censoring = 0.0;
  double beta_treatment = 0.0;
  std::string gamma_spec;

  static ScenarioLabel of(const ScenarioConfig& scenario);
  std::string id() const;
};

struct ResultRow {
  ScenarioLabel scenario;
  std::string method;
  int replicate = 0;
  std::string metric;
  double value = 0.0;
  double fit_ms = 0.0;
  double predict_ms = 0.0;
  bool dropped = false;
  std::string drop_reason;

  std::string key() const;
};

struct CurveRecord {
  ScenarioLabel scenario;
  std::string method;
  int replicate = 0;
  double t_star = 0.0;
  std::vector<double> predicted;
  std::vector<double> observed;

  std::string key() const;
};

inline constexpr std::string_view kResultHeader =
    "reference,n_train,censoring,beta_treatment,gamma_spec,method,replicate,metric,value,fit_ms,"
    "predict_ms,dropped,drop_reason";
inline constexpr std::string_view kCurveHeader =
    "reference,n_train,censoring,beta_treatment,gamma_spec,method,replicate,t_star,point,predicted,observed";

std::string format_result_row(const ResultRow& row);
void write_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
// Skips the header and any malformed line, such as a line cut short by an
// interrupted run.
std::vector<ResultRow> read_results(const std::filesystem::path& path);
void write_curves(const std::filesystem::path& path, const std::vector<CurveRecord>& curves);
std::vector<CurveRecord> read_curves(const std::filesystem::path& path);

struct RunSummary {
  std::size_t tasks_total = 0;
  std::size_t tasks_run = 0;
  std::size_t tasks_skipped = 0;
  std::size_t rows = 0;
  std::size_t dropped_rows = 0;
};

using LogFn = std::function<void(const std::string&)>;

// Runs every (scenario, replicate) task of the plan and writes results.csv,
// calibration_curves.csv (when calibration is requested), tuning.csv (per
// scenario tuning) and censoring_cache.json into out_dir. Tasks whose rows are
// all present already are skipped. Rows are sorted by scenario, method,
// replicate and metric in plan order, so the file does not depend on the
// worker count.
RunSummary run_scenarios(const ExperimentPlan& plan, const std::filesystem::path& out_dir,
                         const LogFn& log = {});

struct RealDataOptions {
  int B = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::vector<std::string> methods;
  std::vector<Metric> metrics{Metric::kCIndex, Metric::kIbs};
  ForestParams forest;
  bool tune = false;  // grid search once on the full data
  std::optional<Criterion> cox_selection = Criterion::kAic;
  int n_threads = 1;
};

struct RealDataRow {
  std::string dataset;
  std::string method;
  BootstrapResult result;
  std::string terms;  // Cox covariates or forest hyperparameters
  double elapsed_ms = 0.0;
};

// Imputes missing covariates by column means, then bootstraps each method.
// The Cox covariates are chosen once on the full data (treatment forced) and
// refit on every resample.
std::vector<RealDataRow> run_real_data_bootstrap(const SurvivalDataset& raw, const Schema& schema,
                                                 const std::string& dataset_name,
                                                 const RealDataOptions& options, const LogFn& log = {});

void write_bootstrap_table(const std::filesystem::path& path, const std::vector<RealDataRow>& rows);

}  // namespace survbench

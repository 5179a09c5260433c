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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "survbench/coxph.h"
#include "survbench/dataio.h"
#include "survbench/metrics.h"
#include "survbench/rsf.h"

namespace survbench {

enum class Metric { kCIndex, kIbs, kCalibration };

// c_index, ibs, calibration
std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

struct CoxSpec {
  CoxOptions options;
  std::vector<Index> columns;          // candidates; empty means every column
  std::optional<Criterion> selection;  // stepwise selection when set
  std::vector<Index> forced;           // kept by the stepwise search
};

struct ForestSpec {
  ForestParams params;
  std::vector<Index> columns;  // empty means every column
  bool tune = false;           // grid search before the final fit
  std::vector<ForestParams> grid;  // empty means default_tuning_grid
};

struct ModelSpec {
  enum class Kind { kCox, kForest };
  Kind kind = Kind::kCox;
  CoxSpec cox;
  ForestSpec forest;

  static ModelSpec make_cox(CoxSpec spec = {});
  static ModelSpec make_forest(ForestSpec spec);
  // "cox" or "rsf:<rule>"
  std::string label() const;
};

// A model fit on one training set. Prediction datasets must share the
// training layout.
class FittedModel {
 public:
  static FittedModel fit(const ModelSpec& spec, const SurvivalDataset& train);

  // Larger means higher risk: the linear predictor or the ensemble mortality.
  Eigen::VectorXd risk(const SurvivalDataset& ds) const;
  // Survival of every row of ds as a function of time.
  SurvivalAt survival(const SurvivalDataset& ds) const;

  ModelSpec::Kind kind() const { return kind_; }
  const CoxModel& cox() const { return *cox_; }
  const SurvivalForest& forest() const { return *forest_; }
  const std::optional<TuneResult>& tuning() const { return tuning_; }

 private:
  ModelSpec::Kind kind_ = ModelSpec::Kind::kCox;
  std::shared_ptr<const CoxModel> cox_;
  std::shared_ptr<const SurvivalForest> forest_;
  std::vector<Index> columns_;
  std::optional<TuneResult> tuning_;
};

struct EvaluationContext {
  double ibs_horizon = 0.0;     // required for ibs
  double calibration_time = 0.0;  // required for calibration
  int calibration_grid = 50;
};

// Scalar performance of a fitted model on `eval`. Calibration reports the
// mean absolute deviation of the calibration curve from the diagonal.
double evaluate_metric(const FittedModel& model, const SurvivalDataset& eval, Metric metric,
                       const EvaluationContext& ctx);

CalibrationCurve evaluate_calibration(const FittedModel& model, const SurvivalDataset& eval,
                                      const EvaluationContext& ctx);

}  // namespace survbench

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

#include "survbench/model.h"

#include <numeric>

#include "survbench/error.h"

namespace survbench {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kCIndex: return "c_index";
    case Metric::kIbs: return "ibs";
    case Metric::kCalibration: return "calibration";
  }
  return "c_index";
}

Metric parse_metric(std::string_view text) {
  for (Metric m : {Metric::kCIndex, Metric::kIbs, Metric::kCalibration}) {
    if (to_string(m) == text) return m;
  }
  throw InvalidInput("unknown metric '" + std::string(text) + "'");
}

ModelSpec ModelSpec::make_cox(CoxSpec spec) {
  ModelSpec m;
  m.kind = Kind::kCox;
  m.cox = std::move(spec);
  return m;
}

ModelSpec ModelSpec::make_forest(ForestSpec spec) {
  ModelSpec m;
  m.kind = Kind::kForest;
  m.forest = std::move(spec);
  return m;
}

std::string ModelSpec::label() const {
  if (kind == Kind::kCox) return "cox";
  return "rsf:" + std::string(to_string(forest.params.rule));
}

namespace {

std::vector<Index> all_columns(const SurvivalDataset& ds) {
  std::vector<Index> cols(static_cast<std::size_t>(ds.cols()));
  std::iota(cols.begin(), cols.end(), Index{0});
  return cols;
}

}  // namespace

FittedModel FittedModel::fit(const ModelSpec& spec, const SurvivalDataset& train) {
  FittedModel out;
  out.kind_ = spec.kind;
  if (spec.kind == ModelSpec::Kind::kCox) {
    const CoxSpec& c = spec.cox;
    const std::vector<Index> cols = c.columns.empty() ? all_columns(train) : c.columns;
    if (c.selection) {
      out.cox_ = std::make_shared<CoxModel>(stepwise_select(train, cols, *c.selection, c.forced, c.options));
    } else {
      out.cox_ = std::make_shared<CoxModel>(fit_cox(train, cols, c.options));
    }
    return out;
  }
  const ForestSpec& f = spec.forest;
  out.columns_ = f.columns.empty() ? all_columns(train) : f.columns;
  const SurvivalDataset sub = train.select_columns(out.columns_);
  if (f.tune) {
    const auto grid = f.grid.empty() ? default_tuning_grid(sub.cols(), f.params) : f.grid;
    TuneResult tuned = tune_grid(sub, grid, f.params.seed);
    out.forest_ = std::make_shared<SurvivalForest>(std::move(tuned.best_forest));
    tuned.best_forest = SurvivalForest{};
    out.tuning_ = std::move(tuned);
  } else {
    out.forest_ = std::make_shared<SurvivalForest>(grow_forest(sub, f.params));
  }
  return out;
}

VectorXd FittedModel::risk(const SurvivalDataset& ds) const {
  if (kind_ == ModelSpec::Kind::kCox) return cox_->linear_predictors(ds);
  return predicted_mortality(*forest_, ds.select_columns(columns_).x);
}

SurvivalAt FittedModel::survival(const SurvivalDataset& ds) const {
  if (kind_ == ModelSpec::Kind::kCox) {
    auto model = cox_;
    auto lp = std::make_shared<const VectorXd>(cox_->linear_predictors(ds));
    return [model, lp](double t) -> VectorXd {
      const double h0 = model->baseline(t);
      return (-(h0 * lp->array().exp())).exp().matrix();
    };
  }
  auto forest = forest_;
  auto chf = std::make_shared<const MatrixXd>(predict_chf_rows(*forest_, ds.select_columns(columns_).x));
  return [forest, chf](double t) { return survival_at(*forest, *chf, t); };
}

namespace {
constexpr double kMinProbability = 1e-10;
}  // namespace

CalibrationCurve evaluate_calibration(const FittedModel& model, const SurvivalDataset& eval,
                                      const EvaluationContext& ctx) {
  if (!(ctx.calibration_time > 0.0)) throw InvalidInput("calibration needs a positive time point");
  const VectorXd s = model.survival(eval)(ctx.calibration_time);
  const VectorXd mortality = (1.0 - s.array()).max(kMinProbability).min(1.0 - kMinProbability).matrix();
  return calibration_curve(mortality, eval.time, eval.status, ctx.calibration_time, ctx.calibration_grid);
}

double evaluate_metric(const FittedModel& model, const SurvivalDataset& eval, Metric metric,
                       const EvaluationContext& ctx) {
  switch (metric) {
    case Metric::kCIndex: return harrell_c(model.risk(eval), eval.time, eval.status);
    case Metric::kIbs: {
      if (!(ctx.ibs_horizon > 0.0)) throw InvalidInput("IBS needs a positive horizon");
      return integrated_brier(model.survival(eval), eval.time, eval.status, ctx.ibs_horizon);
    }
    case Metric::kCalibration: return evaluate_calibration(model, eval, ctx).mean_abs_deviation();
  }
  return 0.0;
}

}  // namespace survbench

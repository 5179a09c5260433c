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

#include "survbench/metrics.h"

#include <algorithm>
#include <cmath>

#include "survbench/coxph.h"
#include "survbench/error.h"
#include "survbench/stats.h"

namespace survbench {

using Eigen::VectorXd;
using Eigen::VectorXi;

ConcordanceCounts concordance_counts(const Eigen::Ref<const VectorXd>& risk,
                                     const Eigen::Ref<const VectorXd>& time,
                                     const Eigen::Ref<const VectorXi>& status) {
  const Index n = time.size();
  if (risk.size() != n || status.size() != n) throw InvalidInput("C index: length mismatch");
  ConcordanceCounts c;
  for (Index i = 0; i < n; ++i) {
    if (status(i) != 1) continue;
    for (Index j = 0; j < n; ++j) {
      if (!(time(j) > time(i))) continue;
      c.comparable += 1.0;
      if (risk(i) > risk(j)) {
        c.concordant += 1.0;
      } else if (risk(i) == risk(j)) {
        c.concordant += 0.5;
      }
    }
  }
  return c;
}

double harrell_c(const Eigen::Ref<const VectorXd>& risk, const Eigen::Ref<const VectorXd>& time,
                 const Eigen::Ref<const VectorXi>& status) {
  const ConcordanceCounts c = concordance_counts(risk, time, status);
  if (c.comparable == 0.0) throw DegenerateInput("C index: no comparable pairs");
  return c.concordant / c.comparable;
}

double brier_score(const Eigen::Ref<const VectorXd>& surv_at_t, const Eigen::Ref<const VectorXd>& time,
                   const Eigen::Ref<const VectorXi>& status, double t,
                   const StepFunction& censor_surv) {
  const Index n = time.size();
  if (surv_at_t.size() != n || status.size() != n) throw InvalidInput("Brier score: length mismatch");
  if (n == 0) throw InvalidInput("Brier score of an empty sample");
  const double g_t = censor_surv(t);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double s = surv_at_t(i);
    if (time(i) <= t) {
      if (status(i) != 1) continue;
      const double g = censor_surv.left_limit(time(i));
      if (!(g > 0.0)) throw DegenerateInput("Brier score: zero censoring weight");
      total += s * s / g;
    } else {
      if (!(g_t > 0.0)) throw DegenerateInput("Brier score: zero censoring weight");
      total += (1.0 - s) * (1.0 - s) / g_t;
    }
  }
  return total / static_cast<double>(n);
}

BrierCurve brier_curve(const SurvivalAt& surv_at, const Eigen::Ref<const VectorXd>& time,
                       const Eigen::Ref<const VectorXi>& status, double t_max) {
  if (!(t_max > 0.0)) throw InvalidInput("IBS horizon must be positive");
  const StepFunction g = censoring_km(time, status);
  BrierCurve curve;
  curve.t_max = t_max;
  curve.times.push_back(0.0);
  std::vector<double> events;
  for (Index i = 0; i < time.size(); ++i) {
    if (status(i) == 1 && time(i) < t_max) events.push_back(time(i));
  }
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());
  curve.times.insert(curve.times.end(), events.begin(), events.end());
  curve.times.push_back(t_max);
  for (double t : curve.times) {
    const VectorXd s = surv_at(t);
    curve.scores.push_back(brier_score(s, time, status, t, g));
  }
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < curve.times.size(); ++k) {
    area += (curve.times[k + 1] - curve.times[k]) * (curve.scores[k] + curve.scores[k + 1]) / 2.0;
  }
  curve.integrated = area / t_max;
  return curve;
}

double integrated_brier(const SurvivalAt& surv_at, const Eigen::Ref<const VectorXd>& time,
                        const Eigen::Ref<const VectorXi>& status, double t_max) {
  return brier_curve(surv_at, time, status, t_max).integrated;
}

double default_ibs_horizon(const Eigen::Ref<const VectorXd>& time) {
  std::vector<double> t(time.data(), time.data() + time.size());
  return quantile(t, 0.95);
}

double CalibrationCurve::mean_abs_deviation() const {
  if (predicted.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) s += std::abs(observed[k] - predicted[k]);
  return s / static_cast<double>(predicted.size());
}

Eigen::MatrixXd rcs_basis(const Eigen::Ref<const VectorXd>& x, const std::vector<double>& knots) {
  const std::size_t k = knots.size();
  if (k < 3) throw InvalidInput("restricted cubic spline needs at least 3 knots");
  for (std::size_t j = 1; j < k; ++j) {
    if (!(knots[j - 1] < knots[j])) throw DegenerateInput("spline knots must increase strictly");
  }
  const double norm = (knots[k - 1] - knots[0]) * (knots[k - 1] - knots[0]);
  auto cube = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
  Eigen::MatrixXd basis(x.size(), static_cast<Index>(k - 1));
  basis.col(0) = x;
  const double tk = knots[k - 1];
  const double tk1 = knots[k - 2];
  for (std::size_t j = 0; j + 2 < k; ++j) {
    const double tj = knots[j];
    for (Index i = 0; i < x.size(); ++i) {
      const double v = cube(x(i) - tj) - cube(x(i) - tk1) * (tk - tj) / (tk - tk1) +
                       cube(x(i) - tk) * (tk1 - tj) / (tk - tk1);
      basis(i, static_cast<Index>(j + 1)) = v / norm;
    }
  }
  return basis;
}

CalibrationCurve calibration_curve(const Eigen::Ref<const VectorXd>& pred_mortality,
                                   const Eigen::Ref<const VectorXd>& time,
                                   const Eigen::Ref<const VectorXi>& status, double t_star,
                                   int grid_size) {
  const Index n = time.size();
  if (pred_mortality.size() != n || status.size() != n) throw InvalidInput("calibration: length mismatch");
  if (grid_size < 2) throw InvalidInput("calibration grid needs at least 2 points");
  for (Index i = 0; i < n; ++i) {
    const double p = pred_mortality(i);
    if (!(p > 0.0 && p < 1.0)) throw InvalidInput("calibration: predicted probabilities must lie in (0,1)");
  }
  if (pred_mortality.maxCoeff() - pred_mortality.minCoeff() <= 1e-12) {
    throw DegenerateInput("calibration: predictions have no spread");
  }
  Index events_by_t = 0;
  for (Index i = 0; i < n; ++i) events_by_t += (status(i) == 1 && time(i) <= t_star) ? 1 : 0;
  if (events_by_t < 10) throw DegenerateInput("calibration: fewer than 10 events by the horizon");

  auto cloglog = [](double p) { return std::log(-std::log1p(-p)); };
  VectorXd z(n);
  for (Index i = 0; i < n; ++i) z(i) = cloglog(pred_mortality(i));
  std::vector<double> zs(z.data(), z.data() + n);
  std::sort(zs.begin(), zs.end());
  const std::vector<double> knots = {quantile_sorted(zs, 0.1), quantile_sorted(zs, 0.5),
                                     quantile_sorted(zs, 0.9)};
  const Eigen::MatrixXd basis = rcs_basis(z, knots);

  SurvivalDataset ds;
  ds.columns = {ColumnSpec{"cloglog", ColumnKind::kContinuous, {}},
                ColumnSpec{"cloglog_rcs1", ColumnKind::kContinuous, {}}};
  ds.x = basis;
  ds.time = time;
  ds.status = status;
  ds.missing = BoolMatrix::Constant(n, 2, false);
  const CoxModel secondary = fit_cox(ds);

  std::vector<double> ps(pred_mortality.data(), pred_mortality.data() + n);
  std::sort(ps.begin(), ps.end());
  CalibrationCurve curve;
  curve.t_star = t_star;
  for (int k = 0; k < grid_size; ++k) {
    const double level = 0.01 + 0.98 * static_cast<double>(k) / (grid_size - 1);
    const double p = quantile_sorted(ps, level);
    if (!curve.predicted.empty() && !(p > curve.predicted.back())) continue;
    curve.predicted.push_back(p);
  }
  VectorXd zg(static_cast<Index>(curve.predicted.size()));
  for (Index k = 0; k < zg.size(); ++k) zg(k) = cloglog(curve.predicted[static_cast<std::size_t>(k)]);
  const Eigen::MatrixXd grid_basis = rcs_basis(zg, knots);
  for (Index k = 0; k < zg.size(); ++k) {
    const double s = predict_survival(secondary, grid_basis.row(k).transpose(), t_star);
    curve.observed.push_back(std::clamp(1.0 - s, 0.0, 1.0));
  }
  return curve;
}

}  // namespace survbench

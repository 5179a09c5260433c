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
#include <functional>
#include <vector>

#include "survbench/estimators.h"

namespace survbench {

// Harrell's concordance index. A pair is comparable when the shorter of the
// two times belongs to an event and the times differ; it is concordant when
// that earlier subject has the strictly higher risk, and counts one half
// when the risks tie. Throws DegenerateInput when no pair is comparable.
double harrell_c(const Eigen::Ref<const Eigen::VectorXd>& risk,
                 const Eigen::Ref<const Eigen::VectorXd>& time,
                 const Eigen::Ref<const Eigen::VectorXi>& status);

struct ConcordanceCounts {
  double concordant = 0.0;  // includes the 0.5 credit for risk ties
  double comparable = 0.0;
};
ConcordanceCounts concordance_counts(const Eigen::Ref<const Eigen::VectorXd>& risk,
                                     const Eigen::Ref<const Eigen::VectorXd>& time,
                                     const Eigen::Ref<const Eigen::VectorXi>& status);

// Inverse-probability-of-censoring weighted Brier score at horizon t.
// `surv_at_t(i)` is the predicted S_i(t). Events before t are weighted by
// 1/G(T_i-), subjects still at risk after t by 1/G(t); subjects censored
// before t contribute zero.
double brier_score(const Eigen::Ref<const Eigen::VectorXd>& surv_at_t,
                   const Eigen::Ref<const Eigen::VectorXd>& time,
                   const Eigen::Ref<const Eigen::VectorXi>& status, double t,
                   const StepFunction& censor_surv);

// Returns the vector of predicted survival probabilities of all subjects at t.
using SurvivalAt = std::function<Eigen::VectorXd(double t)>;

struct BrierCurve {
  std::vector<double> times;   // 0, the event times below t_max, t_max
  std::vector<double> scores;
  double t_max = 0.0;
  double integrated = 0.0;
};

// Brier scores on {0} + sorted unique event times < t_max + {t_max}, with G
// estimated once from (time, status), and their trapezoid average over [0, t_max].
BrierCurve brier_curve(const SurvivalAt& surv_at,
                       const Eigen::Ref<const Eigen::VectorXd>& time,
                       const Eigen::Ref<const Eigen::VectorXi>& status, double t_max);

double integrated_brier(const SurvivalAt& surv_at,
                        const Eigen::Ref<const Eigen::VectorXd>& time,
                        const Eigen::Ref<const Eigen::VectorXi>& status, double t_max);

// 95th percentile of the observed times.
double default_ibs_horizon(const Eigen::Ref<const Eigen::VectorXd>& time);

struct CalibrationCurve {
  double t_star = 0.0;
  std::vector<double> predicted;  // strictly increasing grid in (0, 1)
  std::vector<double> observed;   // in [0, 1]

  // Mean absolute distance from the diagonal over the grid.
  double mean_abs_deviation() const;
};

// Observed versus predicted mortality at t_star. A secondary Cox model is fit
// on (time, status) with a 3-knot restricted cubic spline of
// cloglog(pred_mortality) as covariates; the observed probability at grid
// point p is 1 - S(t_star | spline(p)). The grid consists of `grid_size`
// equally spaced quantiles (1% to 99%) of the predictions.
CalibrationCurve calibration_curve(const Eigen::Ref<const Eigen::VectorXd>& pred_mortality,
                                   const Eigen::Ref<const Eigen::VectorXd>& time,
                                   const Eigen::Ref<const Eigen::VectorXi>& status,
                                   double t_star, int grid_size = 50);

// Restricted cubic spline basis (Harrell's parameterization, normalized by
// the squared knot span). Returns [x, nonlinear terms...].
Eigen::MatrixXd rcs_basis(const Eigen::Ref<const Eigen::VectorXd>& x,
                          const std::vector<double>& knots);

}  // namespace survbench

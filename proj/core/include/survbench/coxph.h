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
#include <optional>
#include <string>
#include <vector>

#include "survbench/dataio.h"
#include "survbench/estimators.h"

namespace survbench {

enum class Ties { kEfron, kBreslow };

struct CoxOptions {
  Ties ties = Ties::kEfron;
  int max_iter = 50;
  double tol = 1e-9;               // max |score| at convergence
  double rel_loglik_tol = 1e-12;   // alternative stop on relative loglik change
  double divergence_bound = 20.0;  // |beta_j| above this signals monotone likelihood
  std::optional<Eigen::VectorXd> init;
};

struct CoxModel {
  std::vector<std::string> names;
  std::vector<Index> columns;  // positions in the dataset the model was fit on
  Eigen::VectorXd beta;        // log hazard ratios
  Eigen::MatrixXd cov;         // inverse observed information
  Eigen::VectorXd center;      // training covariate means
  Eigen::VectorXd score;       // gradient at beta
  std::vector<bool> aliased;   // constant columns, held at beta = 0
  StepFunction baseline;       // Breslow H0 at the centered covariates
  double loglik = 0.0;
  double loglik_null = 0.0;
  Ties ties = Ties::kEfron;
  int iterations = 0;
  bool converged = false;
  Index n = 0;
  Index n_events = 0;

  Index dims() const { return beta.size(); }
  Index free_parameters() const;
  double aic() const;
  double bic() const;  // penalty log(number of events)

  // x holds the model's own covariates (length dims()).
  double linear_predictor(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Rows of a dataset laid out like the training data.
  Eigen::MatrixXd design(const SurvivalDataset& ds) const;
  Eigen::VectorXd linear_predictors(const SurvivalDataset& ds) const;
};

// Cox partial log-likelihood at beta for an already selected design.
double cox_partial_loglik(const Eigen::Ref<const Eigen::MatrixXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& time,
                          const Eigen::Ref<const Eigen::VectorXi>& status,
                          const Eigen::Ref<const Eigen::VectorXd>& beta, Ties ties);

// Newton-Raphson maximization of the partial likelihood with step halving.
// Throws ConvergenceError on divergence (monotone likelihood), singular
// information, or no convergence within max_iter; DegenerateInput when there
// are no events.
CoxModel fit_cox(const SurvivalDataset& ds, const CoxOptions& options = {});
CoxModel fit_cox(const SurvivalDataset& ds, const std::vector<Index>& columns,
                 const CoxOptions& options = {});

// H0(t) = sum over event times t_k <= t of d_k / sum_{risk(t_k)} exp(beta'(x - center)).
StepFunction breslow_baseline(const Eigen::Ref<const Eigen::VectorXd>& beta,
                              const Eigen::Ref<const Eigen::MatrixXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& time,
                              const Eigen::Ref<const Eigen::VectorXi>& status,
                              const Eigen::Ref<const Eigen::VectorXd>& center);

// S(t | x) = exp(-H0(t) exp(beta'(x - center))); flat beyond the last event.
double predict_survival(const CoxModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                        double t);
Eigen::VectorXd predict_survival(const CoxModel& model, const SurvivalDataset& ds, double t);

enum class Criterion { kAic, kBic };

// Bidirectional stepwise selection starting from the forced columns. Each
// step takes the single add or remove move with the largest improvement of
// the criterion; ties go to the lower column index. Forced columns are never
// removed.
CoxModel stepwise_select(const SurvivalDataset& ds, const std::vector<Index>& candidates,
                         Criterion criterion, const std::vector<Index>& forced,
                         const CoxOptions& options = {});

struct PhTestResult {
  std::vector<std::string> names;
  std::vector<double> chisq;
  std::vector<int> df;
  std::vector<double> p;
  double global_chisq = 0.0;
  int global_df = 0;
  double global_p = 1.0;
};

// Grambsch-Therneau score test of proportional hazards: each covariate gains
// a term x * g(t) with g the Kaplan-Meier time transform 1 - KM(t-), and the
// score test of those terms is evaluated at the fitted coefficients.
PhTestResult ph_test(const CoxModel& model, const SurvivalDataset& ds);

}  // namespace survbench

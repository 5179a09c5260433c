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
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "survbench/dataio.h"
#include "survbench/rng.h"

namespace survbench {

enum class Family { kNormal, kLogNormal, kGamma, kWeibull, kBernoulli, kCategorical };

std::string_view to_string(Family family);
Family parse_family(std::string_view text);

// Parametric marginal of one covariate.
//   normal: {mean, sd}; lognormal: {meanlog, sdlog}; gamma: {shape, rate};
//   weibull: {shape, scale}; bernoulli/categorical: `levels` with `probs`.
struct Marginal {
  std::string name;
  Family family = Family::kNormal;
  std::vector<double> params;
  std::vector<double> levels;
  std::vector<double> probs;
  double loglik = 0.0;
  double aic = 0.0;

  void validate() const;
  double cdf(double x) const;
  double quantile(double u) const;
};

using MarginalSpec = std::vector<Marginal>;

// Maximum-likelihood fit of one family; nullopt when the family does not
// apply to the data (nonpositive values for positive families) or the
// likelihood maximization fails.
std::optional<Marginal> fit_family(const std::string& name, Family family,
                                   const std::vector<double>& values);

// Per column: continuous columns take the candidate with the lowest AIC;
// binary columns become bernoulli and ordinal columns categorical, both with
// observed level frequencies. Throws ConvergenceError when no candidate fits.
MarginalSpec fit_marginals(const SurvivalDataset& ds, const std::vector<Family>& candidates);

// Nearest positive semidefinite correlation matrix by eigenvalue clipping at 0
// and rescaling to unit diagonal. Returned unchanged when already PSD.
Eigen::MatrixXd repair_correlation(const Eigen::MatrixXd& r);

// Pairwise Spearman correlations mapped to the latent Gaussian scale with
// 2 sin(pi rho / 6), then repaired to PSD.
Eigen::MatrixXd estimate_correlation(const SurvivalDataset& ds);

class CopulaModel {
 public:
  CopulaModel(Eigen::MatrixXd correlation, MarginalSpec marginals);

  const Eigen::MatrixXd& correlation() const { return correlation_; }
  const MarginalSpec& marginals() const { return marginals_; }
  Index dims() const { return correlation_.rows(); }
  std::vector<std::string> names() const;

  // n x d draws: z ~ N(0, R), u = Phi(z), x_j = F_j^{-1}(u_j).
  Eigen::MatrixXd sample(Index n, Engine& rng) const;

 private:
  Eigen::MatrixXd correlation_;
  Eigen::MatrixXd factor_;  // factor_ * factor_^T == correlation_
  MarginalSpec marginals_;
};

Eigen::MatrixXd sample_covariates(const CopulaModel& model, Index n, Engine& rng);

struct HazardSpec {
  double lambda = 1.0;         // Weibull scale, time units
  double gamma_control = 1.0;  // shape, treatment group 0
  double gamma_treated = 1.0;  // shape, treatment group 1

  bool proportional() const { return gamma_control == gamma_treated; }
  void validate() const;
};

// Cumulative-hazard inversion for S(t | x) = exp(-(t / lambda)^gamma exp(lp)):
// T = lambda * (-log(u) * exp(-lp))^(1 / gamma).
double weibull_event_time(double u, double lp, double lambda, double gamma);

Eigen::VectorXd simulate_survival_times(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                        const Eigen::Ref<const Eigen::VectorXd>& beta,
                                        const HazardSpec& hazard,
                                        const Eigen::Ref<const Eigen::VectorXi>& treatment,
                                        Engine& rng);

enum class Reference { kPbc, kProstate };

std::string_view to_string(Reference ref);
Reference parse_reference(std::string_view text);

// Fixed description of a reference trial: file names, the covariates in
// coefficient order, treatment-covariate interactions and the generating
// coefficients (treatment coefficient excluded; it comes from the scenario).
struct ReferenceSpec {
  Reference id;
  std::string name;
  std::string csv_file;
  std::string schema_file;
  std::string treatment;
  std::vector<std::string> covariates;
  std::vector<std::string> interactions;  // covariates interacting with treatment
  std::vector<double> beta;               // covariates then interactions
  double lambda = 1.0;

  std::vector<std::string> design_names() const;
};

const ReferenceSpec& reference_spec(Reference ref);

struct ReferenceModel {
  ReferenceSpec spec;
  std::vector<ColumnSpec> covariate_columns;
  CopulaModel copula;
};

// Loads the reference CSV, imputes column means and fits the copula.
ReferenceModel build_reference_model(Reference ref, const std::filesystem::path& data_dir);
ReferenceModel build_reference_model(const ReferenceSpec& spec, const SurvivalDataset& raw);

struct ScenarioConfig {
  Reference reference = Reference::kPbc;
  int n_train = 200;
  int n_test = 500;
  double censoring_target = 0.3;
  double beta_treatment = 0.0;
  std::optional<std::vector<double>> beta;  // full override, treatment first
  HazardSpec hazard;
  int n_sim = 500;
  std::uint64_t seed = 1;

  void validate() const;
  // Treatment coefficient followed by the reference coefficients, unless overridden.
  Eigen::VectorXd full_beta() const;
  std::string gamma_spec() const;  // "1" or "2/5"
  // Identifies the data-generating mechanism (independent of sample sizes
  // and of the seed).
  std::string mechanism_key() const;
};

// Scenario on the reference's default scale with the given shapes.
ScenarioConfig make_scenario(Reference ref, int n_train, double censoring_target,
                             double beta_treatment, double gamma_control, double gamma_treated,
                             std::uint64_t seed);

std::string scenario_to_json(const ScenarioConfig& scenario);
ScenarioConfig scenario_from_json(std::string_view json_text);

struct CensoringCalibration {
  Index pilot_size = 100000;
  double tolerance = 0.005;
  double bracket_factor = 10.0;
  int max_expansions = 30;
};

// Upper bound b of Uniform(0, b) censoring such that the censored fraction of
// a Monte Carlo pilot is within tolerance of the target. Larger b censors
// less. Throws DegenerateInput when the target cannot be bracketed.
double calibrate_censoring_bound(const ScenarioConfig& scenario, const ReferenceModel& ref,
                                 Engine& rng, const CensoringCalibration& options = {});

// n subjects: Bernoulli(0.5) treatment, copula covariates, Weibull event
// times, Uniform(0, bound) censoring; observed time min(T, C).
SurvivalDataset generate_sample(const ScenarioConfig& scenario, const ReferenceModel& ref,
                                double censoring_bound, Index n, Engine& rng);

struct TrainTest {
  SurvivalDataset train;
  SurvivalDataset test;
};

// Deterministic in (scenario.seed, replicate); train and test use separate streams.
TrainTest generate_dataset(const ScenarioConfig& scenario, const ReferenceModel& ref,
                           double censoring_bound, Index replicate);

// JSON sidecar mapping (mechanism, pilot seed) hashes to calibrated bounds.
class CensoringCache {
 public:
  explicit CensoringCache(std::filesystem::path path);

  std::optional<double> lookup(const ScenarioConfig& scenario, std::uint64_t pilot_seed) const;
  void store(const ScenarioConfig& scenario, std::uint64_t pilot_seed, double bound);
  void save() const;
  static std::string key(const ScenarioConfig& scenario, std::uint64_t pilot_seed);

 private:
  std::filesystem::path path_;
  std::map<std::string, double> bounds_;
};

}  // namespace survbench

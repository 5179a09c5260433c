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

#include "survbench/simgen.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/weibull.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <nlohmann/json.hpp>

#include "survbench/csv.h"
#include "survbench/error.h"
#include "survbench/stats.h"

namespace survbench {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = 3.14159265358979323846;

double sum_of(const std::vector<double>& v) { return compensated_sum(v); }

std::optional<Marginal> fit_normal(const std::string& name, const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double m = sum_of(x) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) return std::nullopt;
  Marginal out{name, Family::kNormal, {m, sd}, {}, {}, 0.0, 0.0};
  out.loglik = -0.5 * n * (std::log(2.0 * kPi * sd * sd) + 1.0);
  return out;
}

std::optional<Marginal> fit_lognormal(const std::string& name, const std::vector<double>& x) {
  std::vector<double> lx;
  for (double v : x) {
    if (!(v > 0.0)) return std::nullopt;
    lx.push_back(std::log(v));
  }
  auto normal = fit_normal(name, lx);
  if (!normal) return std::nullopt;
  Marginal out{name, Family::kLogNormal, normal->params, {}, {}, 0.0, 0.0};
  out.loglik = normal->loglik - sum_of(lx);
  return out;
}

std::optional<Marginal> fit_gamma(const std::string& name, const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double slog = 0.0;
  for (double v : x) {
    if (!(v > 0.0)) return std::nullopt;
    slog += std::log(v);
  }
  const double m = sum_of(x) / n;
  const double s = std::log(m) - slog / n;
  if (!(s > 0.0)) return std::nullopt;
  // Solve log(k) - digamma(k) = s by Newton from the Minka starting value.
  double k = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  for (int it = 0; it < 100; ++it) {
    const double f = std::log(k) - boost::math::digamma(k) - s;
    const double fp = 1.0 / k - boost::math::trigamma(k);
    const double next = k - f / fp;
    const double bounded = next > 0.0 ? next : k / 2.0;
    if (std::abs(bounded - k) < 1e-12 * k) {
      k = bounded;
      break;
    }
    k = bounded;
  }
  if (!std::isfinite(k) || !(k > 0.0)) return std::nullopt;
  const double rate = k / m;
  Marginal out{name, Family::kGamma, {k, rate}, {}, {}, 0.0, 0.0};
  out.loglik = n * (k * std::log(rate) - std::lgamma(k)) + (k - 1.0) * slog - rate * m * n;
  return out;
}

std::optional<Marginal> fit_weibull(const std::string& name, const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double xmax = 0.0;
  for (double v : x) {
    if (!(v > 0.0)) return std::nullopt;
    xmax = std::max(xmax, v);
  }
  // Work on x / max(x) for stability; the shape is scale invariant.
  std::vector<double> lz;
  for (double v : x) lz.push_back(std::log(v / xmax));
  const double mean_lz = sum_of(lz) / n;
  auto profile = [&](double k, double& f, double& fp) {
    double a = 0.0, b = 0.0, c = 0.0;
    for (double l : lz) {
      const double zk = std::exp(k * l);
      a += zk;
      b += zk * l;
      c += zk * l * l;
    }
    f = b / a - 1.0 / k - mean_lz;
    fp = (c * a - b * b) / (a * a) + 1.0 / (k * k);
  };
  double k = 1.0;
  bool ok = false;
  for (int it = 0; it < 200; ++it) {
    double f = 0.0, fp = 0.0;
    profile(k, f, fp);
    if (!std::isfinite(f) || !(fp > 0.0)) break;
    double next = k - f / fp;
    if (!(next > 0.0)) next = k / 2.0;
    if (std::abs(next - k) < 1e-12 * k) {
      k = next;
      ok = true;
      break;
    }
    k = next;
  }
  if (!ok || !std::isfinite(k)) return std::nullopt;
  double a = 0.0;
  for (double l : lz) a += std::exp(k * l);
  const double scale = xmax * std::pow(a / n, 1.0 / k);
  Marginal out{name, Family::kWeibull, {k, scale}, {}, {}, 0.0, 0.0};
  double ll = 0.0;
  for (double v : x) {
    ll += std::log(k / scale) + (k - 1.0) * std::log(v / scale) - std::pow(v / scale, k);
  }
  out.loglik = ll;
  return out;
}

Marginal fit_levels(const std::string& name, Family family, const std::vector<double>& levels,
                    const std::vector<double>& x) {
  Marginal out{name, family, {}, levels, {}, 0.0, 0.0};
  double ll = 0.0;
  for (double level : levels) {
    const auto count = static_cast<double>(std::count(x.begin(), x.end(), level));
    const double p = count / static_cast<double>(x.size());
    out.probs.push_back(p);
    if (count > 0.0) ll += count * std::log(p);
  }
  out.loglik = ll;
  out.aic = 2.0 * static_cast<double>(levels.size() - 1) - 2.0 * ll;
  return out;
}

MatrixXd symmetric_factor(const MatrixXd& r) {
  Eigen::LLT<MatrixXd> llt(r);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(r);
  const VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::kNormal: return "normal";
    case Family::kLogNormal: return "lognormal";
    case Family::kGamma: return "gamma";
    case Family::kWeibull: return "weibull";
    case Family::kBernoulli: return "bernoulli";
    case Family::kCategorical: return "categorical";
  }
  return "normal";
}

Family parse_family(std::string_view text) {
  for (Family f : {Family::kNormal, Family::kLogNormal, Family::kGamma, Family::kWeibull,
                   Family::kBernoulli, Family::kCategorical}) {
    if (to_string(f) == text) return f;
  }
  throw InvalidInput("unknown marginal family '" + std::string(text) + "'");
}

void Marginal::validate() const {
  switch (family) {
    case Family::kNormal:
    case Family::kLogNormal:
    case Family::kGamma:
    case Family::kWeibull:
      if (params.size() != 2) throw InvalidInput("marginal '" + name + "' needs two parameters");
      if (family != Family::kNormal && family != Family::kLogNormal && !(params[0] > 0.0)) {
        throw InvalidInput("marginal '" + name + "' needs a positive shape");
      }
      if (!(params[1] > 0.0)) throw InvalidInput("marginal '" + name + "' needs a positive scale");
      break;
    case Family::kBernoulli:
    case Family::kCategorical: {
      if (levels.size() != probs.size() || levels.empty()) {
        throw InvalidInput("marginal '" + name + "' needs matching levels and probabilities");
      }
      if (family == Family::kBernoulli && levels.size() != 2) {
        throw InvalidInput("bernoulli marginal '" + name + "' needs two levels");
      }
      double total = 0.0;
      for (double p : probs) {
        if (p < 0.0) throw InvalidInput("negative level probability in '" + name + "'");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("level probabilities of '" + name + "' do not sum to 1");
      break;
    }
  }
}

double Marginal::cdf(double x) const {
  switch (family) {
    case Family::kNormal: return normal_cdf((x - params[0]) / params[1]);
    case Family::kLogNormal: return x > 0.0 ? normal_cdf((std::log(x) - params[0]) / params[1]) : 0.0;
    case Family::kGamma:
      return x > 0.0 ? boost::math::cdf(boost::math::gamma_distribution<double>(params[0], 1.0 / params[1]), x) : 0.0;
    case Family::kWeibull: return x > 0.0 ? 1.0 - std::exp(-std::pow(x / params[1], params[0])) : 0.0;
    case Family::kBernoulli:
    case Family::kCategorical: {
      double c = 0.0;
      for (std::size_t k = 0; k < levels.size(); ++k) {
        if (levels[k] <= x) c += probs[k];
      }
      return std::min(c, 1.0);
    }
  }
  return 0.0;
}

double Marginal::quantile(double u) const {
  switch (family) {
    case Family::kNormal: return params[0] + params[1] * normal_quantile(u);
    case Family::kLogNormal: return std::exp(params[0] + params[1] * normal_quantile(u));
    case Family::kGamma:
      return boost::math::quantile(boost::math::gamma_distribution<double>(params[0], 1.0 / params[1]), u);
    case Family::kWeibull: return params[1] * std::pow(-std::log1p(-u), 1.0 / params[0]);
    case Family::kBernoulli:
    case Family::kCategorical: {
      double c = 0.0;
      for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
        c += probs[k];
        if (u <= c) return levels[k];
      }
      return levels.back();
    }
  }
  return 0.0;
}

std::optional<Marginal> fit_family(const std::string& name, Family family,
                                   const std::vector<double>& values) {
  if (values.size() < 2) return std::nullopt;
  std::optional<Marginal> m;
  switch (family) {
    case Family::kNormal: m = fit_normal(name, values); break;
    case Family::kLogNormal: m = fit_lognormal(name, values); break;
    case Family::kGamma: m = fit_gamma(name, values); break;
    case Family::kWeibull: m = fit_weibull(name, values); break;
    default: throw InvalidInput("fit_family handles continuous families only");
  }
  if (!m || !std::isfinite(m->loglik)) return std::nullopt;
  m->aic = 4.0 - 2.0 * m->loglik;
  return m;
}

MarginalSpec fit_marginals(const SurvivalDataset& ds, const std::vector<Family>& candidates) {
  if (ds.has_missing()) throw InvalidInput("fit_marginals needs complete data");
  if (ds.rows() < 2) throw DegenerateInput("fit_marginals needs at least two rows");
  MarginalSpec spec;
  for (Index j = 0; j < ds.cols(); ++j) {
    const auto& col = ds.columns[static_cast<std::size_t>(j)];
    std::vector<double> x(ds.x.col(j).data(), ds.x.col(j).data() + ds.rows());
    if (col.kind == ColumnKind::kBinary) {
      spec.push_back(fit_levels(col.name, Family::kBernoulli, col.levels, x));
      continue;
    }
    if (col.kind == ColumnKind::kOrdinal) {
      spec.push_back(fit_levels(col.name, Family::kCategorical, col.levels, x));
      continue;
    }
    std::optional<Marginal> best;
    for (Family f : candidates) {
      if (f == Family::kBernoulli || f == Family::kCategorical) continue;
      auto m = fit_family(col.name, f, x);
      if (m && (!best || m->aic < best->aic)) best = std::move(m);
    }
    if (!best) throw ConvergenceError("no candidate family could be fit to column '" + col.name + "'");
    spec.push_back(std::move(*best));
  }
  return spec;
}

MatrixXd repair_correlation(const MatrixXd& r) {
  if (r.rows() != r.cols()) throw InvalidInput("correlation matrix must be square");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(r);
  if (eig.info() != Eigen::Success) throw ConvergenceError("eigen decomposition failed");
  if (r.rows() == 0 || eig.eigenvalues().minCoeff() >= -1e-12) return r;
  const VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  MatrixXd a = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  const VectorXd inv_sd = a.diagonal().cwiseSqrt().cwiseInverse();
  a = inv_sd.asDiagonal() * a * inv_sd.asDiagonal();
  a = 0.5 * (a + a.transpose());
  a.diagonal().setOnes();
  return a;
}

MatrixXd estimate_correlation(const SurvivalDataset& ds) {
  if (ds.rows() < 3) throw DegenerateInput("correlation needs at least three rows");
  if (ds.has_missing()) throw InvalidInput("correlation needs complete data");
  const Index d = ds.cols();
  std::vector<std::vector<double>> ranks;
  for (Index j = 0; j < d; ++j) {
    std::vector<double> x(ds.x.col(j).data(), ds.x.col(j).data() + ds.rows());
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) {
      throw DegenerateInput("column '" + ds.columns[static_cast<std::size_t>(j)].name + "' is constant");
    }
    ranks.push_back(average_ranks(x));
  }
  MatrixXd r = MatrixXd::Identity(d, d);
  for (Index a = 0; a < d; ++a) {
    for (Index b = a + 1; b < d; ++b) {
      const double rho = pearson(ranks[static_cast<std::size_t>(a)], ranks[static_cast<std::size_t>(b)]);
      const double g = 2.0 * std::sin(kPi * rho / 6.0);
      r(a, b) = r(b, a) = std::clamp(g, -1.0, 1.0);
    }
  }
  return repair_correlation(r);
}

CopulaModel::CopulaModel(MatrixXd correlation, MarginalSpec marginals)
    : correlation_(std::move(correlation)), marginals_(std::move(marginals)) {
  const Index d = correlation_.rows();
  if (correlation_.cols() != d || static_cast<Index>(marginals_.size()) != d) {
    throw InvalidInput("copula: correlation and marginals disagree in dimension");
  }
  if (!correlation_.isApprox(correlation_.transpose(), 1e-12)) throw InvalidInput("copula: correlation not symmetric");
  for (Index j = 0; j < d; ++j) {
    if (std::abs(correlation_(j, j) - 1.0) > 1e-12) throw InvalidInput("copula: correlation diagonal must be 1");
  }
  if (d > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(correlation_);
    if (eig.eigenvalues().minCoeff() < -1e-8) throw InvalidInput("copula: correlation not positive semidefinite");
  }
  for (const auto& m : marginals_) m.validate();
  factor_ = symmetric_factor(correlation_);
}

std::vector<std::string> CopulaModel::names() const {
  std::vector<std::string> out;
  for (const auto& m : marginals_) out.push_back(m.name);
  return out;
}

MatrixXd CopulaModel::sample(Index n, Engine& rng) const {
  const Index d = dims();
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd g(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) g(i, j) = normal(rng);
  }
  const MatrixXd z = g * factor_.transpose();
  MatrixXd x(n, d);
  for (Index j = 0; j < d; ++j) {
    const auto& m = marginals_[static_cast<std::size_t>(j)];
    for (Index i = 0; i < n; ++i) {
      const double u = std::clamp(normal_cdf(z(i, j)), 1e-15, 1.0 - 1e-15);
      x(i, j) = m.quantile(u);
    }
  }
  return x;
}

MatrixXd sample_covariates(const CopulaModel& model, Index n, Engine& rng) {
  return model.sample(n, rng);
}

void HazardSpec::validate() const {
  if (!(lambda > 0.0)) throw InvalidInput("Weibull scale must be positive");
  if (!(gamma_control > 0.0) || !(gamma_treated > 0.0)) throw InvalidInput("Weibull shapes must be positive");
}

double weibull_event_time(double u, double lp, double lambda, double gamma) {
  if (!(lambda > 0.0) || !(gamma > 0.0)) throw InvalidInput("Weibull parameters must be positive");
  const double t = lambda * std::pow(-std::log(u) * std::exp(-lp), 1.0 / gamma);
  return std::max(t, std::numeric_limits<double>::min());
}

VectorXd simulate_survival_times(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& beta,
                                 const HazardSpec& hazard, const Eigen::Ref<const Eigen::VectorXi>& treatment,
                                 Engine& rng) {
  hazard.validate();
  if (beta.size() != x.cols()) throw InvalidInput("coefficient vector does not match the design width");
  if (treatment.size() != x.rows()) throw InvalidInput("treatment vector does not match the design");
  const VectorXd lp = x * beta;
  VectorXd t(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const double gamma = treatment(i) == 1 ? hazard.gamma_treated : hazard.gamma_control;
    t(i) = weibull_event_time(uniform_open(rng), lp(i), hazard.lambda, gamma);
  }
  return t;
}

std::string_view to_string(Reference ref) { return ref == Reference::kPbc ? "pbc" : "prostate"; }

Reference parse_reference(std::string_view text) {
  if (text == "pbc") return Reference::kPbc;
  if (text == "prostate") return Reference::kProstate;
  throw InvalidInput("unknown reference dataset '" + std::string(text) + "'");
}

std::vector<std::string> ReferenceSpec::design_names() const {
  std::vector<std::string> names{treatment};
  names.insert(names.end(), covariates.begin(), covariates.end());
  for (const auto& c : interactions) names.push_back(treatment + ":" + c);
  return names;
}

const ReferenceSpec& reference_spec(Reference ref) {
  static const ReferenceSpec kPbc{
      Reference::kPbc, "pbc", "pbc.csv", "pbc.schema.json", "trt",
      {"age", "sex", "ascites", "hepato", "spiders", "edema", "bili", "chol", "albumin", "copper",
       "alk_phos", "ast", "trig", "platelet", "protime", "stage"},
      {},
      {0.026, -0.218, 0.338, 0.227, 0.071, 0.481, 0.086, 0.0004, -0.799, 0.003, -0.00002, 0.004,
       -0.002, 0.0002, 0.276, 0.365},
      2241.74};
  static const ReferenceSpec kProstate{
      Reference::kProstate, "prostate", "prostate.csv", "prostate.schema.json", "rx",
      {"age", "wt", "sbp", "dbp", "sz", "ap", "hg", "sg", "pf", "hx", "bm", "ekg"},
      {"age", "bm", "ap"},
      {-0.006, -0.01, -0.016, 0.02, 0.014, 0.0001, -0.006, 0.074, 0.333, 0.467, 0.63, 0.316,
       0.059, -0.612, -0.0003},
      39.2};
  return ref == Reference::kPbc ? kPbc : kProstate;
}

ReferenceModel build_reference_model(const ReferenceSpec& spec, const SurvivalDataset& raw) {
  const SurvivalDataset imputed = impute_column_means(raw);
  std::vector<Index> cols;
  for (const auto& name : spec.covariates) cols.push_back(imputed.column_index(name));
  const SurvivalDataset cov = imputed.select_columns(cols);
  MatrixXd r = estimate_correlation(cov);
  MarginalSpec marginals =
      fit_marginals(cov, {Family::kNormal, Family::kLogNormal, Family::kGamma, Family::kWeibull});
  return ReferenceModel{spec, cov.columns, CopulaModel(std::move(r), std::move(marginals))};
}

ReferenceModel build_reference_model(Reference ref, const std::filesystem::path& data_dir) {
  const ReferenceSpec& spec = reference_spec(ref);
  const Schema schema = load_schema(data_dir / spec.schema_file);
  return build_reference_model(spec, load_csv(data_dir / spec.csv_file, schema));
}

void ScenarioConfig::validate() const {
  if (!(censoring_target > 0.0 && censoring_target < 1.0)) throw InvalidInput("censoring target must lie in (0,1)");
  if (n_train < 2 || n_test < 2) throw InvalidInput("sample sizes must be at least 2");
  if (n_sim < 1) throw InvalidInput("n_sim must be positive");
  hazard.validate();
  const auto& spec = reference_spec(reference);
  if (beta && beta->size() != spec.design_names().size()) {
    throw InvalidInput("beta length does not match the generated design width");
  }
}

VectorXd ScenarioConfig::full_beta() const {
  if (beta) return Eigen::Map<const VectorXd>(beta->data(), static_cast<Index>(beta->size()));
  const auto& spec = reference_spec(reference);
  VectorXd b(static_cast<Index>(spec.beta.size() + 1));
  b(0) = beta_treatment;
  for (std::size_t k = 0; k < spec.beta.size(); ++k) b(static_cast<Index>(k + 1)) = spec.beta[k];
  return b;
}

std::string ScenarioConfig::gamma_spec() const {
  std::string out = format_double(hazard.gamma_control);
  if (!hazard.proportional()) out += "/" + format_double(hazard.gamma_treated);
  return out;
}

std::string ScenarioConfig::mechanism_key() const {
  nlohmann::json j;
  j["reference"] = to_string(reference);
  j["censoring"] = censoring_target;
  const VectorXd b = full_beta();
  j["beta"] = std::vector<double>(b.data(), b.data() + b.size());
  j["lambda"] = hazard.lambda;
  j["gamma"] = {hazard.gamma_control, hazard.gamma_treated};
  return j.dump();
}

ScenarioConfig make_scenario(Reference ref, int n_train, double censoring_target,
                             double beta_treatment, double gamma_control, double gamma_treated,
                             std::uint64_t seed) {
  ScenarioConfig s;
  s.reference = ref;
  s.n_train = n_train;
  s.censoring_target = censoring_target;
  s.beta_treatment = beta_treatment;
  s.hazard = HazardSpec{reference_spec(ref).lambda, gamma_control, gamma_treated};
  s.seed = seed;
  return s;
}

std::string scenario_to_json(const ScenarioConfig& s) {
  nlohmann::ordered_json j;
  j["reference"] = to_string(s.reference);
  j["n_train"] = s.n_train;
  j["n_test"] = s.n_test;
  j["censoring_target"] = s.censoring_target;
  j["beta_treatment"] = s.beta_treatment;
  if (s.beta) j["beta"] = *s.beta;
  j["lambda"] = s.hazard.lambda;
  j["gamma_control"] = s.hazard.gamma_control;
  j["gamma_treated"] = s.hazard.gamma_treated;
  j["n_sim"] = s.n_sim;
  j["seed"] = s.seed;
  return j.dump(2);
}

ScenarioConfig scenario_from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("scenario is not valid JSON: ") + e.what());
  }
  ScenarioConfig s;
  try {
    s.reference = parse_reference(j.at("reference").get<std::string>());
    s.n_train = j.value("n_train", s.n_train);
    s.n_test = j.value("n_test", s.n_test);
    s.censoring_target = j.value("censoring_target", s.censoring_target);
    s.beta_treatment = j.value("beta_treatment", s.beta_treatment);
    if (j.contains("beta")) s.beta = j["beta"].get<std::vector<double>>();
    s.hazard.lambda = j.value("lambda", reference_spec(s.reference).lambda);
    const double g = j.value("gamma", 1.0);
    s.hazard.gamma_control = j.value("gamma_control", g);
    s.hazard.gamma_treated = j.value("gamma_treated", s.hazard.gamma_control);
    s.n_sim = j.value("n_sim", s.n_sim);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed scenario: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

struct Draws {
  MatrixXd design;
  Eigen::VectorXi treatment;
  VectorXd event_time;
};

Draws draw_event_times(const ScenarioConfig& scenario, const ReferenceModel& ref, Index n, Engine& rng) {
  const auto& spec = ref.spec;
  Draws d;
  d.treatment.resize(n);
  for (Index i = 0; i < n; ++i) d.treatment(i) = uniform_open(rng) < 0.5 ? 1 : 0;
  const MatrixXd cov = ref.copula.sample(n, rng);
  const Index p = cov.cols();
  const Index q = static_cast<Index>(spec.interactions.size());
  d.design.resize(n, 1 + p + q);
  d.design.col(0) = d.treatment.cast<double>();
  d.design.middleCols(1, p) = cov;
  for (Index k = 0; k < q; ++k) {
    const auto it = std::find(spec.covariates.begin(), spec.covariates.end(),
                              spec.interactions[static_cast<std::size_t>(k)]);
    const Index c = static_cast<Index>(it - spec.covariates.begin());
    d.design.col(1 + p + k) = d.design.col(0).cwiseProduct(cov.col(c));
  }
  d.event_time = simulate_survival_times(d.design, scenario.full_beta(), scenario.hazard, d.treatment, rng);
  return d;
}

}  // namespace

double calibrate_censoring_bound(const ScenarioConfig& scenario, const ReferenceModel& ref, Engine& rng,
                                 const CensoringCalibration& options) {
  scenario.validate();
  const Draws draws = draw_event_times(scenario, ref, options.pilot_size, rng);
  const Index n = options.pilot_size;
  // Censored iff b * V < T, i.e. V < T / b; common random numbers make the
  // censored fraction exactly monotone in b.
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = uniform_open(rng);
  auto censored_fraction = [&](double b) {
    Index c = 0;
    for (Index i = 0; i < n; ++i) c += (b * v(i) < draws.event_time(i)) ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(n);
  };
  const double target = scenario.censoring_target;
  double lo = draws.event_time.minCoeff();
  double hi = options.bracket_factor * draws.event_time.maxCoeff();
  int expansions = 0;
  while (censored_fraction(lo) < target) {
    if (++expansions > options.max_expansions) throw DegenerateInput("censoring target unreachable: bracket too high");
    lo /= options.bracket_factor;
  }
  while (censored_fraction(hi) > target) {
    if (++expansions > options.max_expansions) throw DegenerateInput("censoring target unreachable: bracket too low");
    hi *= options.bracket_factor;
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double f = censored_fraction(mid);
    if (std::abs(f - target) <= options.tolerance) return mid;
    if (f > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw DegenerateInput("censoring calibration did not reach the tolerance");
}

SurvivalDataset generate_sample(const ScenarioConfig& scenario, const ReferenceModel& ref,
                                double censoring_bound, Index n, Engine& rng) {
  if (!(censoring_bound > 0.0)) throw InvalidInput("censoring bound must be positive");
  const Draws draws = draw_event_times(scenario, ref, n, rng);
  SurvivalDataset ds;
  ds.columns.push_back(ColumnSpec{ref.spec.treatment, ColumnKind::kBinary, {0.0, 1.0}});
  ds.columns.insert(ds.columns.end(), ref.covariate_columns.begin(), ref.covariate_columns.end());
  for (const auto& c : ref.spec.interactions) {
    ds.columns.push_back(ColumnSpec{ref.spec.treatment + ":" + c, ColumnKind::kContinuous, {}});
  }
  ds.x = draws.design;
  ds.time.resize(n);
  ds.status.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double c = censoring_bound * uniform_open(rng);
    const double t = draws.event_time(i);
    ds.time(i) = std::min(t, c);
    ds.status(i) = t <= c ? 1 : 0;
  }
  ds.missing = BoolMatrix::Constant(n, ds.x.cols(), false);
  return ds;
}

TrainTest generate_dataset(const ScenarioConfig& scenario, const ReferenceModel& ref,
                           double censoring_bound, Index replicate) {
  scenario.validate();
  const auto idx = static_cast<std::uint64_t>(replicate);
  Engine train_rng = make_stream(scenario.seed, idx, "train");
  Engine test_rng = make_stream(scenario.seed, idx, "test");
  TrainTest out;
  out.train = generate_sample(scenario, ref, censoring_bound, scenario.n_train, train_rng);
  out.test = generate_sample(scenario, ref, censoring_bound, scenario.n_test, test_rng);
  return out;
}

CensoringCache::CensoringCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [k, v] : j.items()) bounds_[k] = v.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("censoring cache " + path_.string() + " is corrupt: " + e.what());
  }
}

std::string CensoringCache::key(const ScenarioConfig& scenario, std::uint64_t pilot_seed) {
  char buf[17];
  const std::string text = scenario.mechanism_key() + "#" + std::to_string(pilot_seed);
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(text)));
  return buf;
}

std::optional<double> CensoringCache::lookup(const ScenarioConfig& scenario, std::uint64_t pilot_seed) const {
  auto it = bounds_.find(key(scenario, pilot_seed));
  if (it == bounds_.end()) return std::nullopt;
  return it->second;
}

void CensoringCache::store(const ScenarioConfig& scenario, std::uint64_t pilot_seed, double bound) {
  bounds_[key(scenario, pilot_seed)] = bound;
}

void CensoringCache::save() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : bounds_) j[k] = v;
  std::ofstream out(path_);
  if (!out) throw InvalidInput("cannot write censoring cache " + path_.string());
  out << j.dump(2) << "\n";
}

}  // namespace survbench

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

#include "survbench/coxph.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "survbench/error.h"
#include "survbench/stats.h"

namespace survbench {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

struct Evaluation {
  double loglik = 0.0;
  VectorXd score;
  MatrixXd info;
};

// Subjects grouped by distinct time, groups in descending time order so the
// risk set can be accumulated in one pass.
class RiskSets {
 public:
  RiskSets(const Eigen::Ref<const VectorXd>& time, const Eigen::Ref<const VectorXi>& status)
      : status_(status) {
    const Index n = time.size();
    order_.resize(static_cast<std::size_t>(n));
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](Index a, Index b) { return time(a) > time(b); });
    std::size_t i = 0;
    while (i < order_.size()) {
      std::size_t j = i;
      while (j < order_.size() && time(order_[j]) == time(order_[i])) ++j;
      groups_.emplace_back(i, j);
      i = j;
    }
  }

  const std::vector<Index>& order() const { return order_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& groups() const { return groups_; }
  bool is_event(Index i) const { return status_(i) == 1; }

 private:
  VectorXi status_;
  std::vector<Index> order_;
  std::vector<std::pair<std::size_t, std::size_t>> groups_;
};

Evaluation evaluate(const RiskSets& rs, const Eigen::Ref<const MatrixXd>& x,
                    const Eigen::Ref<const VectorXd>& beta, Ties ties, bool need_info) {
  const Index d = x.cols();
  Evaluation ev;
  ev.score = VectorXd::Zero(d);
  if (need_info) ev.info = MatrixXd::Zero(d, d);
  const VectorXd eta = d > 0 ? VectorXd(x * beta) : VectorXd::Zero(x.rows());
  const double shift = eta.size() > 0 ? eta.maxCoeff() : 0.0;
  const VectorXd w = (eta.array() - shift).exp().matrix();

  double s0 = 0.0;
  VectorXd s1 = VectorXd::Zero(d);
  MatrixXd s2 = MatrixXd::Zero(d, d);
  VectorXd e1(d);
  MatrixXd e2(d, d);
  const auto& order = rs.order();
  for (const auto& [begin, end] : rs.groups()) {
    double e0 = 0.0;
    e1.setZero();
    if (need_info) e2.setZero();
    int n_events = 0;
    for (std::size_t k = begin; k < end; ++k) {
      const Index i = order[k];
      const double wi = w(i);
      s0 += wi;
      s1.noalias() += wi * x.row(i).transpose();
      if (need_info) s2.noalias() += wi * x.row(i).transpose() * x.row(i);
      if (rs.is_event(i)) {
        ++n_events;
        e0 += wi;
        e1.noalias() += wi * x.row(i).transpose();
        if (need_info) e2.noalias() += wi * x.row(i).transpose() * x.row(i);
        ev.loglik += eta(i);
        ev.score.noalias() += x.row(i).transpose();
      }
    }
    for (int r = 0; r < n_events; ++r) {
      const double f = ties == Ties::kEfron ? static_cast<double>(r) / n_events : 0.0;
      const double denom = s0 - f * e0;
      const VectorXd mean = (s1 - f * e1) / denom;
      ev.loglik -= std::log(denom) + shift;
      ev.score -= mean;
      if (need_info) ev.info.noalias() += (s2 - f * e2) / denom - mean * mean.transpose();
    }
  }
  return ev;
}

double max_abs(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void check_design(const SurvivalDataset& ds, const std::vector<Index>& columns) {
  ds.validate();
  for (Index j : columns) {
    if (j < 0 || j >= ds.cols()) throw InvalidInput("Cox column index out of range");
    if (ds.missing.size() && ds.missing.col(j).any()) {
      throw InvalidInput("Cox fit on column '" + ds.columns[static_cast<std::size_t>(j)].name +
                         "' with missing values");
    }
  }
}

}  // namespace

Index CoxModel::free_parameters() const {
  return static_cast<Index>(std::count(aliased.begin(), aliased.end(), false));
}

double CoxModel::aic() const { return -2.0 * loglik + 2.0 * static_cast<double>(free_parameters()); }

double CoxModel::bic() const {
  return -2.0 * loglik +
         std::log(static_cast<double>(std::max<Index>(n_events, 1))) *
             static_cast<double>(free_parameters());
}

double CoxModel::linear_predictor(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != dims()) throw InvalidInput("covariate vector has the wrong dimension");
  return beta.dot(x - center);
}

MatrixXd CoxModel::design(const SurvivalDataset& ds) const {
  MatrixXd out(ds.rows(), dims());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const Index j = columns[k];
    if (j >= ds.cols() || ds.columns[static_cast<std::size_t>(j)].name != names[k]) {
      throw InvalidInput("dataset layout does not match the Cox model");
    }
    out.col(static_cast<Index>(k)) = ds.x.col(j);
  }
  return out;
}

VectorXd CoxModel::linear_predictors(const SurvivalDataset& ds) const {
  const MatrixXd x = design(ds);
  if (dims() == 0) return VectorXd::Zero(ds.rows());
  return (x.rowwise() - center.transpose()) * beta;
}

double cox_partial_loglik(const Eigen::Ref<const MatrixXd>& x,
                          const Eigen::Ref<const VectorXd>& time,
                          const Eigen::Ref<const VectorXi>& status,
                          const Eigen::Ref<const VectorXd>& beta, Ties ties) {
  if (x.rows() != time.size() || beta.size() != x.cols()) {
    throw InvalidInput("partial likelihood: dimension mismatch");
  }
  RiskSets rs(time, status);
  return evaluate(rs, x, beta, ties, false).loglik;
}

StepFunction breslow_baseline(const Eigen::Ref<const VectorXd>& beta,
                              const Eigen::Ref<const MatrixXd>& x,
                              const Eigen::Ref<const VectorXd>& time,
                              const Eigen::Ref<const VectorXi>& status,
                              const Eigen::Ref<const VectorXd>& center) {
  if (x.cols() != beta.size() || center.size() != beta.size() || x.rows() != time.size()) {
    throw InvalidInput("Breslow baseline: dimension mismatch");
  }
  const VectorXd risk =
      beta.size() > 0 ? VectorXd(((x.rowwise() - center.transpose()) * beta).array().exp())
                      : VectorXd::Ones(time.size());
  RiskSets rs(time, status);
  std::vector<double> knots;
  std::vector<double> jumps;
  double at_risk = 0.0;
  for (const auto& [begin, end] : rs.groups()) {
    double d = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const Index i = rs.order()[k];
      at_risk += risk(i);
      if (rs.is_event(i)) d += 1.0;
    }
    if (d > 0.0) {
      knots.push_back(time(rs.order()[begin]));
      jumps.push_back(d / at_risk);
    }
  }
  std::reverse(knots.begin(), knots.end());
  std::reverse(jumps.begin(), jumps.end());
  std::vector<double> values(jumps.size());
  double h = 0.0;
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    h += jumps[k];
    values[k] = h;
  }
  return StepFunction(std::move(knots), std::move(values), 0.0);
}

CoxModel fit_cox(const SurvivalDataset& ds, const CoxOptions& options) {
  std::vector<Index> all(static_cast<std::size_t>(ds.cols()));
  std::iota(all.begin(), all.end(), 0);
  return fit_cox(ds, all, options);
}

CoxModel fit_cox(const SurvivalDataset& ds, const std::vector<Index>& columns,
                 const CoxOptions& options) {
  check_design(ds, columns);
  if (ds.events() < 1) throw DegenerateInput("Cox fit needs at least one event");
  const Index d = static_cast<Index>(columns.size());

  CoxModel model;
  model.columns = columns;
  model.ties = options.ties;
  model.n = ds.rows();
  model.n_events = ds.events();
  MatrixXd x(ds.rows(), d);
  for (Index k = 0; k < d; ++k) {
    const Index j = columns[static_cast<std::size_t>(k)];
    x.col(k) = ds.x.col(j);
    model.names.push_back(ds.columns[static_cast<std::size_t>(j)].name);
  }
  model.center = d > 0 ? VectorXd(x.colwise().mean().transpose()) : VectorXd();
  MatrixXd xc = x;
  if (d > 0) xc.rowwise() -= model.center.transpose();

  std::vector<Index> active;
  model.aliased.assign(static_cast<std::size_t>(d), false);
  for (Index k = 0; k < d; ++k) {
    if (xc.col(k).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, std::abs(model.center(k)))) {
      model.aliased[static_cast<std::size_t>(k)] = true;
    } else {
      active.push_back(k);
    }
  }
  const Index p = static_cast<Index>(active.size());
  MatrixXd xa(ds.rows(), p);
  for (Index k = 0; k < p; ++k) xa.col(k) = xc.col(active[static_cast<std::size_t>(k)]);

  RiskSets rs(ds.time, ds.status);
  VectorXd b = VectorXd::Zero(p);
  if (options.init) {
    if (options.init->size() != d) throw InvalidInput("Cox init has the wrong dimension");
    for (Index k = 0; k < p; ++k) b(k) = (*options.init)(active[static_cast<std::size_t>(k)]);
  }
  model.loglik_null = evaluate(rs, xa, VectorXd::Zero(p), options.ties, false).loglik;
  Evaluation cur = evaluate(rs, xa, b, options.ties, true);
  if (!std::isfinite(cur.loglik)) throw ConvergenceError("Cox fit: non-finite initial likelihood");

  int iter = 0;
  bool converged = max_abs(cur.score) < options.tol;
  while (!converged && iter < options.max_iter) {
    ++iter;
    Eigen::LLT<MatrixXd> llt(cur.info);
    if (llt.info() != Eigen::Success) throw ConvergenceError("Cox fit: singular information matrix");
    VectorXd step = llt.solve(cur.score);
    VectorXd next_b = b + step;
    Evaluation next = evaluate(rs, xa, next_b, options.ties, true);
    int halvings = 0;
    while (!(std::isfinite(next.loglik) && next.loglik > cur.loglik) && halvings < 40) {
      step *= 0.5;
      next_b = b + step;
      next = evaluate(rs, xa, next_b, options.ties, true);
      ++halvings;
    }
    if (!(std::isfinite(next.loglik) && next.loglik > cur.loglik)) {
      // No ascent direction left at working precision.
      converged = true;
      break;
    }
    if (max_abs(next_b) > options.divergence_bound) {
      throw ConvergenceError("Cox fit: coefficient diverging (monotone likelihood)");
    }
    const double rel = std::abs(next.loglik - cur.loglik) / std::max(1.0, std::abs(next.loglik));
    b = next_b;
    cur = std::move(next);
    converged = max_abs(cur.score) < options.tol || rel < options.rel_loglik_tol;
  }
  if (!converged) throw ConvergenceError("Cox fit: no convergence within max_iter");

  model.iterations = iter;
  model.converged = true;
  model.loglik = cur.loglik;
  model.beta = VectorXd::Zero(d);
  model.score = VectorXd::Zero(d);
  model.cov = MatrixXd::Zero(d, d);
  MatrixXd cov_active;
  if (p > 0) {
    Eigen::LLT<MatrixXd> llt(cur.info);
    if (llt.info() != Eigen::Success) throw ConvergenceError("Cox fit: singular information matrix");
    cov_active = llt.solve(MatrixXd::Identity(p, p));
  }
  for (Index a = 0; a < p; ++a) {
    const Index ka = active[static_cast<std::size_t>(a)];
    model.beta(ka) = b(a);
    model.score(ka) = cur.score(a);
    for (Index c = 0; c < p; ++c) {
      model.cov(ka, active[static_cast<std::size_t>(c)]) = cov_active(a, c);
    }
  }
  model.baseline = breslow_baseline(model.beta, x, ds.time, ds.status,
                                    d > 0 ? model.center : VectorXd());
  return model;
}

double predict_survival(const CoxModel& model, const Eigen::Ref<const VectorXd>& x, double t) {
  if (t < 0.0) throw InvalidInput("prediction time must be nonnegative");
  const double lp = model.linear_predictor(x);
  return std::exp(-model.baseline(t) * std::exp(lp));
}

VectorXd predict_survival(const CoxModel& model, const SurvivalDataset& ds, double t) {
  if (t < 0.0) throw InvalidInput("prediction time must be nonnegative");
  const double h0 = model.baseline(t);
  return (-h0 * model.linear_predictors(ds).array().exp()).exp().matrix();
}

CoxModel stepwise_select(const SurvivalDataset& ds, const std::vector<Index>& candidates,
                         Criterion criterion, const std::vector<Index>& forced,
                         const CoxOptions& options) {
  auto score_of = [&](const CoxModel& m) {
    return criterion == Criterion::kAic ? m.aic() : m.bic();
  };
  std::set<Index> forced_set(forced.begin(), forced.end());
  std::set<Index> pool;
  for (Index j : candidates) {
    if (!forced_set.count(j)) pool.insert(j);
  }
  std::set<Index> selected = forced_set;
  auto fit_set = [&](const std::set<Index>& cols) {
    return fit_cox(ds, std::vector<Index>(cols.begin(), cols.end()), options);
  };
  CoxModel current = fit_set(selected);
  double current_score = score_of(current);
  for (;;) {
    // Moves ordered by column index; the first strictly best move wins.
    std::set<Index> moves = pool;
    std::optional<Index> best_move;
    std::optional<CoxModel> best_model;
    double best_score = current_score;
    for (Index j : moves) {
      std::set<Index> trial = selected;
      if (selected.count(j)) {
        trial.erase(j);
      } else {
        trial.insert(j);
      }
      CoxModel m = fit_set(trial);
      const double s = score_of(m);
      if (s < best_score - 1e-10) {
        best_score = s;
        best_move = j;
        best_model = std::move(m);
      }
    }
    if (!best_move) break;
    if (selected.count(*best_move)) {
      selected.erase(*best_move);
    } else {
      selected.insert(*best_move);
    }
    current = std::move(*best_model);
    current_score = best_score;
  }
  return current;
}

PhTestResult ph_test(const CoxModel& model, const SurvivalDataset& ds) {
  if (!model.converged) throw InvalidInput("PH test needs a converged model");
  const Index d = model.dims();
  if (ds.events() < 2) throw DegenerateInput("PH test needs at least two events");
  if (ds.events() < d) throw DegenerateInput("PH test: fewer events than covariates");
  MatrixXd x = model.design(ds);
  if (d > 0) x.rowwise() -= model.center.transpose();

  // Time transform: 1 - KM(t-) at each event time, centered over events.
  const StepFunction km = km_estimator(ds.time, ds.status);
  double gbar = 0.0;
  for (Index i = 0; i < ds.rows(); ++i) {
    if (ds.status(i) == 1) gbar += 1.0 - km.left_limit(ds.time(i));
  }
  gbar /= static_cast<double>(ds.events());

  std::vector<Index> active;
  for (Index k = 0; k < d; ++k) {
    if (!model.aliased[static_cast<std::size_t>(k)]) active.push_back(k);
  }
  const Index p = static_cast<Index>(active.size());
  MatrixXd xa(ds.rows(), p);
  VectorXd ba(p);
  for (Index k = 0; k < p; ++k) {
    xa.col(k) = x.col(active[static_cast<std::size_t>(k)]);
    ba(k) = model.beta(active[static_cast<std::size_t>(k)]);
  }

  // Score and information of the model extended by x * g(t), at theta = 0.
  VectorXd u = VectorXd::Zero(2 * p);
  MatrixXd info = MatrixXd::Zero(2 * p, 2 * p);
  RiskSets rs(ds.time, ds.status);
  const VectorXd eta = xa * ba;
  const double shift = eta.size() ? eta.maxCoeff() : 0.0;
  const VectorXd w = (eta.array() - shift).exp().matrix();
  double s0 = 0.0;
  VectorXd s1 = VectorXd::Zero(p);
  MatrixXd s2 = MatrixXd::Zero(p, p);
  for (const auto& [begin, end] : rs.groups()) {
    double e0 = 0.0;
    VectorXd e1 = VectorXd::Zero(p);
    MatrixXd e2 = MatrixXd::Zero(p, p);
    VectorXd xsum = VectorXd::Zero(p);
    int n_events = 0;
    for (std::size_t k = begin; k < end; ++k) {
      const Index i = rs.order()[k];
      s0 += w(i);
      s1.noalias() += w(i) * xa.row(i).transpose();
      s2.noalias() += w(i) * xa.row(i).transpose() * xa.row(i);
      if (rs.is_event(i)) {
        ++n_events;
        e0 += w(i);
        e1.noalias() += w(i) * xa.row(i).transpose();
        e2.noalias() += w(i) * xa.row(i).transpose() * xa.row(i);
        xsum += xa.row(i).transpose();
      }
    }
    if (n_events == 0) continue;
    const double g = 1.0 - km.left_limit(ds.time(rs.order()[begin])) - gbar;
    VectorXd mean_sum = VectorXd::Zero(p);
    MatrixXd v_sum = MatrixXd::Zero(p, p);
    for (int r = 0; r < n_events; ++r) {
      const double f = model.ties == Ties::kEfron ? static_cast<double>(r) / n_events : 0.0;
      const double denom = s0 - f * e0;
      const VectorXd mean = (s1 - f * e1) / denom;
      mean_sum += mean;
      v_sum += (s2 - f * e2) / denom - mean * mean.transpose();
    }
    const VectorXd resid = xsum - mean_sum;
    u.head(p) += resid;
    u.tail(p) += g * resid;
    info.topLeftCorner(p, p) += v_sum;
    info.topRightCorner(p, p) += g * v_sum;
    info.bottomRightCorner(p, p) += g * g * v_sum;
  }
  info.bottomLeftCorner(p, p) = info.topRightCorner(p, p).transpose();

  auto score_stat = [&](const std::vector<Index>& idx) {
    const Index m = static_cast<Index>(idx.size());
    MatrixXd sub(m, m);
    VectorXd us(m);
    for (Index a = 0; a < m; ++a) {
      us(a) = u(idx[static_cast<std::size_t>(a)]);
      for (Index b = 0; b < m; ++b) sub(a, b) = info(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    Eigen::LDLT<MatrixXd> ldlt(sub);
    if (ldlt.info() != Eigen::Success) throw ConvergenceError("PH test: singular information");
    return us.dot(ldlt.solve(us));
  };

  PhTestResult result;
  std::vector<Index> beta_idx(static_cast<std::size_t>(p));
  std::iota(beta_idx.begin(), beta_idx.end(), 0);
  for (Index k = 0; k < p; ++k) {
    auto idx = beta_idx;
    idx.push_back(p + k);
    const double stat = score_stat(idx);
    result.names.push_back(model.names[static_cast<std::size_t>(active[static_cast<std::size_t>(k)])]);
    result.chisq.push_back(stat);
    result.df.push_back(1);
    result.p.push_back(chi_squared_upper_tail(stat, 1.0));
  }
  std::vector<Index> all(static_cast<std::size_t>(2 * p));
  std::iota(all.begin(), all.end(), 0);
  result.global_chisq = p > 0 ? score_stat(all) : 0.0;
  result.global_df = static_cast<int>(p);
  result.global_p = p > 0 ? chi_squared_upper_tail(result.global_chisq, static_cast<double>(p)) : 1.0;
  return result;
}

}  // namespace survbench

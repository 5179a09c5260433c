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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rsf_internal.h"
#include "survbench/error.h"

namespace survbench {
namespace detail {

namespace {

double brier_child(const NodeFrame& f, const std::vector<char>& left, char which) {
  double n_c = 0.0;
  for (Index k = 0; k < f.size(); ++k) n_c += (left[static_cast<std::size_t>(k)] == which) ? 1.0 : 0.0;
  if (n_c == 0.0) return 0.0;
  double processed = 0.0;
  double surv = 1.0;
  double event_weight = 0.0;
  double total = 0.0;
  std::size_t n_times = 0;
  for (std::size_t g = 0; g < f.groups(); ++g) {
    const std::size_t b = f.group_start[g];
    const std::size_t e = f.group_start[g + 1];
    const double at_risk = n_c - processed;
    double d = 0.0;
    double members = 0.0;
    bool node_event = false;
    for (std::size_t k = b; k < e; ++k) {
      if (f.status[k] == 1) node_event = true;
      if (left[k] != which) continue;
      members += 1.0;
      if (f.status[k] == 1) {
        d += 1.0;
        if (f.g_minus[k] > 0.0) event_weight += 1.0 / f.g_minus[k];
      }
    }
    if (at_risk > 0.0) surv *= 1.0 - d / at_risk;
    processed += members;
    if (!node_event) continue;
    const double g_t = f.g_at_group[g];
    const double alive = n_c - processed;
    double score = surv * surv * event_weight;
    if (g_t > 0.0) score += (1.0 - surv) * (1.0 - surv) * alive / g_t;
    total += score / n_c;
    ++n_times;
  }
  return n_times == 0 ? 0.0 : total / static_cast<double>(n_times);
}

std::optional<double> brier_gradient(const NodeFrame& f, const std::vector<char>& left) {
  double n_left = 0.0;
  for (char c : left) n_left += c ? 1.0 : 0.0;
  const double n = static_cast<double>(f.size());
  const double child = (n_left / n) * brier_child(f, left, 1) + ((n - n_left) / n) * brier_child(f, left, 0);
  return f.brier_parent - child;
}

std::optional<double> logrank_score_statistic(const NodeFrame& f, const std::vector<char>& left) {
  const double n = static_cast<double>(f.size());
  double n_left = 0.0;
  double s_left = 0.0;
  for (Index k = 0; k < f.size(); ++k) {
    if (!left[static_cast<std::size_t>(k)]) continue;
    n_left += 1.0;
    s_left += f.lr_score[static_cast<std::size_t>(k)];
  }
  if (n < 2.0) return std::nullopt;
  const double var = n_left * (n - n_left) / (n * (n - 1.0)) * f.lr_score_ss;
  if (!(var > 0.0)) return std::nullopt;
  return std::abs(s_left - n_left * f.lr_score_mean) / std::sqrt(var);
}

std::optional<double> harrell_statistic(const NodeFrame& f, const std::vector<char>& left) {
  double after_left = 0.0;
  double after_right = 0.0;
  double concordant = 0.0;
  double comparable = 0.0;
  for (std::size_t g = f.groups(); g-- > 0;) {
    const std::size_t b = f.group_start[g];
    const std::size_t e = f.group_start[g + 1];
    for (std::size_t k = b; k < e; ++k) {
      if (f.status[k] != 1) continue;
      comparable += after_left + after_right;
      if (left[k]) {
        concordant += after_right + 0.5 * after_left;
      } else {
        concordant += 0.5 * after_right;
      }
    }
    for (std::size_t k = b; k < e; ++k) (left[k] ? after_left : after_right) += 1.0;
  }
  if (comparable == 0.0) return std::nullopt;
  return std::abs(concordant / comparable - 0.5);
}

}  // namespace

NodeFrame make_frame(const double* time, const int* status, const std::vector<Index>& rows,
                     SplitRule rule, const StepFunction* censor_surv) {
  NodeFrame f;
  f.row = rows;
  std::stable_sort(f.row.begin(), f.row.end(), [&](Index a, Index b) { return time[a] < time[b]; });
  f.time.reserve(f.row.size());
  f.status.reserve(f.row.size());
  for (Index r : f.row) {
    f.time.push_back(time[r]);
    f.status.push_back(status[r]);
    f.events += status[r];
  }
  for (std::size_t k = 0; k < f.time.size(); ++k) {
    if (k == 0 || f.time[k] != f.time[k - 1]) f.group_start.push_back(k);
  }
  f.group_start.push_back(f.time.size());

  if (rule == SplitRule::kLogRankScore) {
    f.lr_score.assign(f.time.size(), 0.0);
    double at_risk = static_cast<double>(f.time.size());
    double cum = 0.0;
    for (std::size_t g = 0; g < f.groups(); ++g) {
      double d = 0.0;
      for (std::size_t k = f.group_start[g]; k < f.group_start[g + 1]; ++k) d += f.status[k];
      cum += d / at_risk;
      for (std::size_t k = f.group_start[g]; k < f.group_start[g + 1]; ++k) f.lr_score[k] = f.status[k] - cum;
      at_risk -= static_cast<double>(f.group_start[g + 1] - f.group_start[g]);
    }
    f.lr_score_mean = std::accumulate(f.lr_score.begin(), f.lr_score.end(), 0.0) / static_cast<double>(f.size());
    for (double a : f.lr_score) f.lr_score_ss += (a - f.lr_score_mean) * (a - f.lr_score_mean);
  }

  if (rule == SplitRule::kBrierGradient) {
    if (censor_surv == nullptr) throw InvalidInput("Brier split rule needs a censoring curve");
    f.g_minus.reserve(f.time.size());
    for (double t : f.time) f.g_minus.push_back(censor_surv->left_limit(t));
    for (std::size_t g = 0; g < f.groups(); ++g) f.g_at_group.push_back((*censor_surv)(f.time[f.group_start[g]]));
    f.brier_parent = brier_child(f, std::vector<char>(f.time.size(), 1), 1);
  }
  return f;
}

std::optional<double> logrank_statistic(const NodeFrame& f, const std::vector<char>& left) {
  double y = 0.0;
  double y_left = 0.0;
  double o_minus_e = 0.0;
  double var = 0.0;
  for (std::size_t g = f.groups(); g-- > 0;) {
    const std::size_t b = f.group_start[g];
    const std::size_t e = f.group_start[g + 1];
    double d = 0.0;
    double d_left = 0.0;
    for (std::size_t k = b; k < e; ++k) {
      y += 1.0;
      if (left[k]) y_left += 1.0;
      if (f.status[k] == 1) {
        d += 1.0;
        if (left[k]) d_left += 1.0;
      }
    }
    if (d == 0.0) continue;
    const double share = y_left / y;
    o_minus_e += d_left - d * share;
    if (y > 1.0) var += d * share * (1.0 - share) * (y - d) / (y - 1.0);
  }
  if (!(var > 0.0)) return std::nullopt;
  return std::abs(o_minus_e) / std::sqrt(var);
}

std::optional<double> score_partition(SplitRule rule, const NodeFrame& frame, const std::vector<char>& left) {
  if (frame.events == 0) return std::nullopt;
  switch (rule) {
    case SplitRule::kLogRankTest:
    case SplitRule::kExtraTrees:
    case SplitRule::kMaxStat:
      return logrank_statistic(frame, left);
    case SplitRule::kLogRankScore:
      return logrank_score_statistic(frame, left);
    case SplitRule::kBrierGradient:
      return brier_gradient(frame, left);
    case SplitRule::kHarrellC:
      return harrell_statistic(frame, left);
  }
  return std::nullopt;
}

}  // namespace detail

std::optional<double> split_score(SplitRule rule, const Eigen::Ref<const Eigen::VectorXd>& time,
                                  const Eigen::Ref<const Eigen::VectorXi>& status,
                                  const Eigen::Ref<const Eigen::VectorXd>& x, double cut,
                                  const StepFunction& censor_surv) {
  const Index n = time.size();
  if (status.size() != n || x.size() != n) throw InvalidInput("split score: length mismatch");
  const Eigen::VectorXd t = time;
  const Eigen::VectorXi s = status;
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  const detail::NodeFrame frame = detail::make_frame(t.data(), s.data(), rows, rule, &censor_surv);
  std::vector<char> left(static_cast<std::size_t>(n));
  Index n_left = 0;
  for (Index k = 0; k < n; ++k) {
    left[static_cast<std::size_t>(k)] = x(frame.row[static_cast<std::size_t>(k)]) <= cut ? 1 : 0;
    n_left += left[static_cast<std::size_t>(k)];
  }
  if (n_left == 0 || n_left == n) return std::nullopt;
  return detail::score_partition(rule, frame, left);
}

namespace {

double log_tail_approximation(double b, double width) {
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;
  const double factor = (b - 1.0 / b) * width + 4.0 / b;
  if (!(factor > 0.0)) return -std::numeric_limits<double>::infinity();
  return -0.5 * b * b - kLogSqrt2Pi + std::log(factor);
}

}  // namespace

// The approximation rises before it falls; its upper envelope over [b, inf)
// keeps the p-value nonincreasing in b.
double maxstat_log_pvalue(double b, double eps) {
  if (!(b > 0.0)) return 0.0;
  const double width = std::log((1.0 - eps) * (1.0 - eps) / (eps * eps));
  double best = log_tail_approximation(b, width);
  constexpr double kPeakBound = 4.0;
  if (b < kPeakBound) {
    double lo = b, hi = kPeakBound;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    while (hi - lo > 1e-9) {
      const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
      if (log_tail_approximation(m1, width) < log_tail_approximation(m2, width)) {
        lo = m1;
      } else if (std::isinf(log_tail_approximation(m1, width))) {
        lo = m1;
      } else {
        hi = m2;
      }
    }
    best = std::max(best, log_tail_approximation(0.5 * (lo + hi), width));
  }
  return std::min(0.0, best);
}

}  // namespace survbench

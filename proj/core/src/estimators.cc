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

#include "survbench/estimators.h"

#include <algorithm>
#include <numeric>

#include "survbench/error.h"

namespace survbench {
namespace {

struct TimeCounts {
  std::vector<double> times;    // distinct times, ascending
  std::vector<double> at_risk;  // number at risk just before each time
  std::vector<double> events;
};

TimeCounts tabulate(const Eigen::Ref<const Eigen::VectorXd>& time,
                    const Eigen::Ref<const Eigen::VectorXi>& status, bool count_censored) {
  if (time.size() != status.size()) throw InvalidInput("time and status lengths differ");
  const Eigen::Index n = time.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return time(a) < time(b); });
  TimeCounts tc;
  double remaining = static_cast<double>(n);
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = time(order[i]);
    double d = 0.0, total = 0.0;
    while (i < order.size() && time(order[i]) == t) {
      const bool is_event = count_censored ? status(order[i]) == 0 : status(order[i]) == 1;
      if (is_event) d += 1.0;
      total += 1.0;
      ++i;
    }
    if (d > 0.0) {
      tc.times.push_back(t);
      tc.at_risk.push_back(remaining);
      tc.events.push_back(d);
    }
    remaining -= total;
  }
  return tc;
}

StepFunction product_limit(const TimeCounts& tc) {
  std::vector<double> values;
  values.reserve(tc.times.size());
  double s = 1.0;
  for (std::size_t k = 0; k < tc.times.size(); ++k) {
    s *= 1.0 - tc.events[k] / tc.at_risk[k];
    values.push_back(s);
  }
  return StepFunction(tc.times, std::move(values), 1.0);
}

}  // namespace

StepFunction::StepFunction(std::vector<double> knots, std::vector<double> values,
                           double left_value)
    : knots_(std::move(knots)), values_(std::move(values)), left_value_(left_value) {
  if (knots_.size() != values_.size()) throw InvalidInput("step function: knots/values size mismatch");
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k - 1] < knots_[k])) throw InvalidInput("step function knots must increase strictly");
  }
}

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return left_value_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return left_value_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

bool StepFunction::is_nonincreasing() const {
  double prev = left_value_;
  for (double v : values_) {
    if (v > prev) return false;
    prev = v;
  }
  return true;
}

bool StepFunction::is_nondecreasing() const {
  double prev = left_value_;
  for (double v : values_) {
    if (v < prev) return false;
    prev = v;
  }
  return true;
}

StepFunction km_estimator(const Eigen::Ref<const Eigen::VectorXd>& time,
                          const Eigen::Ref<const Eigen::VectorXi>& status) {
  if (time.size() < 1) throw InvalidInput("Kaplan-Meier needs at least one subject");
  return product_limit(tabulate(time, status, false));
}

StepFunction censoring_km(const Eigen::Ref<const Eigen::VectorXd>& time,
                          const Eigen::Ref<const Eigen::VectorXi>& status) {
  if (time.size() < 1) throw InvalidInput("Kaplan-Meier needs at least one subject");
  return product_limit(tabulate(time, status, true));
}

StepFunction nelson_aalen(const Eigen::Ref<const Eigen::VectorXd>& time,
                          const Eigen::Ref<const Eigen::VectorXi>& status) {
  const TimeCounts tc = tabulate(time, status, false);
  std::vector<double> values;
  values.reserve(tc.times.size());
  double h = 0.0;
  for (std::size_t k = 0; k < tc.times.size(); ++k) {
    h += tc.events[k] / tc.at_risk[k];
    values.push_back(h);
  }
  return StepFunction(tc.times, std::move(values), 0.0);
}

}  // namespace survbench

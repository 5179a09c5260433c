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
#include <vector>

namespace survbench {

// Right-continuous piecewise-constant function of time. Takes `left_value`
// before the first knot and values[k] on [knots[k], knots[k+1]).
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> knots, std::vector<double> values, double left_value);

  double operator()(double t) const;
  // Limit from the left: value on the last interval that ends strictly before t.
  double left_limit(double t) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double left_value() const { return left_value_; }
  std::size_t size() const { return knots_.size(); }

  bool is_nonincreasing() const;
  bool is_nondecreasing() const;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double left_value_ = 0.0;
};

// Product-limit survival estimate with jumps at the distinct event times.
StepFunction km_estimator(const Eigen::Ref<const Eigen::VectorXd>& time,
                          const Eigen::Ref<const Eigen::VectorXi>& status);

// Kaplan-Meier of the censoring distribution (status coding swapped).
StepFunction censoring_km(const Eigen::Ref<const Eigen::VectorXd>& time,
                          const Eigen::Ref<const Eigen::VectorXi>& status);

// Nelson-Aalen cumulative hazard with jumps at the distinct event times.
StepFunction nelson_aalen(const Eigen::Ref<const Eigen::VectorXd>& time,
                          const Eigen::Ref<const Eigen::VectorXi>& status);

}  // namespace survbench

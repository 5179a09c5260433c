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
#include <cmath>
#include <string>
#include <vector>

#include "survbench/dataio.h"
#include "survbench/rng.h"

namespace survbench::testing {

inline SurvivalDataset make_dataset(const std::vector<double>& time, const std::vector<int>& status,
                                    const std::vector<std::vector<double>>& columns = {}) {
  SurvivalDataset ds;
  const Index n = static_cast<Index>(time.size());
  ds.time = Eigen::Map<const Eigen::VectorXd>(time.data(), n);
  ds.status = Eigen::Map<const Eigen::VectorXi>(status.data(), n);
  ds.x.resize(n, static_cast<Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    ds.x.col(static_cast<Index>(j)) = Eigen::Map<const Eigen::VectorXd>(columns[j].data(), n);
    ds.columns.push_back({"x" + std::to_string(j), ColumnKind::kContinuous, {}});
  }
  ds.missing = BoolMatrix::Constant(n, ds.x.cols(), false);
  return ds;
}

// Exponential times with log hazard x * beta, uniform covariates and
// independent exponential censoring.
inline SurvivalDataset exponential_data(Index n, const std::vector<double>& beta, double censor_rate,
                                        std::uint64_t seed) {
  Engine rng = make_stream(seed, 0, "test-data");
  const Index d = static_cast<Index>(beta.size());
  SurvivalDataset ds;
  ds.x.resize(n, d);
  ds.time.resize(n);
  ds.status.resize(n);
  for (Index i = 0; i < n; ++i) {
    double lp = 0.0;
    for (Index j = 0; j < d; ++j) {
      ds.x(i, j) = uniform_open(rng) * 2.0 - 1.0;
      lp += beta[static_cast<std::size_t>(j)] * ds.x(i, j);
    }
    const double t = -std::log(uniform_open(rng)) / std::exp(lp);
    const double c = censor_rate > 0.0 ? -std::log(uniform_open(rng)) / censor_rate : INFINITY;
    ds.time(i) = std::min(t, c);
    ds.status(i) = t <= c ? 1 : 0;
  }
  for (Index j = 0; j < d; ++j) ds.columns.push_back({"x" + std::to_string(j), ColumnKind::kContinuous, {}});
  ds.missing = BoolMatrix::Constant(n, d, false);
  return ds;
}

}  // namespace survbench::testing

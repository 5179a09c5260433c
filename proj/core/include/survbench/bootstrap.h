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

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "survbench/dataio.h"
#include "survbench/model.h"

namespace survbench {

struct Dot632Plus {
  double R = 0.0;  // relative overfitting rate, clipped to [0, 1]
  double w = 0.632;
  double theta = 0.0;
};

// R = (oob_mean - apparent) / (noinfo - apparent), 0 when the denominator
// vanishes; w = 0.632 / (1 - 0.368 R); theta = (1 - w) apparent + w oob_mean.
Dot632Plus dot632plus(double apparent, double oob_mean, double noinfo);

// 0.5 for the C index, 0.75 for the integrated Brier score.
double noinfo_value(Metric metric);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// [theta - xi(1 - alpha/2), theta - xi(alpha/2)] with xi the type-7
// quantiles of the finite weights. Always contains theta when the weights
// straddle zero, and is symmetric about theta for symmetric weights.
Interval bootstrap_ci(double theta, std::span<const double> weights, double alpha);

// [theta - xi(1 - alpha/2), theta + xi(alpha/2)], evaluated literally. May be
// inverted; see BootstrapResult::verbatim_inverted.
Interval bootstrap_ci_verbatim(double theta, std::span<const double> weights, double alpha);

struct BootstrapOptions {
  int B = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  int n_threads = 1;
  double max_drop_fraction = 0.2;
  double ibs_horizon = 0.0;  // 0 selects the 95th percentile of ds.time
};

struct BootstrapResult {
  Metric metric = Metric::kCIndex;
  double theta = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ci_low_verbatim = 0.0;
  double ci_high_verbatim = 0.0;
  bool verbatim_inverted = false;
  double apparent = 0.0;
  double oob_mean = 0.0;
  double R = 0.0;
  double w = 0.632;
  double noinfo = 0.5;
  double alpha = 0.05;
  int B = 0;
  int dropped = 0;
  std::map<std::string, int> drop_reasons;
  std::vector<double> weights;     // length B; NaN for dropped replicates
  std::vector<double> oob_values;  // length B; NaN for dropped replicates
  double ibs_horizon = 0.0;
};

// .632+ bootstrap of each metric in `metrics` with one model fit per
// replicate. Replicate b uses the stream (seed, b); forest seeds are derived
// from it, so results do not depend on n_threads. A replicate whose fit or
// evaluation fails on degenerate data is dropped for that metric. Throws
// DegenerateInput when more than max_drop_fraction of replicates drop.
std::vector<BootstrapResult> run_bootstrap(const SurvivalDataset& ds, const ModelSpec& spec,
                                           const std::vector<Metric>& metrics,
                                           const BootstrapOptions& options);

BootstrapResult run_bootstrap(const SurvivalDataset& ds, const ModelSpec& spec, Metric metric,
                              const BootstrapOptions& options);

}  // namespace survbench

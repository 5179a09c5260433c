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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "survbench/bootstrap.h"
#include "survbench/error.h"
#include "test_data.h"

namespace survbench {
namespace {

using testing::exponential_data;

TEST(Dot632Plus, HandEvaluation) {
  const Dot632Plus r = dot632plus(0.8, 0.7, 0.5);
  EXPECT_NEAR(r.R, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.w, 0.632 / (1.0 - 0.368 / 3.0), 1e-12);
  EXPECT_NEAR(r.w, 0.7204, 1e-4);
  EXPECT_NEAR(r.theta, 0.7280, 1e-4);
}

TEST(Dot632Plus, Limits) {
  const Dot632Plus none = dot632plus(0.8, 0.8, 0.5);
  EXPECT_EQ(none.R, 0.0);
  EXPECT_DOUBLE_EQ(none.w, 0.632);
  EXPECT_DOUBLE_EQ(none.theta, 0.8);
  const Dot632Plus full = dot632plus(0.8, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(full.R, 1.0);
  EXPECT_DOUBLE_EQ(full.w, 1.0);
  EXPECT_DOUBLE_EQ(full.theta, 0.5);
  const Dot632Plus better = dot632plus(0.8, 0.85, 0.5);
  EXPECT_EQ(better.R, 0.0);
  const Dot632Plus ibs = dot632plus(0.10, 0.15, 0.75);
  EXPECT_NEAR(ibs.R, 0.05 / 0.65, 1e-12);
  EXPECT_THROW(dot632plus(NAN, 0.7, 0.5), InvalidInput);
}

TEST(Dot632Plus, ThetaNonincreasingInOptimism) {
  double prev = 1.0;
  for (double oob = 0.79; oob > 0.5; oob -= 0.01) {
    const Dot632Plus r = dot632plus(0.8, oob, 0.5);
    EXPECT_LE(r.theta, prev);
    EXPECT_GE(r.theta, oob - 1e-15);
    EXPECT_LE(r.theta, 0.8);
    prev = r.theta;
  }
}

TEST(Interval, QuartileFixture) {
  const std::vector<double> w{-0.1, 0.0, 0.1, 0.2};
  // Type-7: xi(0.25) = -0.025, xi(0.75) = 0.125.
  const Interval wahl = bootstrap_ci(1.0, w, 0.5);
  EXPECT_NEAR(wahl.low, 1.0 - 0.125, 1e-15);
  EXPECT_NEAR(wahl.high, 1.0 + 0.025, 1e-15);
  const Interval verbatim = bootstrap_ci_verbatim(1.0, w, 0.5);
  EXPECT_NEAR(verbatim.low, 1.0 - 0.125, 1e-15);
  EXPECT_NEAR(verbatim.high, 1.0 - 0.025, 1e-15);
}

TEST(Interval, DegenerateAndSymmetric) {
  const std::vector<double> zero(10, 0.0);
  const Interval z = bootstrap_ci(0.7, zero, 0.05);
  EXPECT_EQ(z.low, 0.7);
  EXPECT_EQ(z.high, 0.7);
  const std::vector<double> sym{-0.3, -0.1, 0.0, 0.1, 0.3};
  const Interval s = bootstrap_ci(0.7, sym, 0.1);
  EXPECT_NEAR(0.7 - s.low, s.high - 0.7, 1e-15);
  EXPECT_THROW(bootstrap_ci(0.7, std::vector<double>{}, 0.05), InvalidInput);
  const std::vector<double> with_nan{NAN, -0.1, 0.1};
  const Interval skip = bootstrap_ci(0.0, with_nan, 0.5);
  EXPECT_NEAR(skip.low, -0.05, 1e-15);
}

TEST(NoInfo, Values) {
  EXPECT_EQ(noinfo_value(Metric::kCIndex), 0.5);
  EXPECT_EQ(noinfo_value(Metric::kIbs), 0.75);
}

TEST(RunBootstrap, TwoReplicateSmoke) {
  const auto ds = exponential_data(120, {1.0, 0.3}, 0.3, 1);
  BootstrapOptions opt;
  opt.B = 2;
  const auto res = run_bootstrap(ds, ModelSpec::make_cox(), {Metric::kCIndex, Metric::kIbs}, opt);
  ASSERT_EQ(res.size(), 2u);
  for (const auto& r : res) {
    EXPECT_EQ(r.B, 2);
    EXPECT_EQ(r.weights.size(), 2u);
    EXPECT_TRUE(std::isfinite(r.ci_low) && std::isfinite(r.ci_high));
    EXPECT_LE(r.ci_low, r.ci_high);
  }
  EXPECT_GT(res[0].theta, 0.6);
  EXPECT_GT(res[1].ibs_horizon, 0.0);
}

TEST(RunBootstrap, DeterministicAcrossThreads) {
  const auto ds = exponential_data(100, {1.0}, 0.3, 2);
  ForestParams fp;
  fp.n_trees = 20;
  const ModelSpec spec = ModelSpec::make_forest({fp, {}, false, {}});
  BootstrapOptions opt;
  opt.B = 6;
  opt.seed = 99;
  const BootstrapResult a = run_bootstrap(ds, spec, Metric::kCIndex, opt);
  opt.n_threads = 3;
  const BootstrapResult b = run_bootstrap(ds, spec, Metric::kCIndex, opt);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.oob_values, b.oob_values);
}

TEST(RunBootstrap, ConstantRiskIsChance) {
  const auto base = exponential_data(80, {1.0}, 0.3, 3);
  const auto ds = testing::make_dataset(std::vector<double>(base.time.data(), base.time.data() + 80),
                                        std::vector<int>(base.status.data(), base.status.data() + 80),
                                        {std::vector<double>(80, 1.0)});
  BootstrapOptions opt;
  opt.B = 10;
  const BootstrapResult r = run_bootstrap(ds, ModelSpec::make_cox(), Metric::kCIndex, opt);
  EXPECT_DOUBLE_EQ(r.apparent, 0.5);
  EXPECT_DOUBLE_EQ(r.theta, 0.5);
}

TEST(RunBootstrap, NullDataConcentratesAtHalf) {
  for (int rep = 0; rep < 10; ++rep) {
    const auto ds = exponential_data(300, {0.0}, 0.3, 700 + rep);
    BootstrapOptions opt;
    opt.B = 200;
    opt.seed = static_cast<std::uint64_t>(rep);
    const BootstrapResult r = run_bootstrap(ds, ModelSpec::make_cox(), Metric::kCIndex, opt);
    EXPECT_LT(std::abs(r.theta - 0.5), 0.05) << rep;
  }
}

TEST(RunBootstrap, TooManyDropsThrows) {
  // Perfect separation makes every Cox fit diverge.
  std::vector<double> t, x;
  std::vector<int> s;
  for (int i = 0; i < 40; ++i) {
    t.push_back(i + 1.0);
    x.push_back(i < 20 ? 1.0 : 0.0);
    s.push_back(1);
  }
  const auto ds = testing::make_dataset(t, s, {x});
  BootstrapOptions opt;
  opt.B = 10;
  EXPECT_THROW(run_bootstrap(ds, ModelSpec::make_cox(), Metric::kCIndex, opt), Error);
}

}  // namespace
}  // namespace survbench

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
#include <limits>
#include <vector>

#include "survbench/csv.h"
#include "survbench/error.h"
#include "survbench/rng.h"
#include "survbench/stats.h"

namespace survbench {
namespace {

TEST(Quantile, Type7MatchesHandValues) {
  const std::vector<double> v{5, 1, 4, 2, 3};
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.75), 4.0);
  // h = (n - 1) p = 0.3 on {1, 2, 3, 4, 5}
  EXPECT_DOUBLE_EQ(quantile(v, 0.075), 1.3);
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 5.0);
}

TEST(Quantile, EvenCountMedian) {
  const std::vector<double> v{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(median(v), 2.5);
}

TEST(Ranks, TiesGetAverageRank) {
  const std::vector<double> v{10, 20, 10, 30};
  const auto r = average_ranks(v);
  EXPECT_DOUBLE_EQ(r[0], 1.5);
  EXPECT_DOUBLE_EQ(r[1], 3.0);
  EXPECT_DOUBLE_EQ(r[2], 1.5);
  EXPECT_DOUBLE_EQ(r[3], 4.0);
}

TEST(Moments, MeanAndSd) {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(mean(v), 5.0);
  EXPECT_NEAR(sample_sd(v), std::sqrt(32.0 / 7.0), 1e-14);
}

TEST(Normal, QuantileInvertsCdf) {
  for (double p : {1e-10, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 1 - 1e-9}) {
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-12 + 1e-9 * p);
  }
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
}

TEST(ChiSquared, UpperTail) {
  EXPECT_NEAR(chi_squared_upper_tail(3.841458820694124, 1), 0.05, 1e-12);
  EXPECT_NEAR(chi_squared_upper_tail(2.0, 2), std::exp(-1.0), 1e-12);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Engine a = make_stream(42, 3, "tree");
  Engine b = make_stream(42, 3, "tree");
  Engine c = make_stream(42, 4, "tree");
  Engine d = make_stream(42, 3, "bootstrap");
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
}

TEST(Rng, UniformOpenExcludesEndpoints) {
  Engine rng = make_stream(1, 0, "u");
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform_open(rng);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Csv, SplitHandlesQuotes) {
  const auto f = split_csv_line(R"(a,"b,c","d""e",)");
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[0], "a");
  EXPECT_EQ(f[1], "b,c");
  EXPECT_EQ(f[2], "d\"e");
  EXPECT_EQ(f[3], "");
  EXPECT_EQ(csv_escape("x,y"), "\"x,y\"");
  EXPECT_EQ(csv_escape("plain"), "plain");
}

TEST(Csv, DoubleRoundTrip) {
  Engine rng = make_stream(9, 0, "csv");
  for (int i = 0; i < 1000; ++i) {
    const double v = (uniform_open(rng) - 0.5) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    const auto back = parse_double(format_double(v));
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, v);
  }
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "NA");
  EXPECT_FALSE(parse_double("1.5x").has_value());
}

}  // namespace
}  // namespace survbench

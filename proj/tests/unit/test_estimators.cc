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

#include "survbench/estimators.h"
#include "test_data.h"

namespace survbench {
namespace {

using testing::make_dataset;

TEST(KaplanMeier, HandFixtureWithTiesAndCensoring) {
  const auto ds = make_dataset({1, 2, 2, 3, 4}, {1, 1, 0, 1, 0});
  const StepFunction km = km_estimator(ds.time, ds.status);
  EXPECT_DOUBLE_EQ(km(0.5), 1.0);
  EXPECT_DOUBLE_EQ(km(1.0), 0.8);
  EXPECT_DOUBLE_EQ(km(2.0), 0.6);
  EXPECT_DOUBLE_EQ(km(2.5), 0.6);
  EXPECT_DOUBLE_EQ(km(3.0), 0.3);
  EXPECT_DOUBLE_EQ(km(10.0), 0.3);
  EXPECT_DOUBLE_EQ(km.left_limit(3.0), 0.6);
  EXPECT_TRUE(km.is_nonincreasing());
}

TEST(NelsonAalen, HandFixture) {
  const auto ds = make_dataset({1, 2, 2, 3, 4}, {1, 1, 0, 1, 0});
  const StepFunction na = nelson_aalen(ds.time, ds.status);
  EXPECT_DOUBLE_EQ(na(0.9), 0.0);
  EXPECT_DOUBLE_EQ(na(1.0), 0.2);
  EXPECT_DOUBLE_EQ(na(2.0), 0.45);
  EXPECT_DOUBLE_EQ(na(3.5), 0.95);
  EXPECT_TRUE(na.is_nondecreasing());
}

TEST(CensoringKm, SwapsStatus) {
  const auto ds = make_dataset({1, 2, 3, 4}, {1, 0, 1, 0});
  const StepFunction g = censoring_km(ds.time, ds.status);
  EXPECT_DOUBLE_EQ(g(1.5), 1.0);
  EXPECT_DOUBLE_EQ(g(2.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(g(4.0), 0.0);
  EXPECT_DOUBLE_EQ(g.left_limit(4.0), 2.0 / 3.0);
}

TEST(KaplanMeier, NoEventsStaysAtOne) {
  const auto ds = make_dataset({1, 2, 3}, {0, 0, 0});
  const StepFunction km = km_estimator(ds.time, ds.status);
  EXPECT_DOUBLE_EQ(km(5.0), 1.0);
}

}  // namespace
}  // namespace survbench

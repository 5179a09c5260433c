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
#include <sstream>
#include <vector>

#include "survbench/error.h"
#include "survbench/estimators.h"
#include "survbench/metrics.h"
#include "survbench/rsf.h"
#include "test_data.h"

namespace survbench {
namespace {

using testing::exponential_data;
using testing::make_dataset;

const StepFunction kNoCensoring({}, {}, 1.0);

double score(SplitRule rule, const SurvivalDataset& ds, double cut) {
  const StepFunction g = censoring_km(ds.time, ds.status);
  return split_score(rule, ds.time, ds.status, ds.x.col(0), cut, g).value_or(-1.0);
}

TEST(SplitScore, LogRankHandFixture) {
  // Left {1, 2}: O - E = 2 - (1/2 + 1/3) = 7/6, V = 1/4 + 2/9 = 17/36.
  const auto ds = make_dataset({1, 2, 3, 4}, {1, 1, 1, 1}, {{1, 2, 3, 4}});
  EXPECT_NEAR(score(SplitRule::kLogRankTest, ds, 2.5), 7.0 / std::sqrt(17.0), 1e-12);
}

TEST(SplitScore, IdenticalChildrenScoreZero) {
  const auto ds = make_dataset({1, 2, 3, 1, 2, 3}, {1, 0, 1, 1, 0, 1}, {{0, 0, 0, 1, 1, 1}});
  EXPECT_NEAR(score(SplitRule::kLogRankTest, ds, 0.5), 0.0, 1e-12);
  EXPECT_NEAR(score(SplitRule::kLogRankScore, ds, 0.5), 0.0, 1e-12);
  EXPECT_NEAR(score(SplitRule::kHarrellC, ds, 0.5), 0.0, 1e-12);
}

TEST(SplitScore, EmptyChildIsInadmissible) {
  const auto ds = make_dataset({1, 2, 3}, {1, 1, 1}, {{1, 2, 3}});
  EXPECT_FALSE(split_score(SplitRule::kLogRankTest, ds.time, ds.status, ds.x.col(0), 5.0, kNoCensoring));
  const auto none = make_dataset({1, 2, 3}, {0, 0, 0}, {{1, 2, 3}});
  EXPECT_FALSE(split_score(SplitRule::kLogRankTest, none.time, none.status, none.x.col(0), 1.5, kNoCensoring));
}

TEST(SplitScore, HarrellCMatchesConcordanceOfMembership) {
  const auto ds = exponential_data(40, {1.2}, 0.4, 31);
  for (double cut : {-0.5, 0.0, 0.3}) {
    Eigen::VectorXd left(ds.rows());
    for (Index i = 0; i < ds.rows(); ++i) left(i) = ds.x(i, 0) <= cut ? 1.0 : 0.0;
    const double c = harrell_c(left, ds.time, ds.status);
    EXPECT_NEAR(score(SplitRule::kHarrellC, ds, cut), std::abs(c - 0.5), 1e-12) << cut;
  }
}

TEST(SplitScore, LogRankDependsOnlyOnPartition) {
  auto ds = exponential_data(50, {1.0}, 0.3, 8);
  const double a = score(SplitRule::kLogRankTest, ds, 0.1);
  const double ls = score(SplitRule::kLogRankScore, ds, 0.1);
  ds.x.col(0) = ds.x.col(0).array().exp();
  EXPECT_NEAR(score(SplitRule::kLogRankTest, ds, std::exp(0.1)), a, 1e-12);
  EXPECT_NEAR(score(SplitRule::kLogRankScore, ds, std::exp(0.1)), ls, 1e-12);
}

TEST(SplitScore, AllRulesFiniteOnSignal) {
  const auto ds = exponential_data(80, {1.5}, 0.3, 2);
  for (SplitRule rule : all_split_rules()) {
    const double s = score(rule, ds, 0.0);
    EXPECT_TRUE(std::isfinite(s)) << to_string(rule);
    EXPECT_GT(s, 0.0) << to_string(rule);
  }
}

TEST(MaxStat, LogPValueDecreasesAndIsCapped) {
  double prev = 0.0;
  for (double b = 0.5; b < 6.0; b += 0.25) {
    const double lp = maxstat_log_pvalue(b);
    EXPECT_LE(lp, 0.0);
    EXPECT_LE(lp, prev + 1e-15);
    prev = lp;
  }
  EXPECT_LT(maxstat_log_pvalue(4.0), std::log(0.01));
}

TEST(SplitRule, NamesRoundTrip) {
  for (SplitRule rule : all_split_rules()) EXPECT_EQ(parse_split_rule(to_string(rule)), rule);
  EXPECT_THROW(parse_split_rule("gini"), InvalidInput);
}

TEST(Forest, SingleLeafIsNelsonAalenOfBootstrap) {
  const auto ds = exponential_data(200, {0.8}, 0.3, 4);
  ForestParams p;
  p.n_trees = 1;
  p.min_leaf_size = 200;
  p.seed = 77;
  const SurvivalForest f = grow_forest(ds, p);
  ASSERT_EQ(f.trees[0].nodes.size(), 1u);

  Engine rng = make_stream(77, 0, "tree");
  Eigen::VectorXd bt(200);
  Eigen::VectorXi bs(200);
  for (Index k = 0; k < 200; ++k) {
    const auto r = std::min<Index>(static_cast<Index>(uniform_open(rng) * 200.0), 199);
    bt(k) = ds.time(r);
    bs(k) = ds.status(r);
  }
  const StepFunction na = nelson_aalen(bt, bs);
  const Eigen::VectorXd chf = predict_chf(f, ds.x.row(0).transpose());
  for (Index g = 0; g < f.grid_size(); ++g) EXPECT_NEAR(chf(g), na(f.grid[g]), 1e-12);

  const StepFunction km = km_estimator(bt, bs);
  for (Index g = 0; g < f.grid_size(); ++g) EXPECT_LE(std::abs(std::exp(-chf(g)) - km(f.grid[g])), 0.02);
}

TEST(Forest, SameSeedSameForestAnyThreadCount) {
  const auto ds = exponential_data(150, {1.0, 0.0, -0.5}, 0.3, 6);
  ForestParams p;
  p.n_trees = 30;
  p.seed = 5;
  const SurvivalForest a = grow_forest(ds, p);
  p.n_threads = 4;
  const SurvivalForest b = grow_forest(ds, p);
  ASSERT_EQ(a.trees.size(), b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    ASSERT_EQ(a.trees[t].nodes.size(), b.trees[t].nodes.size());
    for (std::size_t k = 0; k < a.trees[t].nodes.size(); ++k) {
      EXPECT_EQ(a.trees[t].nodes[k].var, b.trees[t].nodes[k].var);
      EXPECT_EQ(a.trees[t].nodes[k].cut, b.trees[t].nodes[k].cut);
    }
  }
  EXPECT_EQ(predict_chf_rows(a, ds.x), predict_chf_rows(b, ds.x));
}

TEST(Forest, PredictionsAreNondecreasingAndLeavesRespectSize) {
  const auto ds = exponential_data(200, {1.0, 0.5}, 0.3, 12);
  for (SplitRule rule : all_split_rules()) {
    ForestParams p;
    p.n_trees = 10;
    p.rule = rule;
    p.min_leaf_size = 10;
    const SurvivalForest f = grow_forest(ds, p);
    const Eigen::MatrixXd chf = predict_chf_rows(f, ds.x);
    for (Index i = 0; i < chf.rows(); ++i) {
      EXPECT_GE(chf(i, 0), 0.0);
      for (Index g = 1; g < chf.cols(); ++g) ASSERT_GE(chf(i, g), chf(i, g - 1));
    }
    for (const auto& tree : f.trees) {
      for (const auto& leaf : tree.leaves) EXPECT_GE(leaf.size, 10) << to_string(rule);
    }
  }
}

TEST(Forest, OobFractionNearInverseE) {
  const auto ds = exponential_data(300, {0.5}, 0.3, 3);
  ForestParams p;
  p.n_trees = 50;
  const SurvivalForest f = grow_forest(ds, p);
  double oob = 0.0;
  for (Index i = 0; i < ds.rows(); ++i) oob += f.oob_count(i);
  oob /= static_cast<double>(ds.rows() * p.n_trees);
  EXPECT_GT(oob, 0.33);
  EXPECT_LT(oob, 0.41);
}

TEST(Forest, OobChfSingleTreeAndInBagError) {
  const auto ds = exponential_data(100, {1.0}, 0.3, 13);
  ForestParams p;
  p.n_trees = 1;
  const SurvivalForest f = grow_forest(ds, p);
  const SurvivalTree& tree = f.trees[0];
  bool saw_in = false, saw_out = false;
  for (Index i = 0; i < ds.rows(); ++i) {
    if (tree.in_bag[static_cast<std::size_t>(i)]) {
      EXPECT_THROW(oob_chf(f, i), DegenerateInput);
      saw_in = true;
    } else {
      EXPECT_EQ(oob_chf(f, i), predict_chf(f, ds.x.row(i).transpose()));
      saw_out = true;
    }
  }
  EXPECT_TRUE(saw_in && saw_out);
}

TEST(Forest, OobDiffersFromFullPrediction) {
  const auto ds = exponential_data(200, {1.5}, 0.3, 14);
  ForestParams p;
  p.n_trees = 50;
  const SurvivalForest f = grow_forest(ds, p);
  double diff = 0.0;
  for (Index i = 0; i < ds.rows(); ++i) {
    diff += std::abs(ensemble_mortality(f, i) - predict_chf(f, ds.x.row(i).transpose()).sum());
  }
  EXPECT_GT(diff, 0.0);
  const OobMortality m = oob_mortality(f, ds);
  EXPECT_EQ(m.n_fallback, 0);
  EXPECT_GT(harrell_c(m.mortality, ds.time, ds.status), 0.6);
}

TEST(Forest, RecoversSignal) {
  double c = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const auto ds = exponential_data(300, {1.5, 0.0, 0.0}, 0.3, 400 + rep);
    ForestParams p;
    p.n_trees = 100;
    p.seed = static_cast<std::uint64_t>(rep);
    const SurvivalForest f = grow_forest(ds, p);
    c += harrell_c(oob_mortality(f, ds).mortality, ds.time, ds.status);
  }
  EXPECT_GT(c / 5.0, 0.65);
}

TEST(Forest, InvalidParamsRejected) {
  const auto ds = exponential_data(50, {1.0}, 0.3, 1);
  ForestParams p;
  p.mtry = 3;
  EXPECT_THROW(grow_forest(ds, p), InvalidInput);
  p.mtry = 1;
  p.n_trees = 0;
  EXPECT_THROW(grow_forest(ds, p), InvalidInput);
}

TEST(Tune, SingletonAndDuplicateGrid) {
  const auto ds = exponential_data(120, {1.0, 0.0}, 0.3, 9);
  ForestParams p;
  p.n_trees = 20;
  p.min_leaf_size = 5;
  const TuneResult one = tune_grid(ds, {p}, 3);
  EXPECT_EQ(one.best_index, 0u);
  EXPECT_EQ(one.best.min_leaf_size, 5);
  const TuneResult dup = tune_grid(ds, {p, p, p}, 3);
  EXPECT_EQ(dup.best_index, 0u);
  ASSERT_EQ(dup.table.size(), 3u);
  EXPECT_EQ(*dup.table[0].oob_c, *dup.table[2].oob_c);
}

TEST(Tune, DefaultGrid) {
  ForestParams base;
  const auto g = default_tuning_grid(9, base);
  EXPECT_EQ(g.size(), 6u);  // mtry {3, 9}
  const auto g2 = default_tuning_grid(16, base);
  EXPECT_EQ(g2.size(), 9u);
  const auto g1 = default_tuning_grid(1, base);
  EXPECT_EQ(g1.size(), 3u);
}

TEST(Serialization, RoundTripPreservesPredictions) {
  const auto ds = exponential_data(150, {1.0, -0.5}, 0.3, 15);
  ForestParams p;
  p.n_trees = 15;
  p.rule = SplitRule::kMaxStat;
  const SurvivalForest f = grow_forest(ds, p);
  std::stringstream buf;
  write_forest(buf, f);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 4), "RSF1");
  std::istringstream in(bytes);
  const SurvivalForest back = read_forest(in);
  EXPECT_EQ(back.params.rule, SplitRule::kMaxStat);
  EXPECT_EQ(back.names, f.names);
  EXPECT_EQ(back.grid, f.grid);
  EXPECT_EQ(predict_chf_rows(back, ds.x), predict_chf_rows(f, ds.x));
  for (Index i = 0; i < ds.rows(); ++i) EXPECT_EQ(back.oob_count(i), f.oob_count(i));

  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream bad_in(bad);
  EXPECT_THROW(read_forest(bad_in), InvalidInput);
  std::istringstream short_in(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(read_forest(short_in), InvalidInput);
}

}  // namespace
}  // namespace survbench

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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "survbench/dataio.h"
#include "survbench/estimators.h"

namespace survbench {

enum class SplitRule { kLogRankTest, kLogRankScore, kBrierGradient, kHarrellC, kExtraTrees, kMaxStat };

// Short names: logrank, logrankscore, brier, harrellc, extratrees, maxstat.
std::string_view to_string(SplitRule rule);
SplitRule parse_split_rule(std::string_view text);
const std::vector<SplitRule>& all_split_rules();

struct ForestParams {
  int n_trees = 500;
  int mtry = 0;  // 0 selects floor(sqrt(d)), at least 1
  int min_node_events = 1;
  int min_leaf_size = 15;
  SplitRule rule = SplitRule::kLogRankTest;
  bool maxstat_correction = true;
  int max_cuts = 64;  // candidate cap per variable for nodes above 256 rows
  int n_threads = 1;  // 0 uses all hardware threads
  std::uint64_t seed = 1;

  int resolved_mtry(Index d) const;
  void validate(Index d) const;
};

// Score of the partition {x <= cut} versus {x > cut} of one node. Larger is
// better. Returns nullopt when the cut is inadmissible: an empty child, no
// event in the node, or a zero-variance statistic. ExtraTrees and MaxStat
// evaluate a single cut with the log-rank statistic; their randomization and
// multiplicity correction act on the choice of cuts. `censor_surv` is the
// censoring survival curve used by the Brier rule.
std::optional<double> split_score(SplitRule rule, const Eigen::Ref<const Eigen::VectorXd>& time,
                                  const Eigen::Ref<const Eigen::VectorXi>& status,
                                  const Eigen::Ref<const Eigen::VectorXd>& x, double cut,
                                  const StepFunction& censor_surv);

// Lausen-Schumacher approximation of P(M >= b) for a maximally selected
// standardized statistic over the central [eps, 1 - eps] span, returned on the
// log scale and capped at 0.
double maxstat_log_pvalue(double b, double eps = 0.1);

struct TreeNode {
  std::int32_t var = -1;  // -1 marks a leaf
  double cut = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t leaf = -1;
};

// Nelson-Aalen hazard increments at positions of the forest grid.
struct Leaf {
  std::vector<std::uint32_t> grid_index;
  std::vector<double> increment;
  std::int32_t size = 0;  // in-bag rows, counting duplicates
};

struct SurvivalTree {
  std::vector<TreeNode> nodes;
  std::vector<Leaf> leaves;
  std::vector<std::uint8_t> in_bag;        // per training row
  std::vector<std::int32_t> train_leaf;    // leaf reached by each training row

  std::int32_t leaf_for(const double* x) const;
  std::int32_t depth() const;
};

struct SurvivalForest {
  std::vector<SurvivalTree> trees;
  std::vector<double> grid;  // unique training event times
  ForestParams params;
  std::vector<std::string> names;

  Index grid_size() const { return static_cast<Index>(grid.size()); }
  Index n_train() const { return trees.empty() ? 0 : static_cast<Index>(trees.front().in_bag.size()); }
  Index n_features() const { return static_cast<Index>(names.size()); }
  // Number of trees for which training row i is out of bag.
  int oob_count(Index i) const;
};

// Trees are grown on with-replacement bootstraps of size n. Tree b draws from
// the stream (params.seed, b), so the result does not depend on threading.
SurvivalForest grow_forest(const SurvivalDataset& ds, const ForestParams& params);

// Ensemble CHF on the grid, averaged over all trees. The rows variant returns
// one CHF per row of x.
Eigen::VectorXd predict_chf(const SurvivalForest& forest, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::MatrixXd predict_chf_rows(const SurvivalForest& forest, const Eigen::Ref<const Eigen::MatrixXd>& x);

// Value at time t of a CHF given on the forest grid (0 before the first point).
double chf_at(const SurvivalForest& forest, const Eigen::Ref<const Eigen::VectorXd>& chf, double t);
// exp(-H(t)) for every row of a CHF matrix.
Eigen::VectorXd survival_at(const SurvivalForest& forest, const Eigen::Ref<const Eigen::MatrixXd>& chf, double t);

// Mean CHF over the trees where training row i is out of bag. Throws
// DegenerateInput when the row is in bag for every tree.
Eigen::VectorXd oob_chf(const SurvivalForest& forest, Index i);
double ensemble_mortality(const SurvivalForest& forest, Index i);

struct OobMortality {
  Eigen::VectorXd mortality;
  std::vector<bool> fallback;  // row was never out of bag; full-forest value used
  Index n_fallback = 0;
};
OobMortality oob_mortality(const SurvivalForest& forest, const SurvivalDataset& ds);

// Row sums of predict_chf: the ensemble mortality of new subjects.
Eigen::VectorXd predicted_mortality(const SurvivalForest& forest, const Eigen::Ref<const Eigen::MatrixXd>& x);

struct TuneEntry {
  ForestParams params;
  std::optional<double> oob_c;
  std::string error;
};

struct TuneResult {
  ForestParams best;
  std::size_t best_index = 0;
  std::vector<TuneEntry> table;
  SurvivalForest best_forest;
};

// Grows one forest per grid point, all with `seed`, and keeps the highest OOB
// C index. Ties go to the smaller mtry, then the larger min_leaf_size, then the
// earlier grid point.
TuneResult tune_grid(const SurvivalDataset& ds, const std::vector<ForestParams>& grid, std::uint64_t seed);

// mtry in {floor(sqrt(d)), floor(d/3), d} (at least 1, duplicates removed) by
// min_leaf_size in {5, 15, 30}; other fields copied from `base`.
std::vector<ForestParams> default_tuning_grid(Index d, const ForestParams& base);

// Binary container: "RSF1", format version, then the forest, little-endian.
void write_forest(std::ostream& out, const SurvivalForest& forest);
SurvivalForest read_forest(std::istream& in);
void save_forest(const std::filesystem::path& path, const SurvivalForest& forest);
SurvivalForest load_forest(const std::filesystem::path& path);

}  // namespace survbench

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

#include "survbench/rsf.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "rsf_internal.h"
#include "survbench/error.h"
#include "survbench/metrics.h"
#include "survbench/rng.h"
#include "survbench/stats.h"

namespace survbench {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string_view to_string(SplitRule rule) {
  switch (rule) {
    case SplitRule::kLogRankTest: return "logrank";
    case SplitRule::kLogRankScore: return "logrankscore";
    case SplitRule::kBrierGradient: return "brier";
    case SplitRule::kHarrellC: return "harrellc";
    case SplitRule::kExtraTrees: return "extratrees";
    case SplitRule::kMaxStat: return "maxstat";
  }
  return "logrank";
}

const std::vector<SplitRule>& all_split_rules() {
  static const std::vector<SplitRule> kRules{SplitRule::kLogRankTest, SplitRule::kLogRankScore,
                                             SplitRule::kBrierGradient, SplitRule::kHarrellC,
                                             SplitRule::kExtraTrees, SplitRule::kMaxStat};
  return kRules;
}

SplitRule parse_split_rule(std::string_view text) {
  for (SplitRule r : all_split_rules()) {
    if (to_string(r) == text) return r;
  }
  throw InvalidInput("unknown split rule '" + std::string(text) + "'");
}

int ForestParams::resolved_mtry(Index d) const {
  if (mtry > 0) return mtry;
  return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
}

void ForestParams::validate(Index d) const {
  if (d < 1) throw InvalidInput("forest needs at least one covariate");
  if (n_trees < 1) throw InvalidInput("n_trees must be at least 1");
  if (mtry < 0 || mtry > d) throw InvalidInput("mtry must lie in [1, d]");
  if (min_leaf_size < 1) throw InvalidInput("min_leaf_size must be at least 1");
  if (min_node_events < 1) throw InvalidInput("min_node_events must be at least 1");
  if (max_cuts < 1) throw InvalidInput("max_cuts must be at least 1");
  if (n_threads < 0) throw InvalidInput("n_threads must be nonnegative");
}

std::int32_t SurvivalTree::leaf_for(const double* x) const {
  std::int32_t k = 0;
  while (nodes[static_cast<std::size_t>(k)].var >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(k)];
    k = x[node.var] <= node.cut ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(k)].leaf;
}

std::int32_t SurvivalTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::int32_t, std::int32_t>> stack{{0, 0}};
  std::int32_t best = 0;
  while (!stack.empty()) {
    auto [k, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const TreeNode& node = nodes[static_cast<std::size_t>(k)];
    if (node.var >= 0) {
      stack.emplace_back(node.left, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return best;
}

int SurvivalForest::oob_count(Index i) const {
  int c = 0;
  for (const auto& tree : trees) c += tree.in_bag[static_cast<std::size_t>(i)] ? 0 : 1;
  return c;
}

namespace {

Index draw_index(Engine& rng, Index n) {
  const auto k = static_cast<Index>(uniform_open(rng) * static_cast<double>(n));
  return std::min(k, n - 1);
}

std::vector<double> candidate_cuts(std::vector<double> sorted, int max_cuts) {
  std::vector<double> unique = sorted;
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<double> cuts;
  if (unique.size() < 2) return cuts;
  if (sorted.size() <= 256 || unique.size() - 1 <= static_cast<std::size_t>(max_cuts)) {
    for (std::size_t j = 0; j + 1 < unique.size(); ++j) cuts.push_back(0.5 * (unique[j] + unique[j + 1]));
    return cuts;
  }
  for (int k = 1; k <= max_cuts; ++k) {
    const double q = quantile_sorted(sorted, static_cast<double>(k) / (max_cuts + 1));
    const auto it = std::upper_bound(unique.begin(), unique.end(), q);
    if (it == unique.begin() || it == unique.end()) continue;
    const double cut = 0.5 * (*(it - 1) + *it);
    if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
  }
  return cuts;
}

struct GrowContext {
  const MatrixXd& x;
  const double* time;
  const int* status;
  const ForestParams& params;
  const std::vector<double>& grid;
  int mtry;
};

Leaf make_leaf(const GrowContext& ctx, const std::vector<Index>& rows) {
  std::vector<Index> sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [&](Index a, Index b) { return ctx.time[a] < ctx.time[b]; });
  Leaf leaf;
  leaf.size = static_cast<std::int32_t>(rows.size());
  double at_risk = static_cast<double>(sorted.size());
  std::size_t k = 0;
  while (k < sorted.size()) {
    const double t = ctx.time[sorted[k]];
    double d = 0.0;
    std::size_t e = k;
    while (e < sorted.size() && ctx.time[sorted[e]] == t) d += ctx.status[sorted[e++]];
    if (d > 0.0) {
      const auto it = std::lower_bound(ctx.grid.begin(), ctx.grid.end(), t);
      leaf.grid_index.push_back(static_cast<std::uint32_t>(it - ctx.grid.begin()));
      leaf.increment.push_back(d / at_risk);
    }
    at_risk -= static_cast<double>(e - k);
    k = e;
  }
  return leaf;
}

struct SplitChoice {
  double score = 0.0;
  std::int32_t var = -1;
  double cut = 0.0;
};

SplitChoice best_split(const GrowContext& ctx, const detail::NodeFrame& frame, Engine& rng) {
  const Index d = ctx.x.cols();
  const Index n = frame.size();
  std::vector<Index> vars(static_cast<std::size_t>(d));
  std::iota(vars.begin(), vars.end(), Index{0});
  for (int k = 0; k < ctx.mtry; ++k) {
    const Index j = k + draw_index(rng, d - k);
    std::swap(vars[static_cast<std::size_t>(k)], vars[static_cast<std::size_t>(j)]);
  }
  const SplitRule rule = ctx.params.rule;
  const auto leaf_min = static_cast<Index>(ctx.params.min_leaf_size);
  SplitChoice best;
  std::vector<double> value(static_cast<std::size_t>(n));
  std::vector<char> left(static_cast<std::size_t>(n));
  for (int k = 0; k < ctx.mtry; ++k) {
    const Index j = vars[static_cast<std::size_t>(k)];
    for (Index p = 0; p < n; ++p) value[static_cast<std::size_t>(p)] = ctx.x(frame.row[static_cast<std::size_t>(p)], j);
    std::vector<double> sorted = value;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cuts;
    if (rule == SplitRule::kExtraTrees) {
      const double lo = sorted.front();
      const double hi = sorted.back();
      if (lo < hi) {
        const double cut = lo + (hi - lo) * uniform_open(rng);
        if (cut < hi) cuts.push_back(cut);
      }
    } else {
      cuts = candidate_cuts(sorted, ctx.params.max_cuts);
    }
    std::optional<double> var_best;
    double var_cut = 0.0;
    for (double cut : cuts) {
      const auto n_left = static_cast<Index>(std::upper_bound(sorted.begin(), sorted.end(), cut) - sorted.begin());
      if (n_left < leaf_min || n - n_left < leaf_min) continue;
      if (rule == SplitRule::kMaxStat) {
        const double share = static_cast<double>(n_left) / static_cast<double>(n);
        if (share < 0.1 || share > 0.9) continue;
      }
      for (Index p = 0; p < n; ++p) {
        left[static_cast<std::size_t>(p)] = value[static_cast<std::size_t>(p)] <= cut ? 1 : 0;
      }
      const auto s = detail::score_partition(rule, frame, left);
      if (s && std::isfinite(*s) && (!var_best || *s > *var_best)) {
        var_best = s;
        var_cut = cut;
      }
    }
    if (!var_best) continue;
    double score = *var_best;
    if (rule == SplitRule::kMaxStat && ctx.params.maxstat_correction) score = -maxstat_log_pvalue(score);
    if (best.var < 0 || score > best.score) {
      best.score = score;
      best.var = static_cast<std::int32_t>(j);
      best.cut = var_cut;
    }
  }
  return best;
}

SurvivalTree grow_tree(const GrowContext& ctx, const RowMatrix& x_rows, std::uint64_t b) {
  const Index n = ctx.x.rows();
  Engine rng = make_stream(ctx.params.seed, b, "tree");
  SurvivalTree tree;
  tree.in_bag.assign(static_cast<std::size_t>(n), 0);
  std::vector<Index> sample(static_cast<std::size_t>(n));
  for (auto& r : sample) {
    r = draw_index(rng, n);
    tree.in_bag[static_cast<std::size_t>(r)] = 1;
  }

  std::optional<StepFunction> censor;
  if (ctx.params.rule == SplitRule::kBrierGradient) {
    VectorXd t(n);
    Eigen::VectorXi s(n);
    for (Index k = 0; k < n; ++k) {
      t(k) = ctx.time[sample[static_cast<std::size_t>(k)]];
      s(k) = ctx.status[sample[static_cast<std::size_t>(k)]];
    }
    censor = censoring_km(t, s);
  }

  const auto leaf_min = static_cast<std::size_t>(ctx.params.min_leaf_size);
  const auto min_events = static_cast<Index>(ctx.params.min_node_events);
  tree.nodes.emplace_back();
  std::vector<std::pair<std::int32_t, std::vector<Index>>> stack;
  stack.emplace_back(0, std::move(sample));
  while (!stack.empty()) {
    auto [k, rows] = std::move(stack.back());
    stack.pop_back();
    Index events = 0;
    for (Index r : rows) events += ctx.status[r];
    SplitChoice choice;
    if (rows.size() >= 2 * leaf_min && events >= min_events && events > 0) {
      const detail::NodeFrame frame =
          detail::make_frame(ctx.time, ctx.status, rows, ctx.params.rule, censor ? &*censor : nullptr);
      choice = best_split(ctx, frame, rng);
    }
    if (choice.var < 0 || !(choice.score > 0.0)) {
      tree.nodes[static_cast<std::size_t>(k)].leaf = static_cast<std::int32_t>(tree.leaves.size());
      tree.leaves.push_back(make_leaf(ctx, rows));
      continue;
    }
    std::vector<Index> left_rows;
    std::vector<Index> right_rows;
    for (Index r : rows) (ctx.x(r, choice.var) <= choice.cut ? left_rows : right_rows).push_back(r);
    const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(k)];
    node.var = choice.var;
    node.cut = choice.cut;
    node.left = left_id;
    node.right = left_id + 1;
    stack.emplace_back(left_id + 1, std::move(right_rows));
    stack.emplace_back(left_id, std::move(left_rows));
  }

  tree.train_leaf.resize(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) tree.train_leaf[static_cast<std::size_t>(r)] = tree.leaf_for(x_rows.row(r).data());
  return tree;
}

void add_leaf(const Leaf& leaf, double* delta) {
  for (std::size_t k = 0; k < leaf.grid_index.size(); ++k) delta[leaf.grid_index[k]] += leaf.increment[k];
}

VectorXd cumulate(VectorXd delta, double scale) {
  double run = 0.0;
  for (Index k = 0; k < delta.size(); ++k) {
    run += delta(k);
    delta(k) = run * scale;
  }
  return delta;
}

void check_row(const SurvivalForest& forest, Index width) {
  if (width != forest.n_features()) throw InvalidInput("covariate dimension does not match the forest");
  if (forest.trees.empty()) throw InvalidInput("forest has no trees");
}

}  // namespace

SurvivalForest grow_forest(const SurvivalDataset& ds, const ForestParams& params) {
  params.validate(ds.cols());
  if (ds.has_missing()) throw InvalidInput("forest growth needs complete covariates");
  if (ds.events() < 2) throw DegenerateInput("forest growth needs at least two events");

  SurvivalForest forest;
  forest.params = params;
  for (const auto& c : ds.columns) forest.names.push_back(c.name);
  for (Index i = 0; i < ds.rows(); ++i) {
    if (ds.status(i) == 1) forest.grid.push_back(ds.time(i));
  }
  std::sort(forest.grid.begin(), forest.grid.end());
  forest.grid.erase(std::unique(forest.grid.begin(), forest.grid.end()), forest.grid.end());

  const VectorXd time = ds.time;
  const Eigen::VectorXi status = ds.status;
  const RowMatrix x_rows = ds.x;
  const GrowContext ctx{ds.x, time.data(), status.data(), params, forest.grid, params.resolved_mtry(ds.cols())};

  forest.trees.resize(static_cast<std::size_t>(params.n_trees));
  unsigned workers = params.n_threads == 0 ? std::max(1U, std::thread::hardware_concurrency())
                                           : static_cast<unsigned>(params.n_threads);
  workers = std::min<unsigned>(workers, static_cast<unsigned>(params.n_trees));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int b = next++; b < params.n_trees; b = next++) {
      try {
        forest.trees[static_cast<std::size_t>(b)] = grow_tree(ctx, x_rows, static_cast<std::uint64_t>(b));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return forest;
}

VectorXd predict_chf(const SurvivalForest& forest, const Eigen::Ref<const VectorXd>& x) {
  check_row(forest, x.size());
  for (Index j = 0; j < x.size(); ++j) {
    if (std::isnan(x(j))) throw InvalidInput("forest prediction needs complete covariates");
  }
  const VectorXd row = x;
  VectorXd delta = VectorXd::Zero(forest.grid_size());
  for (const auto& tree : forest.trees) {
    add_leaf(tree.leaves[static_cast<std::size_t>(tree.leaf_for(row.data()))], delta.data());
  }
  return cumulate(std::move(delta), 1.0 / static_cast<double>(forest.trees.size()));
}

MatrixXd predict_chf_rows(const SurvivalForest& forest, const Eigen::Ref<const MatrixXd>& x) {
  check_row(forest, x.cols());
  MatrixXd out(x.rows(), forest.grid_size());
  for (Index i = 0; i < x.rows(); ++i) out.row(i) = predict_chf(forest, VectorXd(x.row(i).transpose())).transpose();
  return out;
}

double chf_at(const SurvivalForest& forest, const Eigen::Ref<const VectorXd>& chf, double t) {
  if (chf.size() != forest.grid_size()) throw InvalidInput("CHF length does not match the forest grid");
  const auto k = std::upper_bound(forest.grid.begin(), forest.grid.end(), t) - forest.grid.begin();
  return k == 0 ? 0.0 : chf(static_cast<Index>(k - 1));
}

VectorXd survival_at(const SurvivalForest& forest, const Eigen::Ref<const MatrixXd>& chf, double t) {
  if (chf.cols() != forest.grid_size()) throw InvalidInput("CHF width does not match the forest grid");
  const auto k = std::upper_bound(forest.grid.begin(), forest.grid.end(), t) - forest.grid.begin();
  if (k == 0) return VectorXd::Ones(chf.rows());
  return (-chf.col(static_cast<Index>(k - 1)).array()).exp().matrix();
}

VectorXd oob_chf(const SurvivalForest& forest, Index i) {
  if (i < 0 || i >= forest.n_train()) throw InvalidInput("training row index out of range");
  VectorXd delta = VectorXd::Zero(forest.grid_size());
  int count = 0;
  for (const auto& tree : forest.trees) {
    if (tree.in_bag[static_cast<std::size_t>(i)]) continue;
    add_leaf(tree.leaves[static_cast<std::size_t>(tree.train_leaf[static_cast<std::size_t>(i)])], delta.data());
    ++count;
  }
  if (count == 0) throw DegenerateInput("training row " + std::to_string(i) + " is in bag for every tree");
  return cumulate(std::move(delta), 1.0 / count);
}

double ensemble_mortality(const SurvivalForest& forest, Index i) { return oob_chf(forest, i).sum(); }

OobMortality oob_mortality(const SurvivalForest& forest, const SurvivalDataset& ds) {
  if (ds.rows() != forest.n_train()) throw InvalidInput("dataset is not the forest's training set");
  OobMortality out;
  out.mortality.resize(ds.rows());
  out.fallback.assign(static_cast<std::size_t>(ds.rows()), false);
  for (Index i = 0; i < ds.rows(); ++i) {
    if (forest.oob_count(i) > 0) {
      out.mortality(i) = ensemble_mortality(forest, i);
    } else {
      out.mortality(i) = predict_chf(forest, VectorXd(ds.x.row(i).transpose())).sum();
      out.fallback[static_cast<std::size_t>(i)] = true;
      ++out.n_fallback;
    }
  }
  return out;
}

VectorXd predicted_mortality(const SurvivalForest& forest, const Eigen::Ref<const MatrixXd>& x) {
  return predict_chf_rows(forest, x).rowwise().sum();
}

TuneResult tune_grid(const SurvivalDataset& ds, const std::vector<ForestParams>& grid, std::uint64_t seed) {
  if (grid.empty()) throw InvalidInput("tuning grid is empty");
  TuneResult result;
  std::optional<std::size_t> best;
  const Index d = ds.cols();
  auto better = [&](const TuneEntry& a, const TuneEntry& b) {
    if (*a.oob_c != *b.oob_c) return *a.oob_c > *b.oob_c;
    const int ma = a.params.resolved_mtry(d);
    const int mb = b.params.resolved_mtry(d);
    if (ma != mb) return ma < mb;
    return a.params.min_leaf_size > b.params.min_leaf_size;
  };
  for (std::size_t k = 0; k < grid.size(); ++k) {
    TuneEntry entry{grid[k], std::nullopt, {}};
    entry.params.seed = seed;
    SurvivalForest forest;
    try {
      forest = grow_forest(ds, entry.params);
      const OobMortality m = oob_mortality(forest, ds);
      entry.oob_c = harrell_c(m.mortality, ds.time, ds.status);
    } catch (const DegenerateInput& e) {
      entry.error = e.what();
    } catch (const ConvergenceError& e) {
      entry.error = e.what();
    }
    result.table.push_back(entry);
    if (entry.oob_c && (!best || better(entry, result.table[*best]))) {
      best = k;
      result.best_forest = std::move(forest);
    }
  }
  if (!best) throw DegenerateInput("every tuning grid point failed: " + result.table.front().error);
  result.best_index = *best;
  result.best = result.table[*best].params;
  return result;
}

std::vector<ForestParams> default_tuning_grid(Index d, const ForestParams& base) {
  if (d < 1) throw InvalidInput("tuning grid needs at least one covariate");
  const auto dd = static_cast<double>(d);
  std::vector<int> mtries;
  for (double m : {std::floor(std::sqrt(dd)), std::floor(dd / 3.0), dd}) {
    const int v = std::max(1, static_cast<int>(m));
    if (std::find(mtries.begin(), mtries.end(), v) == mtries.end()) mtries.push_back(v);
  }
  std::vector<ForestParams> grid;
  for (int m : mtries) {
    for (int leaf : {5, 15, 30}) {
      ForestParams p = base;
      p.mtry = m;
      p.min_leaf_size = leaf;
      grid.push_back(p);
    }
  }
  return grid;
}

}  // namespace survbench

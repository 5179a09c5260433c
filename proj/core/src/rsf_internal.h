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

#include <optional>
#include <vector>

#include "survbench/rsf.h"

namespace survbench::detail {

// Rows of one node sorted by time, grouped by distinct time, with the
// per-rule quantities that do not depend on the candidate cut.
struct NodeFrame {
  std::vector<double> time;
  std::vector<int> status;
  std::vector<Index> row;                 // original row behind each position
  std::vector<std::size_t> group_start;   // distinct-time groups plus end sentinel
  Index events = 0;

  std::vector<double> lr_score;           // delta - H_NA(t), LogRankScore only
  double lr_score_mean = 0.0;
  double lr_score_ss = 0.0;

  std::vector<double> g_minus;            // G(T-) per position, Brier only
  std::vector<double> g_at_group;         // G(t) per group, Brier only
  double brier_parent = 0.0;

  Index size() const { return static_cast<Index>(time.size()); }
  std::size_t groups() const { return group_start.size() - 1; }
};

NodeFrame make_frame(const double* time, const int* status, const std::vector<Index>& rows,
                     SplitRule rule, const StepFunction* censor_surv);

// `left` is indexed by frame position. Both children must be nonempty.
std::optional<double> score_partition(SplitRule rule, const NodeFrame& frame,
                                      const std::vector<char>& left);

std::optional<double> logrank_statistic(const NodeFrame& frame, const std::vector<char>& left);

}  // namespace survbench::detail

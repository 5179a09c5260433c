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

#include <filesystem>
#include <span>
#include <vector>

#include "survbench/runner.h"

namespace survbench {

struct BoxStats {
  std::size_t n = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::vector<double> outliers;  // beyond 1.5 IQR from the quartiles
};

// Type-7 quartiles of the finite values. Throws InvalidInput when none are finite.
BoxStats box_stats(std::span<const double> values);

struct CalibrationBand {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> low;   // 2.5th percentile across curves
  std::vector<double> high;  // 97.5th percentile across curves
  std::vector<std::size_t> count;
};

// Interpolates every curve linearly onto `grid` (points outside a curve's
// predicted range are skipped for that curve) and summarizes across curves.
CalibrationBand calibration_band(const std::vector<const CurveRecord*>& curves, const std::vector<double>& grid);

struct PlotOptions {
  bool svg = false;
  int band_points = 99;  // common grid 0.01, 0.02, ..., 0.99
};

// Writes boxplots.csv, timing.csv and, when curves are given,
// calibration_bands.csv; with options.svg one SVG boxplot per scenario and
// metric. Returns the files written.
std::vector<std::filesystem::path> emit_plot_data(const std::vector<ResultRow>& rows,
                                                  const std::vector<CurveRecord>& curves,
                                                  const std::filesystem::path& out_dir,
                                                  const PlotOptions& options = {});

}  // namespace survbench

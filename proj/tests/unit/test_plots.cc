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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "survbench/csv.h"
#include "survbench/error.h"
#include "survbench/plots.h"

namespace survbench {
namespace {

namespace fs = std::filesystem;

TEST(BoxStats, FiveValues) {
  const std::vector<double> v{3, 1, 5, 2, 4};
  const BoxStats b = box_stats(v);
  EXPECT_EQ(b.n, 5u);
  EXPECT_EQ(b.min, 1.0);
  EXPECT_EQ(b.q1, 2.0);
  EXPECT_EQ(b.median, 3.0);
  EXPECT_EQ(b.q3, 4.0);
  EXPECT_EQ(b.max, 5.0);
  EXPECT_TRUE(b.outliers.empty());
}

TEST(BoxStats, SingleValueAndOutliers) {
  const BoxStats one = box_stats(std::vector<double>{0.7});
  EXPECT_EQ(one.q1, 0.7);
  EXPECT_EQ(one.median, 0.7);
  EXPECT_EQ(one.q3, 0.7);
  const BoxStats out = box_stats(std::vector<double>{1, 2, 3, 4, 5, 100, NAN});
  EXPECT_EQ(out.n, 6u);
  ASSERT_EQ(out.outliers.size(), 1u);
  EXPECT_EQ(out.outliers[0], 100.0);
  EXPECT_THROW(box_stats(std::vector<double>{NAN}), InvalidInput);
}

CurveRecord curve(int rep, double shift) {
  CurveRecord c;
  c.scenario = {"pbc", 100, 0.3, 0.0, "1"};
  c.method = "cox";
  c.replicate = rep;
  c.t_star = 1000;
  for (int k = 1; k <= 9; ++k) {
    c.predicted.push_back(k / 10.0);
    c.observed.push_back(std::clamp(k / 10.0 + shift, 0.0, 1.0));
  }
  return c;
}

TEST(CalibrationBand, MeanAndPercentiles) {
  std::vector<CurveRecord> curves{curve(0, -0.1), curve(1, 0.0), curve(2, 0.1)};
  std::vector<const CurveRecord*> ptrs;
  for (const auto& c : curves) ptrs.push_back(&c);
  const CalibrationBand band = calibration_band(ptrs, {0.05, 0.5, 0.95});
  // 0.05 and 0.95 lie outside every curve's range.
  ASSERT_EQ(band.grid.size(), 1u);
  EXPECT_EQ(band.grid[0], 0.5);
  EXPECT_EQ(band.count[0], 3u);
  EXPECT_NEAR(band.mean[0], 0.5, 1e-12);
  EXPECT_NEAR(band.low[0], 0.4 + 0.2 * 0.025, 1e-12);
  EXPECT_NEAR(band.high[0], 0.6 - 0.2 * 0.025, 1e-12);
}

TEST(EmitPlotData, WritesFiles) {
  std::vector<ResultRow> rows;
  for (int rep = 0; rep < 5; ++rep) {
    for (const char* m : {"cox", "rsf:logrank"}) {
      ResultRow r;
      r.scenario = {"pbc", 100, 0.3, 0.0, "1"};
      r.method = m;
      r.replicate = rep;
      r.metric = "ibs";
      r.value = 0.1 + 0.01 * rep;
      r.fit_ms = 10;
      r.predict_ms = 2;
      rows.push_back(r);
    }
  }
  rows.back().dropped = true;
  const fs::path dir = fs::temp_directory_path() / "survbench_plots_test";
  fs::remove_all(dir);
  PlotOptions opt;
  opt.svg = true;
  const auto files = emit_plot_data(rows, {curve(0, 0.0), curve(1, 0.05)}, dir, opt);
  EXPECT_TRUE(fs::exists(dir / "boxplots.csv"));
  EXPECT_TRUE(fs::exists(dir / "timing.csv"));
  EXPECT_TRUE(fs::exists(dir / "calibration_bands.csv"));
  EXPECT_GE(files.size(), 4u);

  std::ifstream in(dir / "boxplots.csv");
  std::string header, line;
  std::getline(in, header);
  int n = 0;
  while (std::getline(in, line)) {
    const auto f = split_csv_line(line);
    if (f[5] == "cox") EXPECT_DOUBLE_EQ(parse_double(f[11]).value_or(0.0), 0.12);  // median of 0.10..0.14
    ++n;
  }
  EXPECT_EQ(n, 2);
}

}  // namespace
}  // namespace survbench

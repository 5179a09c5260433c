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

#include "survbench/dataio.h"
#include "survbench/error.h"

namespace survbench {
namespace {

const char* kSchema = R"({
  "time": "days", "status": "dead", "treatment": "rx",
  "columns": {"rx": {"kind": "binary", "levels": [0, 1]}, "age": "continuous",
              "grade": {"kind": "ordinal", "levels": [1, 2, 3]}}
})";

TEST(Schema, KeepsColumnOrder) {
  const Schema s = parse_schema(kSchema);
  ASSERT_EQ(s.columns.size(), 3u);
  EXPECT_EQ(s.columns[0].name, "rx");
  EXPECT_EQ(s.columns[1].name, "age");
  EXPECT_EQ(s.columns[2].name, "grade");
  EXPECT_EQ(s.time_column, "days");
  EXPECT_EQ(s.treatment_column.value_or(""), "rx");
}

TEST(Schema, RejectsBadLevels) {
  EXPECT_THROW(parse_schema(R"({"columns": {"g": {"kind": "ordinal", "levels": [2, 1]}}})"), InvalidInput);
  EXPECT_THROW(parse_schema(R"({"columns": {"b": {"kind": "binary", "levels": [0]}}})"), InvalidInput);
}

TEST(Csv, MissingCellsAreRecorded) {
  std::istringstream in("id,days,dead,rx,age,grade,extra\n1,10,1,0,50,2,x\n2,20,0,1,NA,3,y\n3,5,1,1,,1,z\n");
  const SurvivalDataset ds = parse_csv(in, parse_schema(kSchema));
  ASSERT_EQ(ds.rows(), 3);
  ASSERT_EQ(ds.cols(), 3);
  EXPECT_TRUE(ds.has_missing());
  EXPECT_TRUE(ds.missing(1, 1));
  EXPECT_TRUE(ds.missing(2, 1));
  EXPECT_FALSE(ds.missing(0, 1));
  EXPECT_TRUE(std::isnan(ds.x(1, 1)));
  EXPECT_EQ(ds.events(), 2);

  const SurvivalDataset imp = impute_column_means(ds);
  EXPECT_FALSE(imp.has_missing());
  EXPECT_DOUBLE_EQ(imp.x(1, 1), 50.0);
}

TEST(Csv, RejectsInvalidRows) {
  const Schema s = parse_schema(kSchema);
  std::istringstream bad_time("days,dead,rx,age,grade\n0,1,0,50,2\n");
  EXPECT_THROW(parse_csv(bad_time, s), InvalidInput);
  std::istringstream bad_status("days,dead,rx,age,grade\n3,2,0,50,2\n");
  EXPECT_THROW(parse_csv(bad_status, s), InvalidInput);
  std::istringstream bad_level("days,dead,rx,age,grade\n3,1,0,50,7\n");
  EXPECT_THROW(parse_csv(bad_level, s), InvalidInput);
  std::istringstream missing_column("days,dead,rx,age\n3,1,0,50\n");
  EXPECT_THROW(parse_csv(missing_column, s), InvalidInput);
}

TEST(Dataset, SubsetAndSelect) {
  std::istringstream in("days,dead,rx,age,grade\n10,1,0,50,2\n20,0,1,60,3\n5,1,1,70,1\n");
  const SurvivalDataset ds = parse_csv(in, parse_schema(kSchema));
  const SurvivalDataset sub = ds.subset({2, 2, 0});
  EXPECT_EQ(sub.rows(), 3);
  EXPECT_DOUBLE_EQ(sub.time(0), 5.0);
  EXPECT_DOUBLE_EQ(sub.time(2), 10.0);
  const SurvivalDataset sel = ds.select_columns({ds.column_index("grade")});
  EXPECT_EQ(sel.cols(), 1);
  EXPECT_EQ(sel.columns[0].name, "grade");
  EXPECT_THROW(ds.column_index("nope"), InvalidInput);
}

TEST(Summary, PbcFileMatchesPublishedCounts) {
  const std::string dir = SURVBENCH_TEST_DATA_DIR;
  const SurvivalDataset ds = load_csv(dir + "/pbc.csv", load_schema(dir + "/pbc.schema.json"));
  EXPECT_EQ(ds.rows(), 312);
  const SummaryTable t = summarize(ds);
  EXPECT_EQ(t.columns.size(), static_cast<std::size_t>(ds.cols()));
  for (const auto& c : t.columns) {
    EXPECT_LE(c.min, c.median);
    EXPECT_LE(c.median, c.max);
  }
}

}  // namespace
}  // namespace survbench

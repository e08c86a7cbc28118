/*
 * Copyright 2026 The LongHorizon Authors.
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
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "longhorizon/csv.hpp"
#include "longhorizon/data.hpp"
#include "longhorizon/error.hpp"

namespace longhorizon {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lh_data_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void WriteText(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

TEST(Column, CategoricalInternsInFirstAppearanceOrder) {
  const std::vector<std::string> v{"b", "a", "b", "c"};
  const Column c = Column::Categorical("seg", v);
  EXPECT_EQ(c.levels(), (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_EQ(c[2], 0.0);
  EXPECT_EQ(c.level_of(3), "c");
  const Column t = c.Take(std::vector<std::size_t>{3, 1});
  EXPECT_EQ(t.level_of(0), "c");
  EXPECT_EQ(t.level_of(1), "a");
}

TEST(Table, RejectsDuplicateNamesAndRaggedColumns) {
  EXPECT_THROW(Table({Column::Float("a", {1.0}), Column::Float("a", {2.0})}), Error);
  EXPECT_THROW(Table({Column::Float("a", {1.0}), Column::Float("b", {1.0, 2.0})}), Error);
  EXPECT_THROW(Table({Column::Float("a", {std::numeric_limits<double>::quiet_NaN()})}), Error);
}

TEST(Table, MissingColumnNamesIt) {
  const Table t({Column::Float("x0", {1.0})});
  try {
    t.column("x9");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("x9"), std::string::npos);
  }
}

TEST(Csv, FormatDoubleRoundTrips) {
  Rng rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) / 3.0;
    EXPECT_EQ(std::stod(FormatDouble(v)), v);
  }
  EXPECT_EQ(FormatDouble(0.1), "0.1");
}

TEST(Csv, QuotedFieldsAndRowWidth) {
  std::istringstream in("a,b\n\"x,1\",\"say \"\"hi\"\"\"\n");
  const CsvDocument doc = ReadCsv(in);
  ASSERT_EQ(doc.rows.size(), 1u);
  EXPECT_EQ(doc.rows[0][0], "x,1");
  EXPECT_EQ(doc.rows[0][1], "say \"hi\"");
  std::istringstream bad("a,b\n1\n");
  EXPECT_THROW(ReadCsv(bad), DataError);
}

TEST(Csv, UnparseableCellNamesRowAndColumn) {
  std::istringstream in("x0\n1.5\nabc\n");
  const CsvDocument doc = ReadCsv(in);
  const std::vector<ColumnSpec> schema{{"x0", ColumnKind::kFloat}};
  try {
    TableFromCsv(doc, schema);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("x0"), std::string::npos) << msg;
  }
}

TEST(Csv, ExperimentRoundTrip) {
  const fs::path dir = TempDir("roundtrip");
  Rng rng(3);
  ExperimentalDataset exp = lhtest::MakeExperiment({0, 1, 2, 1}, lhtest::RandomPropensities(4, 3, rng));
  const std::vector<std::string> seg{"north", "south, east", "north", "\"q\""};
  exp.features = Table::Concat(exp.features, Table({Column::Categorical("segment", seg),
                                                    Column::Int("tenure", {1, 2, 3, 40})}));
  exp.unit_ids = {10, 11, 12, 13};
  WriteExperimental(exp, dir / "exp.csv");
  DatasetSchema schema;
  schema.features = exp.features.Schema();
  schema.surrogates = exp.surrogates.Schema();
  schema.n_actions = 3;
  const ExperimentalDataset back = LoadExperimental(dir / "exp.csv", schema);
  EXPECT_EQ(back.unit_ids, exp.unit_ids);
  EXPECT_EQ(back.actions, exp.actions);
  EXPECT_TRUE(back.features == exp.features);
  EXPECT_TRUE(back.surrogates == exp.surrogates);
  EXPECT_TRUE(std::equal(back.propensities.data().begin(), back.propensities.data().end(),
                         exp.propensities.data().begin()));
}

TEST(Csv, RenamedColumnsThroughSchema) {
  const fs::path dir = TempDir("rename");
  WriteText(dir / "exp.csv", "id,age,arm,clicks,p0,p1\n5,30,1,2.5,0.5,0.5\n6,40,0,1,0.25,0.75\n");
  DatasetSchema schema;
  schema.features = {{"age", ColumnKind::kFloat}};
  schema.surrogates = {{"clicks", ColumnKind::kFloat}};
  schema.unit_id_column = "id";
  schema.action_column = "arm";
  const auto exp = LoadExperimental(dir / "exp.csv", schema);
  EXPECT_EQ(exp.unit_ids, (std::vector<std::int64_t>{5, 6}));
  EXPECT_EQ(exp.actions, (std::vector<int>{1, 0}));
  EXPECT_EQ(exp.features.column("age")[1], 40.0);

  schema.action_column = "action";
  EXPECT_THROW(LoadExperimental(dir / "exp.csv", schema), SchemaError);
}

TEST(Csv, PositivityViolationOnLoad) {
  const fs::path dir = TempDir("positivity");
  WriteText(dir / "exp.csv", "x0,action,s0,p0,p1\n1,0,1,1,0\n");
  DatasetSchema schema;
  schema.features = {{"x0", ColumnKind::kFloat}};
  schema.surrogates = {{"s0", ColumnKind::kFloat}};
  EXPECT_THROW(LoadExperimental(dir / "exp.csv", schema), PositivityError);
}

TEST(Csv, HistoricalMissingOutcome) {
  const fs::path dir = TempDir("hist");
  WriteText(dir / "h.csv", "x0,s0,y\n1,2,3\n1,2,\n");
  DatasetSchema schema;
  schema.features = {{"x0", ColumnKind::kFloat}};
  schema.surrogates = {{"s0", ColumnKind::kFloat}};
  EXPECT_THROW(LoadHistorical(dir / "h.csv", schema), DataError);
}

TEST(Csv, OutcomesRoundTrip) {
  const fs::path dir = TempDir("outcomes");
  const std::vector<std::int64_t> ids{3, 1, 2};
  const std::vector<double> v{0.1, -2.0 / 3.0, 1e300};
  WriteOutcomes(dir / "o.csv", ids, v, "y_tilde");
  const auto back = LoadOutcomes(dir / "o.csv", "y_tilde");
  EXPECT_EQ(back.unit_ids, ids);
  EXPECT_EQ(back.values, v);
}

TEST(Experiment, SurrogateSchemaMismatchListsColumns) {
  Rng rng(1);
  const auto exp = lhtest::MakeExperiment({0, 1}, lhtest::RandomPropensities(2, 2, rng));
  HistoricalDataset hist;
  hist.unit_ids = {0, 1};
  hist.features = exp.features;
  hist.surrogates = Table({Column::Float("s1", {0.0, 1.0})});
  hist.outcomes = {0.0, 1.0};
  try {
    CheckSurrogateSchemas(hist, exp);
    FAIL();
  } catch (const SchemaError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("s0"), std::string::npos);
    EXPECT_NE(msg.find("s1"), std::string::npos);
  }
}

class FoldSizes : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(FoldSizes, PartitionWithBalancedSizes) {
  const auto [n, k] = GetParam();
  const auto f = MakeFolds(static_cast<std::size_t>(n), k, 42);
  std::set<std::size_t> all;
  std::size_t smallest = n, largest = 0;
  for (int fold = 0; fold < k; ++fold) {
    const auto m = f.Members(fold);
    const auto c = f.Complement(fold);
    EXPECT_EQ(m.size() + c.size(), static_cast<std::size_t>(n));
    smallest = std::min(smallest, m.size());
    largest = std::max(largest, m.size());
    all.insert(m.begin(), m.end());
  }
  EXPECT_EQ(all.size(), static_cast<std::size_t>(n));
  EXPECT_LE(largest - smallest, 1u);
  EXPECT_EQ(MakeFolds(n, k, 42).fold_of_unit, f.fold_of_unit);
}

INSTANTIATE_TEST_SUITE_P(Data, FoldSizes,
                         ::testing::Values(std::pair{9, 3}, std::pair{10, 3}, std::pair{2, 2},
                                           std::pair{1001, 7}));

TEST(Folds, InvalidCounts) {
  EXPECT_THROW(MakeFolds(5, 1, 0), ArgumentError);
  EXPECT_THROW(MakeFolds(2, 3, 0), ArgumentError);
}

TEST(Split, SizesDisjointSorted) {
  const auto s = SplitTrainTest(101, 0.2, 9);
  EXPECT_EQ(s.test.size(), 20u);
  EXPECT_EQ(s.train.size(), 81u);
  EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
  std::set<std::size_t> u(s.train.begin(), s.train.end());
  u.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(u.size(), 101u);
  EXPECT_EQ(SplitTrainTest(2, 0.01, 0).test.size(), 1u);
  EXPECT_THROW(SplitTrainTest(10, 0.0, 0), ArgumentError);
  EXPECT_THROW(SplitTrainTest(1, 0.5, 0), ArgumentError);
}

}  // namespace
}  // namespace longhorizon

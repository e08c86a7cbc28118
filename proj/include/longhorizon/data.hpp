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

#ifndef LONGHORIZON_DATA_HPP_
#define LONGHORIZON_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "longhorizon/matrix.hpp"

namespace longhorizon {

enum class ColumnKind { kFloat, kInt, kCategorical };

std::string_view ToString(ColumnKind kind);
ColumnKind ParseColumnKind(std::string_view text);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kFloat;

  friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

// One named column. Numeric kinds hold their values; categorical columns hold
// integer codes into `levels()` (interned in order of first appearance).
// Int values are stored as doubles and must be exactly representable.
class Column {
 public:
  static Column Float(std::string name, std::vector<double> values);
  static Column Int(std::string name, std::vector<std::int64_t> values);
  static Column Categorical(std::string name, std::span<const std::string> values);
  static Column Categorical(std::string name, std::vector<int> codes,
                            std::vector<std::string> levels);

  const std::string& name() const { return spec_.name; }
  ColumnKind kind() const { return spec_.kind; }
  const ColumnSpec& spec() const { return spec_; }
  std::size_t size() const { return values_.size(); }

  // Numeric value, or the level code for categorical columns.
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  const std::vector<std::string>& levels() const { return levels_; }
  const std::string& level_of(std::size_t i) const;

  // Text form used by the CSV writer; floats use shortest round-trip digits.
  std::string FormatCell(std::size_t i) const;

  Column Take(std::span<const std::size_t> rows) const;
  Column Renamed(std::string name) const;

 private:
  Column(ColumnSpec spec, std::vector<double> values, std::vector<std::string> levels)
      : spec_(std::move(spec)), values_(std::move(values)), levels_(std::move(levels)) {}

  ColumnSpec spec_;
  std::vector<double> values_;
  std::vector<std::string> levels_;
};

// Immutable columnar table. All columns have the same length, names are
// unique and float columns contain no NaN or infinity.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<Column> columns);
  // Table with `n_rows` rows and no columns.
  static Table Empty(std::size_t n_rows);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return columns_.size(); }

  const Column& column(std::size_t j) const { return columns_[j]; }
  // Throws SchemaError naming the column when absent.
  const Column& column(std::string_view name) const;
  std::optional<std::size_t> Find(std::string_view name) const;
  bool Has(std::string_view name) const { return Find(name).has_value(); }

  std::vector<ColumnSpec> Schema() const;
  std::vector<std::string> Names() const;

  Table Select(std::span<const std::string> names) const;
  Table Take(std::span<const std::size_t> rows) const;
  Table WithColumn(Column column) const;
  // Columns of `left` followed by those of `right`; names must not collide.
  static Table Concat(const Table& left, const Table& right);

  // Names, kinds and decoded cell values (categoricals compared by level
  // string) are equal.
  friend bool operator==(const Table& a, const Table& b);

 private:
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

// Experiment (X, A, S, pi_D). Action 0 is the control.
struct ExperimentalDataset {
  std::vector<std::int64_t> unit_ids;
  Table features;
  std::vector<int> actions;
  Table surrogates;
  Matrix propensities;  // N x K, pi_D(a | X_i)
  int n_actions = 2;

  std::size_t size() const { return actions.size(); }
  double propensity(std::size_t i, int a) const {
    return propensities(i, static_cast<std::size_t>(a));
  }

  // Lengths agree, actions in {0..K-1}, every propensity strictly inside
  // (0, 1) and each row sums to 1 +- 1e-9. Throws PositivityError /
  // DataError.
  void Validate() const;
  ExperimentalDataset Subset(std::span<const std::size_t> rows) const;
};

// Historical panel (X, S, Y).
struct HistoricalDataset {
  std::vector<std::int64_t> unit_ids;
  Table features;
  Table surrogates;
  std::vector<double> outcomes;

  std::size_t size() const { return outcomes.size(); }
  void Validate() const;
  HistoricalDataset Subset(std::span<const std::size_t> rows) const;
};

// Throws SchemaError listing the differing surrogate columns when the two
// datasets do not share the exact same surrogate schema.
void CheckSurrogateSchemas(const HistoricalDataset& historical,
                           const ExperimentalDataset& experiment);

struct FoldAssignment {
  std::vector<int> fold_of_unit;
  int n_folds = 0;
  std::uint64_t seed = 0;

  std::size_t n_units() const { return fold_of_unit.size(); }
  std::vector<std::size_t> Members(int fold) const;
  std::vector<std::size_t> Complement(int fold) const;
};

// Shuffles 0..n-1 with the seeded generator and deals units round-robin, so
// fold sizes differ by at most one.
FoldAssignment MakeFolds(std::size_t n_units, int n_folds, std::uint64_t seed);

struct TrainTestSplit {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;  // ascending
};

// Random split holding out round(n * test_fraction) units, at least one on
// each side. Throws ArgumentError unless 0 < test_fraction < 1 and n >= 2.
TrainTestSplit SplitTrainTest(std::size_t n_units, double test_fraction, std::uint64_t seed);

}  // namespace longhorizon

#endif  // LONGHORIZON_DATA_HPP_

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

#include "longhorizon/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "longhorizon/csv.hpp"
#include "longhorizon/error.hpp"
#include "longhorizon/rng.hpp"

namespace longhorizon {

std::string_view ToString(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kFloat:
      return "float";
    case ColumnKind::kInt:
      return "int";
    case ColumnKind::kCategorical:
      return "categorical";
  }
  return "float";
}

ColumnKind ParseColumnKind(std::string_view text) {
  if (text == "float") return ColumnKind::kFloat;
  if (text == "int") return ColumnKind::kInt;
  if (text == "categorical") return ColumnKind::kCategorical;
  throw ArgumentError("unknown column kind '" + std::string(text) + "'");
}

Column Column::Float(std::string name, std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("column '" + name + "': non-finite value at row " + std::to_string(i + 1));
    }
  }
  return Column({std::move(name), ColumnKind::kFloat}, std::move(values), {});
}

Column Column::Int(std::string name, std::vector<std::int64_t> values) {
  std::vector<double> v(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > (std::int64_t{1} << 53) || values[i] < -(std::int64_t{1} << 53)) {
      throw DataError("column '" + name + "': integer out of exact range");
    }
    v[i] = static_cast<double>(values[i]);
  }
  return Column({std::move(name), ColumnKind::kInt}, std::move(v), {});
}

Column Column::Categorical(std::string name, std::span<const std::string> values) {
  std::unordered_map<std::string, int> index;
  std::vector<std::string> levels;
  std::vector<double> codes(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto [it, inserted] = index.emplace(values[i], static_cast<int>(levels.size()));
    if (inserted) levels.push_back(values[i]);
    codes[i] = it->second;
  }
  return Column({std::move(name), ColumnKind::kCategorical}, std::move(codes), std::move(levels));
}

Column Column::Categorical(std::string name, std::vector<int> codes,
                           std::vector<std::string> levels) {
  std::vector<double> v(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] < 0 || static_cast<std::size_t>(codes[i]) >= levels.size()) {
      throw DataError("column '" + name + "': level code out of range");
    }
    v[i] = codes[i];
  }
  return Column({std::move(name), ColumnKind::kCategorical}, std::move(v), std::move(levels));
}

const std::string& Column::level_of(std::size_t i) const {
  return levels_[static_cast<std::size_t>(values_[i])];
}

std::string Column::FormatCell(std::size_t i) const {
  switch (kind()) {
    case ColumnKind::kFloat:
      return FormatDouble(values_[i]);
    case ColumnKind::kInt:
      return std::to_string(static_cast<std::int64_t>(values_[i]));
    case ColumnKind::kCategorical:
      return level_of(i);
  }
  return {};
}

Column Column::Take(std::span<const std::size_t> rows) const {
  std::vector<double> v(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) v[i] = values_[rows[i]];
  return Column(spec_, std::move(v), levels_);
}

Column Column::Renamed(std::string name) const {
  Column c = *this;
  c.spec_.name = std::move(name);
  return c;
}

Table::Table(std::vector<Column> columns) : columns_(std::move(columns)) {
  n_rows_ = columns_.empty() ? 0 : columns_.front().size();
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].size() != n_rows_) {
      throw DataError("column '" + columns_[j].name() + "' has " +
                      std::to_string(columns_[j].size()) + " rows, expected " +
                      std::to_string(n_rows_));
    }
    for (std::size_t k = 0; k < j; ++k) {
      if (columns_[k].name() == columns_[j].name()) {
        throw SchemaError("duplicate column name '" + columns_[j].name() + "'");
      }
    }
  }
}

Table Table::Empty(std::size_t n_rows) {
  Table t;
  t.n_rows_ = n_rows;
  return t;
}

const Column& Table::column(std::string_view name) const {
  if (auto j = Find(name)) return columns_[*j];
  throw SchemaError("missing column '" + std::string(name) + "'");
}

std::optional<std::size_t> Table::Find(std::string_view name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].name() == name) return j;
  }
  return std::nullopt;
}

std::vector<ColumnSpec> Table::Schema() const {
  std::vector<ColumnSpec> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.spec());
  return out;
}

std::vector<std::string> Table::Names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name());
  return out;
}

Table Table::Select(std::span<const std::string> names) const {
  std::vector<Column> cols;
  cols.reserve(names.size());
  for (const auto& n : names) cols.push_back(column(n));
  if (cols.empty()) return Empty(n_rows_);
  return Table(std::move(cols));
}

Table Table::Take(std::span<const std::size_t> rows) const {
  for (std::size_t r : rows) {
    if (r >= n_rows_) throw ArgumentError("row index out of range");
  }
  std::vector<Column> cols;
  cols.reserve(columns_.size());
  for (const auto& c : columns_) cols.push_back(c.Take(rows));
  if (cols.empty()) return Empty(rows.size());
  return Table(std::move(cols));
}

Table Table::WithColumn(Column column) const {
  if (!columns_.empty() && column.size() != n_rows_) {
    throw DataError("column '" + column.name() + "' length does not match table");
  }
  std::vector<Column> cols = columns_;
  cols.push_back(std::move(column));
  return Table(std::move(cols));
}

Table Table::Concat(const Table& left, const Table& right) {
  if (left.n_cols() == 0) return right;
  if (right.n_cols() == 0) return left;
  if (left.n_rows() != right.n_rows()) throw DataError("concat: row counts differ");
  std::vector<Column> cols = left.columns_;
  cols.insert(cols.end(), right.columns_.begin(), right.columns_.end());
  return Table(std::move(cols));
}

bool operator==(const Table& a, const Table& b) {
  if (a.n_rows_ != b.n_rows_ || a.columns_.size() != b.columns_.size()) return false;
  for (std::size_t j = 0; j < a.columns_.size(); ++j) {
    const Column& ca = a.columns_[j];
    const Column& cb = b.columns_[j];
    if (!(ca.spec() == cb.spec())) return false;
    for (std::size_t i = 0; i < a.n_rows_; ++i) {
      if (ca.kind() == ColumnKind::kCategorical) {
        if (ca.level_of(i) != cb.level_of(i)) return false;
      } else if (ca[i] != cb[i]) {
        return false;
      }
    }
  }
  return true;
}

void ExperimentalDataset::Validate() const {
  const std::size_t n = actions.size();
  if (n_actions < 2) throw DataError("experiment needs at least 2 actions");
  if (features.n_rows() != n || surrogates.n_rows() != n || unit_ids.size() != n) {
    throw DataError("experiment: features, surrogates, unit ids and actions differ in length");
  }
  if (propensities.rows() != n || propensities.cols() != static_cast<std::size_t>(n_actions)) {
    throw DataError("experiment: propensity matrix must be N x K");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (actions[i] < 0 || actions[i] >= n_actions) {
      throw DataError("experiment: action out of range at unit " + std::to_string(unit_ids[i]));
    }
    double sum = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      const double p = propensity(i, a);
      if (!(p > 0.0 && p < 1.0)) {
        throw PositivityError("experiment: propensity p" + std::to_string(a) + " = " +
                              FormatDouble(p) + " not in (0, 1) at unit " +
                              std::to_string(unit_ids[i]));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw DataError("experiment: propensities sum to " + FormatDouble(sum) + " at unit " +
                      std::to_string(unit_ids[i]));
    }
  }
}

ExperimentalDataset ExperimentalDataset::Subset(std::span<const std::size_t> rows) const {
  ExperimentalDataset out;
  out.n_actions = n_actions;
  out.features = features.Take(rows);
  out.surrogates = surrogates.Take(rows);
  out.propensities = propensities.take_rows(rows);
  out.actions.reserve(rows.size());
  out.unit_ids.reserve(rows.size());
  for (std::size_t r : rows) {
    out.actions.push_back(actions[r]);
    out.unit_ids.push_back(unit_ids[r]);
  }
  return out;
}

void HistoricalDataset::Validate() const {
  const std::size_t n = outcomes.size();
  if (features.n_rows() != n || surrogates.n_rows() != n || unit_ids.size() != n) {
    throw DataError("history: features, surrogates, unit ids and outcomes differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(outcomes[i])) {
      throw DataError("history: missing or non-finite outcome at unit " +
                      std::to_string(unit_ids[i]));
    }
  }
}

HistoricalDataset HistoricalDataset::Subset(std::span<const std::size_t> rows) const {
  HistoricalDataset out;
  out.features = features.Take(rows);
  out.surrogates = surrogates.Take(rows);
  out.outcomes.reserve(rows.size());
  out.unit_ids.reserve(rows.size());
  for (std::size_t r : rows) {
    out.outcomes.push_back(outcomes[r]);
    out.unit_ids.push_back(unit_ids[r]);
  }
  return out;
}

void CheckSurrogateSchemas(const HistoricalDataset& historical,
                           const ExperimentalDataset& experiment) {
  const auto h = historical.surrogates.Schema();
  const auto e = experiment.surrogates.Schema();
  std::vector<std::string> diff;
  for (const auto& c : h) {
    if (std::find(e.begin(), e.end(), c) == e.end()) diff.push_back(c.name);
  }
  for (const auto& c : e) {
    if (std::find(h.begin(), h.end(), c) == h.end()) diff.push_back(c.name);
  }
  if (!diff.empty()) {
    std::string msg = "surrogate schemas differ in columns:";
    for (const auto& d : diff) msg += " '" + d + "'";
    throw SchemaError(msg);
  }
}

std::vector<std::size_t> FoldAssignment::Members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_unit.size(); ++i) {
    if (fold_of_unit[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::Complement(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_unit.size(); ++i) {
    if (fold_of_unit[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment MakeFolds(std::size_t n_units, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw ArgumentError("n_folds must be at least 2");
  if (static_cast<std::size_t>(n_folds) > n_units) {
    throw ArgumentError("n_folds (" + std::to_string(n_folds) + ") exceeds n_units (" +
                        std::to_string(n_units) + ")");
  }
  std::vector<std::size_t> order(n_units);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldAssignment f;
  f.n_folds = n_folds;
  f.seed = seed;
  f.fold_of_unit.assign(n_units, 0);
  for (std::size_t j = 0; j < n_units; ++j) {
    f.fold_of_unit[order[j]] = static_cast<int>(j % static_cast<std::size_t>(n_folds));
  }
  return f;
}

TrainTestSplit SplitTrainTest(std::size_t n_units, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ArgumentError("test fraction must be in (0, 1)");
  }
  if (n_units < 2) throw ArgumentError("a train/test split needs at least two units");
  auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n_units) * test_fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, n_units - 1);
  std::vector<std::size_t> order(n_units);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  TrainTestSplit split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

}  // namespace longhorizon

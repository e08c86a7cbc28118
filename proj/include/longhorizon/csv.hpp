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

#ifndef LONGHORIZON_CSV_HPP_
#define LONGHORIZON_CSV_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "longhorizon/data.hpp"

namespace longhorizon {

// Shortest decimal text that parses back to exactly `v`.
std::string FormatDouble(double v);

// Header plus string cells of an RFC-4180 style CSV document.
struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of `name` in the header; throws SchemaError naming the column.
  std::size_t ColumnIndex(const std::string& name) const;
  bool HasColumn(const std::string& name) const;
};

CsvDocument ReadCsv(std::istream& in);
CsvDocument ReadCsvFile(const std::filesystem::path& path);
void WriteCsvRow(std::ostream& out, std::span<const std::string> cells);

// Builds a Table from the declared columns of `doc` (extra columns are
// ignored). Missing columns raise SchemaError; unparseable or empty cells raise
// DataError with the 1-based data row and column name.
Table TableFromCsv(const CsvDocument& doc, std::span<const ColumnSpec> schema);
Table LoadCsv(const std::filesystem::path& path, std::span<const ColumnSpec> schema);
void WriteCsv(const Table& table, std::ostream& out);
void WriteCsv(const Table& table, const std::filesystem::path& path);

// Column layout of experiment / history files. Propensities are the columns
// p0..p{K-1}; `unit_id` is optional on input (row order is used instead).
struct DatasetSchema {
  std::vector<ColumnSpec> features;
  std::vector<ColumnSpec> surrogates;
  int n_actions = 2;
  std::string unit_id_column = "unit_id";
  std::string action_column = "action";
  std::string outcome_column = "y";
};

ExperimentalDataset LoadExperimental(const std::filesystem::path& path,
                                     const DatasetSchema& schema);
HistoricalDataset LoadHistorical(const std::filesystem::path& path,
                                 const DatasetSchema& schema);
void WriteExperimental(const ExperimentalDataset& exp, const std::filesystem::path& path);
void WriteHistorical(const HistoricalDataset& hist, const std::filesystem::path& path);

// Two-column outcome files: unit_id, <column>.
struct OutcomeColumn {
  std::vector<std::int64_t> unit_ids;
  std::vector<double> values;
};
OutcomeColumn LoadOutcomes(const std::filesystem::path& path, const std::string& column);
void WriteOutcomes(const std::filesystem::path& path, std::span<const std::int64_t> unit_ids,
                   std::span<const double> values, const std::string& column);

}  // namespace longhorizon

#endif  // LONGHORIZON_CSV_HPP_

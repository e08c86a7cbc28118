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

#include "longhorizon/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "longhorizon/error.hpp"

namespace longhorizon {
namespace {

bool NeedsQuoting(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

// Splits one logical record; returns false at end of input.
bool ReadRecord(std::istream& in, std::vector<std::string>& out, std::size_t& line_no) {
  out.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool field_started = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      ++line_no;
      out.push_back(std::move(field));
      return true;
    } else if (c == '\n') {
      ++line_no;
      out.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw DataError("csv: unterminated quoted field near line " + std::to_string(line_no));
  if (!any) return false;
  out.push_back(std::move(field));
  return true;
}

double ParseDouble(const std::string& cell, std::size_t row, const std::string& col) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw DataError("csv: cannot parse '" + cell + "' as float at row " + std::to_string(row) +
                    ", column '" + col + "'");
  }
  return v;
}

std::int64_t ParseInt(const std::string& cell, std::size_t row, const std::string& col) {
  std::int64_t v = 0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw DataError("csv: cannot parse '" + cell + "' as int at row " + std::to_string(row) +
                    ", column '" + col + "'");
  }
  return v;
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::vector<std::int64_t> ReadUnitIds(const CsvDocument& doc, const std::string& column) {
  std::vector<std::int64_t> ids(doc.rows.size());
  if (!doc.HasColumn(column)) {
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int64_t>(i);
    return ids;
  }
  const std::size_t j = doc.ColumnIndex(column);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = ParseInt(doc.rows[i][j], i + 1, column);
  return ids;
}

std::vector<double> ReadFloatColumn(const CsvDocument& doc, const std::string& column) {
  const std::size_t j = doc.ColumnIndex(column);
  std::vector<double> v(doc.rows.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = ParseDouble(doc.rows[i][j], i + 1, column);
  return v;
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("FormatDouble: conversion failed");
  return std::string(buf, ptr);
}

std::size_t CsvDocument::ColumnIndex(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  throw SchemaError("csv: missing column '" + name + "'");
}

bool CsvDocument::HasColumn(const std::string& name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

CsvDocument ReadCsv(std::istream& in) {
  CsvDocument doc;
  std::size_t line_no = 1;
  if (!ReadRecord(in, doc.header, line_no)) throw DataError("csv: missing header row");
  if (!doc.header.empty() && doc.header[0].starts_with("\xEF\xBB\xBF")) {
    doc.header[0].erase(0, 3);
  }
  std::vector<std::string> record;
  while (ReadRecord(in, record, line_no)) {
    if (record.size() == 1 && record[0].empty()) continue;
    if (record.size() != doc.header.size()) {
      throw DataError("csv: row " + std::to_string(doc.rows.size() + 1) + " has " +
                      std::to_string(record.size()) + " cells, header has " +
                      std::to_string(doc.header.size()));
    }
    doc.rows.push_back(record);
  }
  return doc;
}

CsvDocument ReadCsvFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return ReadCsv(in);
}

void WriteCsvRow(std::ostream& out, std::span<const std::string> cells) {
  for (std::size_t j = 0; j < cells.size(); ++j) {
    if (j > 0) out << ',';
    if (NeedsQuoting(cells[j])) {
      out << '"';
      for (char c : cells[j]) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << cells[j];
    }
  }
  out << '\n';
}

Table TableFromCsv(const CsvDocument& doc, std::span<const ColumnSpec> schema) {
  std::vector<Column> cols;
  cols.reserve(schema.size());
  const std::size_t n = doc.rows.size();
  for (const auto& spec : schema) {
    const std::size_t j = doc.ColumnIndex(spec.name);
    switch (spec.kind) {
      case ColumnKind::kFloat: {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = ParseDouble(doc.rows[i][j], i + 1, spec.name);
        cols.push_back(Column::Float(spec.name, std::move(v)));
        break;
      }
      case ColumnKind::kInt: {
        std::vector<std::int64_t> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = ParseInt(doc.rows[i][j], i + 1, spec.name);
        cols.push_back(Column::Int(spec.name, std::move(v)));
        break;
      }
      case ColumnKind::kCategorical: {
        std::vector<std::string> v(n);
        for (std::size_t i = 0; i < n; ++i) {
          if (doc.rows[i][j].empty()) {
            throw DataError("csv: empty categorical cell at row " + std::to_string(i + 1) +
                            ", column '" + spec.name + "'");
          }
          v[i] = doc.rows[i][j];
        }
        cols.push_back(Column::Categorical(spec.name, v));
        break;
      }
    }
  }
  if (cols.empty()) return Table::Empty(n);
  return Table(std::move(cols));
}

Table LoadCsv(const std::filesystem::path& path, std::span<const ColumnSpec> schema) {
  return TableFromCsv(ReadCsvFile(path), schema);
}

void WriteCsv(const Table& table, std::ostream& out) {
  const auto names = table.Names();
  WriteCsvRow(out, names);
  std::vector<std::string> cells(table.n_cols());
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    for (std::size_t j = 0; j < table.n_cols(); ++j) cells[j] = table.column(j).FormatCell(i);
    WriteCsvRow(out, cells);
  }
}

void WriteCsv(const Table& table, const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  WriteCsv(table, out);
}

ExperimentalDataset LoadExperimental(const std::filesystem::path& path,
                                     const DatasetSchema& schema) {
  const CsvDocument doc = ReadCsvFile(path);
  ExperimentalDataset exp;
  exp.n_actions = schema.n_actions;
  exp.unit_ids = ReadUnitIds(doc, schema.unit_id_column);
  exp.features = TableFromCsv(doc, schema.features);
  exp.surrogates = TableFromCsv(doc, schema.surrogates);
  const std::size_t ja = doc.ColumnIndex(schema.action_column);
  exp.actions.resize(doc.rows.size());
  for (std::size_t i = 0; i < doc.rows.size(); ++i) {
    exp.actions[i] = static_cast<int>(ParseInt(doc.rows[i][ja], i + 1, schema.action_column));
  }
  exp.propensities = Matrix(doc.rows.size(), static_cast<std::size_t>(schema.n_actions));
  for (int a = 0; a < schema.n_actions; ++a) {
    const auto col = ReadFloatColumn(doc, "p" + std::to_string(a));
    for (std::size_t i = 0; i < col.size(); ++i) exp.propensities(i, static_cast<std::size_t>(a)) = col[i];
  }
  exp.Validate();
  return exp;
}

HistoricalDataset LoadHistorical(const std::filesystem::path& path,
                                 const DatasetSchema& schema) {
  const CsvDocument doc = ReadCsvFile(path);
  HistoricalDataset hist;
  hist.unit_ids = ReadUnitIds(doc, schema.unit_id_column);
  hist.features = TableFromCsv(doc, schema.features);
  hist.surrogates = TableFromCsv(doc, schema.surrogates);
  hist.outcomes = ReadFloatColumn(doc, schema.outcome_column);
  hist.Validate();
  return hist;
}

void WriteExperimental(const ExperimentalDataset& exp, const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  std::vector<std::string> header{"unit_id"};
  for (const auto& n : exp.features.Names()) header.push_back(n);
  header.emplace_back("action");
  for (const auto& n : exp.surrogates.Names()) header.push_back(n);
  for (int a = 0; a < exp.n_actions; ++a) header.push_back("p" + std::to_string(a));
  WriteCsvRow(out, header);
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < exp.size(); ++i) {
    cells.clear();
    cells.push_back(std::to_string(exp.unit_ids[i]));
    for (std::size_t j = 0; j < exp.features.n_cols(); ++j) cells.push_back(exp.features.column(j).FormatCell(i));
    cells.push_back(std::to_string(exp.actions[i]));
    for (std::size_t j = 0; j < exp.surrogates.n_cols(); ++j) cells.push_back(exp.surrogates.column(j).FormatCell(i));
    for (int a = 0; a < exp.n_actions; ++a) cells.push_back(FormatDouble(exp.propensity(i, a)));
    WriteCsvRow(out, cells);
  }
}

void WriteHistorical(const HistoricalDataset& hist, const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  std::vector<std::string> header{"unit_id"};
  for (const auto& n : hist.features.Names()) header.push_back(n);
  for (const auto& n : hist.surrogates.Names()) header.push_back(n);
  header.emplace_back("y");
  WriteCsvRow(out, header);
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    cells.clear();
    cells.push_back(std::to_string(hist.unit_ids[i]));
    for (std::size_t j = 0; j < hist.features.n_cols(); ++j) cells.push_back(hist.features.column(j).FormatCell(i));
    for (std::size_t j = 0; j < hist.surrogates.n_cols(); ++j) cells.push_back(hist.surrogates.column(j).FormatCell(i));
    cells.push_back(FormatDouble(hist.outcomes[i]));
    WriteCsvRow(out, cells);
  }
}

OutcomeColumn LoadOutcomes(const std::filesystem::path& path, const std::string& column) {
  const CsvDocument doc = ReadCsvFile(path);
  return {ReadUnitIds(doc, "unit_id"), ReadFloatColumn(doc, column)};
}

void WriteOutcomes(const std::filesystem::path& path, std::span<const std::int64_t> unit_ids,
                   std::span<const double> values, const std::string& column) {
  if (unit_ids.size() != values.size()) throw ArgumentError("WriteOutcomes: length mismatch");
  auto out = OpenForWrite(path);
  const std::vector<std::string> header{"unit_id", column};
  WriteCsvRow(out, header);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::vector<std::string> cells{std::to_string(unit_ids[i]), FormatDouble(values[i])};
    WriteCsvRow(out, cells);
  }
}

}  // namespace longhorizon

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

#include "longhorizon/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "longhorizon/csv.hpp"
#include "longhorizon/error.hpp"
#include "longhorizon/rng.hpp"
#include "longhorizon/stats.hpp"

namespace longhorizon {

namespace {

// Differences between `expected` and the columns of `table`, one entry per
// offending column.
void DiffSchema(const std::vector<ColumnSpec>& expected, const Table& table, const char* role,
                std::vector<std::string>& out) {
  for (const auto& spec : expected) {
    const auto j = table.Find(spec.name);
    if (!j) {
      out.push_back(std::string(role) + " '" + spec.name + "' missing");
    } else if (table.column(*j).kind() != spec.kind) {
      out.push_back(std::string(role) + " '" + spec.name + "' has kind " +
                    std::string(ToString(table.column(*j).kind())) + ", expected " +
                    std::string(ToString(spec.kind)));
    }
  }
  for (const auto& name : table.Names()) {
    const bool known = std::any_of(expected.begin(), expected.end(),
                                   [&](const ColumnSpec& s) { return s.name == name; });
    if (!known) out.push_back(std::string(role) + " '" + name + "' not in model");
  }
}

Json SpecsToJson(const std::vector<ColumnSpec>& specs) {
  Json arr = Json::array();
  for (const auto& s : specs) arr.push_back({{"name", s.name}, {"kind", std::string(ToString(s.kind))}});
  return arr;
}

std::vector<ColumnSpec> SpecsFromJson(const Json& j) {
  std::vector<ColumnSpec> out;
  for (const auto& s : j) {
    out.push_back({s.at("name").get<std::string>(), ParseColumnKind(s.at("kind").get<std::string>())});
  }
  return out;
}

}  // namespace

SurrogateModel::SurrogateModel(FittedRegressor regressor, std::vector<ColumnSpec> surrogate_schema,
                               std::vector<ColumnSpec> covariate_schema, bool include_covariates,
                               std::size_t n_train, double r2, std::vector<std::string> warnings)
    : regressor_(std::move(regressor)),
      surrogate_schema_(std::move(surrogate_schema)),
      covariate_schema_(std::move(covariate_schema)),
      include_covariates_(include_covariates),
      n_train_(n_train),
      r2_(r2),
      warnings_(std::move(warnings)) {}

std::vector<double> SurrogateModel::Impute(const ExperimentalDataset& experiment) const {
  return Impute(experiment.features, experiment.surrogates);
}

std::vector<double> SurrogateModel::Impute(const Table& features, const Table& surrogates) const {
  std::vector<std::string> problems;
  DiffSchema(surrogate_schema_, surrogates, "surrogate", problems);
  if (include_covariates_) {
    for (const auto& spec : covariate_schema_) {
      const auto j = features.Find(spec.name);
      if (!j) {
        problems.push_back("covariate '" + spec.name + "' missing");
      } else if (features.column(*j).kind() != spec.kind) {
        problems.push_back("covariate '" + spec.name + "' has a different kind");
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "surrogate schema mismatch:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw SchemaError(msg);
  }
  Table design;
  if (include_covariates_) {
    std::vector<std::string> names;
    for (const auto& s : covariate_schema_) names.push_back(s.name);
    design = SurrogateDesign(features.Select(names), surrogates, true);
  } else {
    design = surrogates;
  }
  return regressor_.Predict(design);
}

Table SurrogateDesign(const Table& features, const Table& surrogates, bool include_covariates) {
  if (!include_covariates) return surrogates;
  for (const auto& name : features.Names()) {
    if (surrogates.Has(name)) {
      throw SchemaError("column '" + name + "' is declared both as surrogate and as covariate");
    }
  }
  return Table::Concat(surrogates, features);
}

SurrogateModel FitSurrogateIndex(const HistoricalDataset& historical,
                                 const SurrogateFitOptions& options) {
  historical.Validate();
  if (historical.size() == 0) throw ArgumentError("historical dataset is empty");
  if (historical.surrogates.n_cols() == 0) throw ArgumentError("no surrogate columns declared");
  const Table design =
      SurrogateDesign(historical.features, historical.surrogates, options.include_covariates);
  std::vector<std::string> warnings;
  const auto& y = historical.outcomes;
  const double var_y = stats::Variance(y);
  std::vector<ColumnSpec> covariates =
      options.include_covariates ? historical.features.Schema() : std::vector<ColumnSpec>{};

  if (var_y == 0.0) {
    warnings.emplace_back("historical outcome has zero variance; surrogate index is constant");
    FittedRegressor constant(options.spec, FeatureSchema::FromTable(design), ConstantParams{y.front()});
    return {std::move(constant), historical.surrogates.Schema(), std::move(covariates),
            options.include_covariates, historical.size(), 0.0, std::move(warnings)};
  }

  LearnerSpec spec = options.spec;
  if (!options.candidates.empty()) {
    spec = SelectRegressorByCv(options.candidates, design, y, {}, options.tuning_folds,
                               DeriveSeed(options.seed, "surrogate-tuning"))
               .best;
  }
  spec.seed = options.seed;
  FittedRegressor reg = FitRegressor(spec, design, y);
  const auto pred = reg.Predict(design);
  double sse = 0.0;
  const double mean = stats::Mean(y);
  double sst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sse += (y[i] - pred[i]) * (y[i] - pred[i]);
    sst += (y[i] - mean) * (y[i] - mean);
  }
  const double r2 = std::clamp(1.0 - sse / sst, 0.0, 1.0);
  return {std::move(reg), historical.surrogates.Schema(), std::move(covariates),
          options.include_covariates, historical.size(), r2, std::move(warnings)};
}

Json ToJson(const SurrogateModel& model) {
  Json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = "surrogate_index";
  j["surrogate_schema"] = SpecsToJson(model.surrogate_schema());
  j["covariate_schema"] = SpecsToJson(model.covariate_schema());
  j["include_covariates"] = model.include_covariates();
  j["n_train"] = model.n_train();
  j["r2"] = model.r2();
  j["warnings"] = model.warnings();
  j["model"] = ToJson(model.regressor());
  return j;
}

SurrogateModel SurrogateModelFromJson(const Json& j) {
  if (!j.is_object() || j.value("kind", std::string()) != "surrogate_index") {
    throw DataError("not a surrogate index model file");
  }
  try {
    return {RegressorFromJson(j.at("model")),
            SpecsFromJson(j.at("surrogate_schema")),
            SpecsFromJson(j.at("covariate_schema")),
            j.at("include_covariates").get<bool>(),
            j.at("n_train").get<std::size_t>(),
            j.at("r2").get<double>(),
            j.value("warnings", std::vector<std::string>{})};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("surrogate model JSON: ") + e.what());
  }
}

BiasBoundReport BiasBoundFromMoments(double var_y, double var_a, double r2_y_given_s,
                                     double r2_a_given_s) {
  if (!(var_a > 0.0)) throw NumericError("bias bound undefined: action variance is zero");
  if (var_y < 0.0) throw ArgumentError("bias bound: negative outcome variance");
  BiasBoundReport r;
  r.var_y = var_y;
  r.var_a = var_a;
  r.r2_y_given_s = std::clamp(r2_y_given_s, 0.0, 1.0);
  r.r2_a_given_s = std::clamp(r2_a_given_s, 0.0, 1.0);
  r.bound = std::sqrt(var_y / var_a * (1.0 - r.r2_y_given_s) * (1.0 - r.r2_a_given_s));
  return r;
}

double LinearR2(const Table& design, std::span<const double> y) {
  const double sst = stats::Variance(y) * static_cast<double>(y.size());
  if (sst == 0.0) return 0.0;
  const auto model = FitRegressor(LearnerSpec::Ridge(0.0), design, y);
  const auto pred = model.Predict(design);
  double sse = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sse += (y[i] - pred[i]) * (y[i] - pred[i]);
  return std::clamp(1.0 - sse / sst, 0.0, 1.0);
}

BiasBoundReport AteBiasBound(const HistoricalDataset& historical,
                             const ExperimentalDataset& experiment, bool include_covariates) {
  if (experiment.n_actions != 2) throw ArgumentError("bias bound requires a binary experiment");
  CheckSurrogateSchemas(historical, experiment);
  std::vector<double> a(experiment.actions.begin(), experiment.actions.end());
  const double var_a = stats::Variance(a);
  if (!(var_a > 0.0)) throw NumericError("bias bound undefined: every unit has the same action");
  const double var_y = stats::Variance(historical.outcomes);
  const double r2_y = LinearR2(
      SurrogateDesign(historical.features, historical.surrogates, include_covariates),
      historical.outcomes);
  const double r2_a =
      LinearR2(SurrogateDesign(experiment.features, experiment.surrogates, include_covariates), a);
  return BiasBoundFromMoments(var_y, var_a, r2_y, r2_a);
}

ShiftReport CovariateShiftReport(const Table& d1, const Table& d2) {
  ShiftReport report;
  if (d1.n_rows() == 0 || d2.n_rows() == 0) throw ArgumentError("shift report needs non-empty tables");
  for (std::size_t j = 0; j < d1.n_cols(); ++j) {
    const Column& c1 = d1.column(j);
    if (c1.kind() != ColumnKind::kFloat) continue;
    const auto k = d2.Find(c1.name());
    if (!k || d2.column(*k).kind() != ColumnKind::kFloat) continue;
    const Column& c2 = d2.column(*k);
    ShiftRow row;
    row.feature = c1.name();
    row.p025_d1 = stats::Quantile(c1.values(), 0.025);
    row.p975_d1 = stats::Quantile(c1.values(), 0.975);
    row.p025_d2 = stats::Quantile(c2.values(), 0.025);
    row.p975_d2 = stats::Quantile(c2.values(), 0.975);
    row.overlap = row.p025_d1 <= row.p975_d2 && row.p025_d2 <= row.p975_d1;
    report.rows.push_back(std::move(row));
  }
  if (report.rows.empty()) throw ArgumentError("shift report: the tables share no float columns");
  return report;
}

void WriteShiftReport(const ShiftReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  const std::vector<std::string> header{"feature", "p2.5_d1", "p97.5_d1", "p2.5_d2", "p97.5_d2", "overlap"};
  WriteCsvRow(out, header);
  for (const auto& r : report.rows) {
    const std::vector<std::string> cells{r.feature,          FormatDouble(r.p025_d1), FormatDouble(r.p975_d1),
                                         FormatDouble(r.p025_d2), FormatDouble(r.p975_d2),
                                         r.overlap ? "true" : "false"};
    WriteCsvRow(out, cells);
  }
}

}  // namespace longhorizon

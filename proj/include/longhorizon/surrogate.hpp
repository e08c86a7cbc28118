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

#ifndef LONGHORIZON_SURROGATE_HPP_
#define LONGHORIZON_SURROGATE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "longhorizon/data.hpp"
#include "longhorizon/learners.hpp"
#include "longhorizon/model_io.hpp"

namespace longhorizon {

struct SurrogateFitOptions {
  LearnerSpec spec = LearnerSpec::Ridge();
  // When non-empty, the spec is chosen from these by cross-validation.
  std::vector<LearnerSpec> candidates;
  int tuning_folds = 3;
  // Regress on (S, X); false regresses on S alone.
  bool include_covariates = true;
  std::uint64_t seed = 0;
};

// Fitted E[Y | S, X] used to impute long-term outcomes.
class SurrogateModel {
 public:
  SurrogateModel(FittedRegressor regressor, std::vector<ColumnSpec> surrogate_schema,
                 std::vector<ColumnSpec> covariate_schema, bool include_covariates,
                 std::size_t n_train, double r2, std::vector<std::string> warnings = {});

  const FittedRegressor& regressor() const { return regressor_; }
  const std::vector<ColumnSpec>& surrogate_schema() const { return surrogate_schema_; }
  const std::vector<ColumnSpec>& covariate_schema() const { return covariate_schema_; }
  bool include_covariates() const { return include_covariates_; }
  std::size_t n_train() const { return n_train_; }
  double r2() const { return r2_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  // Throws SchemaError listing every surrogate / covariate column that is
  // missing or of a different kind.
  std::vector<double> Impute(const ExperimentalDataset& experiment) const;
  std::vector<double> Impute(const Table& features, const Table& surrogates) const;

 private:
  FittedRegressor regressor_;
  std::vector<ColumnSpec> surrogate_schema_;
  std::vector<ColumnSpec> covariate_schema_;
  bool include_covariates_;
  std::size_t n_train_;
  double r2_;
  std::vector<std::string> warnings_;
};

// Design table of the surrogate regression: surrogate columns followed by
// the covariates (when included). Name collisions raise SchemaError.
Table SurrogateDesign(const Table& features, const Table& surrogates, bool include_covariates);

SurrogateModel FitSurrogateIndex(const HistoricalDataset& historical,
                                 const SurrogateFitOptions& options);

Json ToJson(const SurrogateModel& model);
SurrogateModel SurrogateModelFromJson(const Json& j);

struct BiasBoundReport {
  double var_y = 0.0;
  double var_a = 0.0;
  double r2_y_given_s = 0.0;
  double r2_a_given_s = 0.0;
  double bound = 0.0;
  bool linear_r2 = true;  // R^2 terms come from unpenalised linear fits
};

// sqrt(var_y / var_a * (1 - r2_y) * (1 - r2_a)).
BiasBoundReport BiasBoundFromMoments(double var_y, double var_a, double r2_y_given_s,
                                     double r2_a_given_s);

// Bound on the ATE bias of the surrogate index for a binary experiment.
// var_y and R^2(Y | S, X) come from the historical data, var_a and
// R^2(A | S, X) from the experiment; both regressions are linear.
BiasBoundReport AteBiasBound(const HistoricalDataset& historical,
                             const ExperimentalDataset& experiment,
                             bool include_covariates = true);

// In-sample R^2 of an unpenalised linear fit of `y` on `design`, clamped to
// [0, 1]. Zero-variance `y` gives 0.
double LinearR2(const Table& design, std::span<const double> y);

struct ShiftRow {
  std::string feature;
  double p025_d1 = 0.0;
  double p975_d1 = 0.0;
  double p025_d2 = 0.0;
  double p975_d2 = 0.0;
  bool overlap = true;
};

struct ShiftReport {
  std::vector<ShiftRow> rows;
};

// 2.5 / 97.5 percentile ranges of every float column shared by the tables.
ShiftReport CovariateShiftReport(const Table& d1, const Table& d2);
void WriteShiftReport(const ShiftReport& report, const std::filesystem::path& path);

}  // namespace longhorizon

#endif  // LONGHORIZON_SURROGATE_HPP_

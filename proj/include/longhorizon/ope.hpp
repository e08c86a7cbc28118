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

#ifndef LONGHORIZON_OPE_HPP_
#define LONGHORIZON_OPE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "longhorizon/data.hpp"
#include "longhorizon/learners.hpp"
#include "longhorizon/matrix.hpp"

namespace longhorizon {

// Per-unit action distribution of a policy evaluated on a dataset.
struct PolicySnapshot {
  enum class Kind { kDeterministic, kStochastic };

  Kind kind = Kind::kDeterministic;
  Matrix probs;  // N x K

  std::size_t size() const { return probs.rows(); }
  int n_actions() const { return static_cast<int>(probs.cols()); }

  static PolicySnapshot FromActions(std::span<const int> actions, int n_actions);
  static PolicySnapshot Constant(std::size_t n, int n_actions, int action);
  static PolicySnapshot Stochastic(Matrix probs);

  // Rows sum to 1 +- 1e-9 with entries in [0, 1]; deterministic rows are
  // one-hot. Throws ArgumentError.
  void Validate() const;
  // Argmax action per row (lowest on ties).
  std::vector<int> Actions() const;
};

enum class Estimator { kHt, kHajek, kDr };
std::string_view ToString(Estimator e);
Estimator ParseEstimator(std::string_view text);

struct ValueEstimate {
  Estimator estimator = Estimator::kDr;
  double point = 0.0;
  std::optional<double> std_error;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  double n_effective = 0.0;  // (sum w)^2 / sum w^2
  int replicates = 0;
  int dropped_replicates = 0;
  std::vector<std::string> warnings;
};

// (1/N) sum w_i y_i with w_i = target(A_i) / pi_D(A_i).
ValueEstimate ValueHt(const ExperimentalDataset& exp, std::span<const double> outcomes,
                      const PolicySnapshot& target);
// (sum w_i)^-1 sum w_i y_i. Throws NumericError when sum w_i = 0.
ValueEstimate ValueHajek(const ExperimentalDataset& exp, std::span<const double> outcomes,
                         const PolicySnapshot& target);
// (1/N) sum [sum_a target(a) mu(i, a) + w_i (y_i - mu(i, A_i))] with `mu`
// an N x K matrix of outcome-model predictions.
ValueEstimate ValueDr(const ExperimentalDataset& exp, std::span<const double> outcomes,
                      const PolicySnapshot& target, const Matrix& mu);

// Outcome regressions on (X, action) fitted fold by fold. `predictions`
// holds, for every unit and action, the prediction of the model that did not
// see that unit.
struct CrossFitOutcomeModel {
  FoldAssignment folds;
  std::vector<FittedRegressor> models;  // one per fold
  Matrix predictions;  // N x K, out of fold
  std::vector<std::string> warnings;

  // Fold-averaged predictions for new units.
  Matrix Predict(const Table& features, int n_actions) const;
};

// Name of the categorical action column appended to the features.
inline constexpr std::string_view kActionColumn = "__action";
// features plus `__action` = `action` for every row.
Table WithActionColumn(const Table& features, int action, int n_actions);
Table WithActionColumn(const Table& features, std::span<const int> actions, int n_actions);

CrossFitOutcomeModel FitCrossFitOutcomeModel(const ExperimentalDataset& exp,
                                             std::span<const double> outcomes,
                                             const LearnerSpec& spec, int n_folds,
                                             std::uint64_t seed);

ValueEstimate ValueDr(const ExperimentalDataset& exp, std::span<const double> outcomes,
                      const PolicySnapshot& target, const CrossFitOutcomeModel& mu);

struct BootstrapConfig {
  Estimator estimator = Estimator::kDr;
  int replicates = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

// Point estimate on the full data plus a percentile interval over
// unit-resampled replicates. For DR the outcome-model predictions are held
// fixed (`mu` may be null for HT / Hajek). Replicates without overlap are
// dropped and counted; the interval is widened to contain the point.
ValueEstimate BootstrapValue(const ExperimentalDataset& exp, std::span<const double> outcomes,
                             const PolicySnapshot& target, const Matrix* mu,
                             const BootstrapConfig& config);

// V(first) - V(second) on the same resamples.
ValueEstimate BootstrapValueDifference(const ExperimentalDataset& exp,
                                       std::span<const double> outcomes,
                                       const PolicySnapshot& first, const PolicySnapshot& second,
                                       const Matrix* mu, const BootstrapConfig& config);

enum class Estimand { kAte, kAtt };
std::string_view ToString(Estimand e);
Estimand ParseEstimand(std::string_view text);

// Inverse-propensity weighted difference in means between `treated` and
// `comparison` units. ATE weights are 1 / pi_D(own action); ATT weights are
// 1 for treated and pi_D(treated | X) / pi_D(comparison | X) for comparison
// units. Each group mean is normalised by its weight total. The standard
// error is the linearised sum of the two group variances, with a normal 95%
// interval.
ValueEstimate EstimateContrast(const ExperimentalDataset& exp, std::span<const double> outcomes,
                               int treated, int comparison, Estimand estimand);

// Same on raw arrays: `p_treated` / `p_comparison` are each unit's
// propensities for the two actions.
ValueEstimate EstimateContrast(std::span<const int> actions, std::span<const double> p_treated,
                               std::span<const double> p_comparison,
                               std::span<const double> outcomes, int treated, int comparison,
                               Estimand estimand);

}  // namespace longhorizon

#endif  // LONGHORIZON_OPE_HPP_

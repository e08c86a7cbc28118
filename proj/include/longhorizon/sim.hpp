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

#ifndef LONGHORIZON_SIM_HPP_
#define LONGHORIZON_SIM_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "longhorizon/data.hpp"
#include "longhorizon/explore.hpp"
#include "longhorizon/learners.hpp"
#include "longhorizon/matrix.hpp"
#include "longhorizon/ope.hpp"
#include "longhorizon/policy.hpp"

namespace longhorizon {

// structural: linear-Gaussian surrogates S(a) = g(X) + U + effect(X, a) + noise
//   with Y = h(S, X) + noise, any K.
// subscriber: monthly engagement / revenue panel with a discount that costs
//   revenue in the first months; surrogates are cumulative revenue and
//   consumption up to a horizon and Y is total revenue over all months. K = 2.
enum class DgpFamily { kStructural, kSubscriber };
enum class EffectProfile { kBimodalGap, kContinuousNearZero };
enum class DesignKind { kCovariate, kUniform };
enum class SurrogateSet { kBoth, kRevenue, kConsumption };

std::string_view ToString(DgpFamily v);
std::string_view ToString(EffectProfile v);
std::string_view ToString(DesignKind v);
std::string_view ToString(SurrogateSet v);
DgpFamily ParseDgpFamily(std::string_view text);
EffectProfile ParseEffectProfile(std::string_view text);
DesignKind ParseDesignKind(std::string_view text);
SurrogateSet ParseSurrogateSet(std::string_view text);

struct DgpConfig {
  DgpFamily family = DgpFamily::kStructural;
  std::size_t n_units = 20000;
  std::size_t n_historical = 20000;
  int k_actions = 2;
  int dim_x = 4;  // float covariates x0..; a categorical `segment` is added
  int dim_s = 3;  // structural only
  EffectProfile effect_profile = EffectProfile::kBimodalGap;
  double min_gap = 1.0;  // smallest |CATE| under the bimodal profile
  double surrogacy_violation = 0.0;  // direct A -> Y effect (subtracted when treated)
  double confounder_strength = 0.5;  // loading of the latent U
  double comparability_drift = 0.0;  // historical Y gains drift * (first surrogate)
  double noise_s = 1.0;
  double noise_y = 1.0;
  DesignKind design = DesignKind::kCovariate;
  bool nonlinear_outcome = false;  // structural: Y gains 0.5 * max(0, S0)
  // subscriber panel
  int n_periods = 36;
  int discount_periods = 6;
  double discount_cost = 1.0;  // monthly revenue given up while discounted
  int horizon = 6;
  SurrogateSet surrogate_set = SurrogateSet::kBoth;
  std::uint64_t seed = 0;
  // Draws the structural coefficients from this seed instead of `seed`, so
  // Monte-Carlo replications can share one DGP while drawing fresh units.
  std::optional<std::uint64_t> coefficient_seed;

  void Validate() const;
};

// Coefficients drawn for the structural family.
struct StructuralCoefficients {
  Matrix base;  // dim_s x dim_x
  std::vector<double> kink;  // per surrogate, weight of max(0, x_j)
  Matrix segment_s;  // dim_s x 3
  std::vector<double> loading;  // lambda, per surrogate
  std::vector<double> beta;  // Y on S
  std::vector<double> effect_direction;  // beta / |beta|^2
  std::vector<double> theta;  // Y on X
  std::vector<double> segment_y;  // per segment level
  std::vector<double> thresholds;  // per action a >= 1 (index a - 1)
  Matrix design_weights;  // K x dim_x, multi-action design logits
};

struct SimData {
  DgpConfig config;
  HistoricalDataset historical;
  ExperimentalDataset experiment;
  std::vector<double> outcomes;  // realised Y of the experiment
  std::vector<double> proxy;  // subscriber: cumulative revenue at the horizon
  Matrix potential_outcomes;  // N x K
  std::vector<Matrix> potential_surrogates;  // K matrices, N x dim_s
  Matrix oracle_index;  // N x K, historical E[Y | S(a), X]
  Matrix oracle_cates;  // N x K, Y(a) - Y(0)
  std::vector<int> oracle_policy;  // argmax_a Y(a), lowest on ties
  std::vector<double> design_treat_probability;  // K = 2: pi_D(1 | X)
  StructuralCoefficients coefficients;  // structural only
};

SimData Generate(const DgpConfig& config);

// (1/N) sum_i sum_a pi(a | X_i) Y_i(a).
double TruePolicyValue(const SimData& sim, const PolicySnapshot& target);

// Per-unit bound on the CATE bias of the surrogate index,
//   sqrt(var(Y | X) / var(A | X) * (1 - R2(Y | S, X)) * (1 - R2(A | S, X))),
// from the closed-form conditional moments of a linear structural DGP with
// K = 2. R^2 terms are those of linear projections within X.
std::vector<double> ConditionalBiasBounds(const SimData& sim);

// unit_id, y_a0..y_a{K-1}, oracle_action
void WriteGroundTruth(const SimData& sim, const std::filesystem::path& path);

// ---- Churn simulations --------------------------------------------------------

struct ChurnPanel {
  std::vector<double> risk;  // model churn probability
  std::vector<double> churn;  // realised Y(0) in {0, 1}
};

// Synthetic risk scores (mean about 0.2) with Bernoulli churn outcomes.
ChurnPanel SyntheticChurnPanel(std::size_t n, std::uint64_t seed);

struct PowerConfig {
  double q = 0.01;  // fraction targeted
  double tau_effect = 0.1;  // probability a churner is retained by treatment
  int n_reps = 100;
  double alpha = 0.05;
  DesignKind assignment = DesignKind::kCovariate;
  DesignPolicyConfig design;  // tau is recalibrated so the mean treat probability is q

  void Validate() const;
};

struct PowerCell {
  double q = 0.0;
  double tau_effect = 0.0;
  DesignKind assignment = DesignKind::kCovariate;
  double power = 0.0;
  int n_reps = 0;
  int n_significant = 0;
  double mean_estimate = 0.0;  // mean IPW ATT over reps
  double mean_true_att = 0.0;
  double mean_treated_fraction = 0.0;
};

// Y(1): zeros stay 0, ones become 0 with probability tau_effect. Every rep
// draws Y(1) and the assignment, estimates the IPW ATT and counts two-sided
// z-tests significant at alpha. Reps use common random numbers across
// tau_effect values, so power curves are monotone in expectation and in
// practice.
PowerCell PowerSimulation(std::span<const double> base_outcomes, std::span<const double> risk,
                          const PowerConfig& config, std::uint64_t seed);

std::vector<PowerCell> PowerGrid(std::span<const double> base_outcomes, std::span<const double> risk,
                                 std::span<const double> taus, const PowerConfig& config,
                                 std::uint64_t seed);

// Threshold t with mean_i min(cap, Phi((risk_i - t) / sigma)) = q.
double CalibrateDesignThreshold(std::span<const double> risk, double q, double sigma, double cap);

struct DesignVsUniformReport {
  double q_negative = 0.0;
  int n_reps = 0;
  double treat_fraction = 0.0;
  std::vector<double> churn_design;  // per rep, mean realised churn risk
  std::vector<double> churn_uniform;
  std::vector<double> ate_error_design;  // per rep, estimate - schedule ATE
  std::vector<double> ate_error_uniform;
  std::vector<double> true_ate;
  double median_churn_design = 0.0;
  double median_churn_uniform = 0.0;
  double mean_error_design = 0.0;
  double se_error_design = 0.0;
  double mean_error_uniform = 0.0;
  double se_error_uniform = 0.0;
  double mean_treated_design = 0.0;
  double mean_treated_uniform = 0.0;
};

// Y(0) = risk; Y(1) ~ U(0, Y(0)), or U(Y(0), 1) with probability q_negative.
// The design arm treats with probability proportional to risk, the uniform
// arm with a constant probability; both treat `treat_fraction` in
// expectation. ATE estimates are Hajek IPW.
DesignVsUniformReport DesignVsUniform(std::span<const double> risk, double q_negative, int n_reps,
                                      std::uint64_t seed, double treat_fraction = 0.01);

// ---- Validation experiment -------------------------------------------------------

struct ValidationOptions {
  LearnerSpec surrogate_model = LearnerSpec::Ridge();
  PolicyPipelineConfig pipeline;
  double test_fraction = 0.2;
  int bootstrap = 200;
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct ValidationRow {
  int horizon = 0;
  SurrogateSet surrogate_set = SurrogateSet::kBoth;
  bool identity_index = false;  // surrogate is the outcome itself
  // (a) ATT of the first non-control action, on the surrogate index and on Y
  ValueEstimate att_index;
  ValueEstimate att_true;
  // (b), (c) oracle value gains over treating no one, and DR estimates of the
  // same gains on the test split using the imputed outcome
  double value_status_quo = 0.0;
  double value_index_policy = 0.0;
  double value_proxy_policy = 0.0;
  double value_true_policy = 0.0;
  double value_oracle_policy = 0.0;
  ValueEstimate gain_index_policy;
  ValueEstimate gain_proxy_policy;
  // (d) index policy minus Y policy, DR on true Y over the test split
  ValueEstimate index_minus_true;
  double agreement = 0.0;  // share of test units with the same action
};

struct ValidationReport {
  std::vector<ValidationRow> rows;  // horizons x surrogate sets
};

// For every horizon and surrogate set: regenerate the subscriber panel with
// the same seed, fit the surrogate index on the historical panel, learn
// policies on the training split from the index, from Y and from the raw
// cumulative-revenue proxy, and compare them on the test split.
ValidationReport ValidationExperiment(const DgpConfig& config, std::span<const int> horizons,
                                      std::span<const SurrogateSet> sets,
                                      const ValidationOptions& options);

// panel_a_att.csv, panel_b_index_policy.csv, panel_c_proxy_policy.csv,
// panel_d_index_vs_true.csv, panel_e_surrogate_sets.csv
std::vector<std::filesystem::path> WriteValidationReport(const ValidationReport& report,
                                                         const std::filesystem::path& dir);

}  // namespace longhorizon

#endif  // LONGHORIZON_SIM_HPP_

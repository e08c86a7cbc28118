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

#ifndef LONGHORIZON_POLICY_HPP_
#define LONGHORIZON_POLICY_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "longhorizon/data.hpp"
#include "longhorizon/learners.hpp"
#include "longhorizon/matrix.hpp"
#include "longhorizon/model_io.hpp"
#include "longhorizon/ope.hpp"

namespace longhorizon {

struct DrScoreMatrix {
  Matrix scores;  // N x K, gamma_a(X_i)
  FoldAssignment folds;
  int n_actions = 2;
};

// gamma_a(X_i) = mu(i, a) + 1{A_i = a} (y_i - mu(i, a)) / pi_D(a | X_i).
DrScoreMatrix DrScores(const ExperimentalDataset& exp, std::span<const double> outcomes,
                       const CrossFitOutcomeModel& mu);
DrScoreMatrix DrScores(const ExperimentalDataset& exp, std::span<const double> outcomes,
                       const Matrix& mu);

struct CateEstimate {
  Matrix raw;  // N x K, raw(i, a) = gamma_a - gamma_0; column 0 is zero
  Matrix smoothed;  // same layout, empty unless a smoother was given
};

// Raw score differences against the control; with a smoother, each column
// a >= 1 is also regressed on `features` and the fitted values returned.
CateEstimate Cate(const DrScoreMatrix& scores, const Table* features = nullptr,
                  const std::optional<LearnerSpec>& smoother = std::nullopt);

// Binary classifier for one action pair: label 1 means `second` wins.
struct PairClassifier {
  int first = 0;
  int second = 1;
  FittedClassifier classifier;
};

class Policy {
 public:
  enum class Kind { kConstant, kDeterministicClassifier, kStochasticTable };

  static Policy ConstantAction(int n_actions, int action);
  static Policy Classifier(int n_actions, FeatureSchema schema, std::vector<PairClassifier> pairs);
  // Rows keyed by the values of `key_columns`; every profile seen at
  // assignment time must be present in the table.
  static Policy StochasticTable(int n_actions, std::vector<ColumnSpec> key_columns,
                                std::map<std::string, std::vector<double>> rows);

  Kind kind() const { return kind_; }
  int n_actions() const { return n_actions_; }
  std::optional<int> constant_action() const { return constant_action_; }
  const FeatureSchema& schema() const { return schema_; }
  const std::vector<PairClassifier>& pairs() const { return pairs_; }
  const std::vector<ColumnSpec>& key_columns() const { return key_columns_; }
  const std::map<std::string, std::vector<double>>& table() const { return table_; }

  // Pairwise-vote winner per row; ties go to the lowest action id.
  std::vector<int> Actions(const Table& features) const;
  PolicySnapshot Assign(const Table& features) const;

  // Key of row i for stochastic tables.
  static std::string ProfileKey(const Table& features, std::span<const ColumnSpec> keys,
                                std::size_t i);

 private:
  Kind kind_ = Kind::kConstant;
  int n_actions_ = 2;
  std::optional<int> constant_action_;
  FeatureSchema schema_;
  std::vector<PairClassifier> pairs_;
  std::vector<ColumnSpec> key_columns_;
  std::map<std::string, std::vector<double>> table_;
};

struct PolicyFit {
  Policy policy = Policy::ConstantAction(2, 0);
  double objective = 0.0;  // mean DR score of the chosen actions
  double classifier_objective = 0.0;
  std::vector<double> constant_objectives;  // per action
  bool fell_back_to_constant = false;
  std::vector<std::string> warnings;
};

// Weighted binary classification on label 1{gamma_1 > gamma_0} with weight
// |gamma_1 - gamma_0|. Requires K = 2.
PolicyFit LearnPolicyBinary(const DrScoreMatrix& scores, const Table& features,
                            const LearnerSpec& classifier);
// One weighted classifier per action pair and a majority vote. K = 2 gives
// exactly LearnPolicyBinary.
PolicyFit LearnPolicyMulti(const DrScoreMatrix& scores, const Table& features,
                           const LearnerSpec& classifier);

PolicySnapshot PolicyAssign(const Policy& policy, const Table& features);

struct RegretReport {
  double mean_regret = 0.0;
  double disagreement_rate = 0.0;
  std::vector<double> loss;  // per unit, zero where actions agree
};

// `oracle_cates` is N x K with column 0 the control (zero); the loss of unit i
// is cate(i, oracle) - cate(i, policy).
RegretReport Regret(const Matrix& oracle_cates, std::span<const int> policy_actions,
                    std::span<const int> oracle_actions);

// Scores -> policy procedure reused by the CLI and the bootstrap replicates.
struct PolicyPipelineConfig {
  LearnerSpec outcome_model = LearnerSpec::Ridge();
  std::vector<std::string> outcome_features;  // empty = all
  int n_folds = 3;
  LearnerSpec classifier = LearnerSpec::Cart(2);
  std::vector<std::string> policy_features;  // empty = all
  std::uint64_t seed = 0;
};

struct PolicyPipelineResult {
  CrossFitOutcomeModel outcome_model;
  DrScoreMatrix scores;
  PolicyFit fit;
};

PolicyPipelineResult FitPolicyPipeline(const ExperimentalDataset& exp,
                                       std::span<const double> outcomes,
                                       const PolicyPipelineConfig& config);

// Columns of `features` named in `names` (all when empty).
Table SelectFeatures(const Table& features, const std::vector<std::string>& names);

Json ToJson(const Policy& policy);
Policy PolicyFromJson(const Json& j);

}  // namespace longhorizon

#endif  // LONGHORIZON_POLICY_HPP_

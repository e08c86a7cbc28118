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

#include "longhorizon/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "longhorizon/error.hpp"
#include "longhorizon/kernels.hpp"
#include "longhorizon/parallel.hpp"
#include "longhorizon/rng.hpp"

namespace longhorizon {

// ---- Scores ---------------------------------------------------------------

DrScoreMatrix DrScores(const ExperimentalDataset& exp, std::span<const double> outcomes,
                       const Matrix& mu) {
  const std::size_t n = exp.size();
  const auto k = static_cast<std::size_t>(exp.n_actions);
  if (outcomes.size() != n) throw ArgumentError("outcomes length does not match the experiment");
  if (mu.rows() != n || mu.cols() != k) throw ArgumentError("outcome-model predictions must be N x K");
  for (std::size_t i = 0; i < n; ++i) {
    const int a = exp.actions[i];
    if (a < 0 || static_cast<std::size_t>(a) >= k) throw DataError("action out of range at row " + std::to_string(i));
    if (!(exp.propensity(i, a) > 0.0)) {
      throw PositivityError("design propensity of the observed action is not positive at row " +
                            std::to_string(i));
    }
  }
  DrScoreMatrix out;
  out.n_actions = exp.n_actions;
  out.scores = Matrix(n, k);
  kernels::EstimatorInputs in;
  in.actions = exp.actions;
  in.propensities = &exp.propensities;
  in.outcomes = outcomes;
  in.mu = &mu;
  kernels::parallel::DrScores(in, out.scores);
  for (double v : out.scores.data()) {
    if (!std::isfinite(v)) throw NumericError("non-finite DR score");
  }
  return out;
}

DrScoreMatrix DrScores(const ExperimentalDataset& exp, std::span<const double> outcomes,
                       const CrossFitOutcomeModel& mu) {
  DrScoreMatrix out = DrScores(exp, outcomes, mu.predictions);
  out.folds = mu.folds;
  return out;
}

CateEstimate Cate(const DrScoreMatrix& scores, const Table* features,
                  const std::optional<LearnerSpec>& smoother) {
  if (scores.n_actions < 2) throw ArgumentError("CATE needs at least two actions");
  const std::size_t n = scores.scores.rows();
  const auto k = static_cast<std::size_t>(scores.n_actions);
  CateEstimate out;
  out.raw = Matrix(n, k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 1; a < k; ++a) out.raw(i, a) = scores.scores(i, a) - scores.scores(i, 0);
  }
  if (smoother) {
    if (features == nullptr || features->n_rows() != n) {
      throw ArgumentError("CATE smoothing needs a feature table aligned with the scores");
    }
    out.smoothed = Matrix(n, k, 0.0);
    for (std::size_t a = 1; a < k; ++a) {
      std::vector<double> target(n);
      for (std::size_t i = 0; i < n; ++i) target[i] = out.raw(i, a);
      const auto pred = FitRegressor(*smoother, *features, target).Predict(*features);
      for (std::size_t i = 0; i < n; ++i) out.smoothed(i, a) = pred[i];
    }
  }
  return out;
}

// ---- Policy -----------------------------------------------------------------

Policy Policy::ConstantAction(int n_actions, int action) {
  if (n_actions < 1 || action < 0 || action >= n_actions) {
    throw ArgumentError("constant policy action outside the action set");
  }
  Policy p;
  p.kind_ = Kind::kConstant;
  p.n_actions_ = n_actions;
  p.constant_action_ = action;
  return p;
}

Policy Policy::Classifier(int n_actions, FeatureSchema schema, std::vector<PairClassifier> pairs) {
  const auto expected = static_cast<std::size_t>(n_actions * (n_actions - 1) / 2);
  if (pairs.size() != expected) throw ArgumentError("classifier policy needs one classifier per action pair");
  Policy p;
  p.kind_ = Kind::kDeterministicClassifier;
  p.n_actions_ = n_actions;
  p.schema_ = std::move(schema);
  p.pairs_ = std::move(pairs);
  return p;
}

Policy Policy::StochasticTable(int n_actions, std::vector<ColumnSpec> key_columns,
                               std::map<std::string, std::vector<double>> rows) {
  for (const auto& [key, probs] : rows) {
    if (probs.size() != static_cast<std::size_t>(n_actions)) {
      throw ArgumentError("stochastic policy row '" + key + "' has the wrong length");
    }
    double sum = 0.0;
    for (double v : probs) {
      if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("stochastic policy probability outside [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("stochastic policy row '" + key + "' does not sum to 1");
  }
  Policy p;
  p.kind_ = Kind::kStochasticTable;
  p.n_actions_ = n_actions;
  p.key_columns_ = std::move(key_columns);
  p.table_ = std::move(rows);
  return p;
}

std::string Policy::ProfileKey(const Table& features, std::span<const ColumnSpec> keys, std::size_t i) {
  std::string key;
  for (std::size_t j = 0; j < keys.size(); ++j) {
    if (j > 0) key += '\x1f';
    key += features.column(keys[j].name).FormatCell(i);
  }
  return key;
}

std::vector<int> Policy::Actions(const Table& features) const {
  const std::size_t n = features.n_rows();
  switch (kind_) {
    case Kind::kConstant:
      return std::vector<int>(n, *constant_action_);
    case Kind::kStochasticTable:
      return Assign(features).Actions();
    case Kind::kDeterministicClassifier:
      break;
  }
  schema_.Check(features);
  const auto k = static_cast<std::size_t>(n_actions_);
  std::vector<int> votes(n * k, 0);
  for (const auto& pc : pairs_) {
    const auto winners = pc.classifier.Predict(features);
    for (std::size_t i = 0; i < n; ++i) {
      const int w = winners[i] == 1 ? pc.second : pc.first;
      ++votes[i * k + static_cast<std::size_t>(w)];
    }
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < k; ++a) {
      if (votes[i * k + a] > votes[i * k + best]) best = a;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

PolicySnapshot Policy::Assign(const Table& features) const {
  if (kind_ != Kind::kStochasticTable) return PolicySnapshot::FromActions(Actions(features), n_actions_);
  for (const auto& spec : key_columns_) {
    if (!features.Has(spec.name)) throw SchemaError("missing column '" + spec.name + "'");
  }
  Matrix probs(features.n_rows(), static_cast<std::size_t>(n_actions_));
  for (std::size_t i = 0; i < features.n_rows(); ++i) {
    const auto key = ProfileKey(features, key_columns_, i);
    const auto it = table_.find(key);
    if (it == table_.end()) throw DataError("stochastic policy has no row for profile at row " + std::to_string(i));
    std::copy(it->second.begin(), it->second.end(), probs.row(i).begin());
  }
  return PolicySnapshot::Stochastic(std::move(probs));
}

PolicySnapshot PolicyAssign(const Policy& policy, const Table& features) {
  return policy.Assign(features);
}

// ---- Learning ---------------------------------------------------------------

namespace {

double MeanAssignedScore(const Matrix& scores, std::span<const int> actions) {
  double s = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) s += scores(i, static_cast<std::size_t>(actions[i]));
  return s / static_cast<double>(actions.size());
}

PolicyFit LearnPairwise(const DrScoreMatrix& scores, const Table& features, const LearnerSpec& classifier) {
  const int k = scores.n_actions;
  const std::size_t n = scores.scores.rows();
  if (k < 2) throw ArgumentError("policy learning needs at least two actions");
  if (features.n_rows() != n) throw ArgumentError("features and scores differ in length");
  if (n == 0) throw ArgumentError("policy learning on empty data");
  PolicyFit fit;
  for (int a = 0; a < k; ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += scores.scores(i, static_cast<std::size_t>(a));
    fit.constant_objectives.push_back(s / static_cast<double>(n));
  }
  const int best_constant = static_cast<int>(
      std::max_element(fit.constant_objectives.begin(), fit.constant_objectives.end()) -
      fit.constant_objectives.begin());

  bool any_gap = false;
  for (std::size_t i = 0; i < n && !any_gap; ++i) {
    for (int a = 1; a < k; ++a) {
      if (scores.scores(i, static_cast<std::size_t>(a)) != scores.scores(i, 0)) any_gap = true;
    }
  }
  if (!any_gap) {
    fit.policy = Policy::ConstantAction(k, 0);
    fit.objective = fit.constant_objectives[0];
    fit.classifier_objective = fit.objective;
    fit.fell_back_to_constant = true;
    fit.warnings.emplace_back("every score gap is zero; returning the control-only policy");
    return fit;
  }

  std::vector<std::pair<int, int>> pair_ids;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) pair_ids.emplace_back(a, b);
  std::vector<std::optional<FittedClassifier>> fitted(pair_ids.size());
  parallel::ForEach(pair_ids.size(), [&](std::size_t p) {
    const auto [a, b] = pair_ids[p];
    std::vector<int> labels(n);
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double gap = scores.scores(i, static_cast<std::size_t>(b)) - scores.scores(i, static_cast<std::size_t>(a));
      labels[i] = gap > 0.0 ? 1 : 0;
      weights[i] = std::abs(gap);
    }
    LearnerSpec spec = classifier;
    spec.seed = DeriveSeed(classifier.seed, p);
    fitted[p].emplace(FitClassifier(spec, features, labels, weights));
  });
  std::vector<PairClassifier> pairs;
  for (std::size_t p = 0; p < pair_ids.size(); ++p) {
    for (const auto& w : fitted[p]->warnings()) {
      fit.warnings.push_back("pair (" + std::to_string(pair_ids[p].first) + ", " +
                             std::to_string(pair_ids[p].second) + "): " + w);
    }
    pairs.push_back({pair_ids[p].first, pair_ids[p].second, std::move(*fitted[p])});
  }
  Policy learned = Policy::Classifier(k, FeatureSchema::FromTable(features), std::move(pairs));
  const auto actions = learned.Actions(features);
  fit.classifier_objective = MeanAssignedScore(scores.scores, actions);
  const double best = fit.constant_objectives[static_cast<std::size_t>(best_constant)];
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  if (fit.classifier_objective > best + tol) {
    fit.policy = std::move(learned);
    fit.objective = fit.classifier_objective;
  } else {
    fit.policy = Policy::ConstantAction(k, best_constant);
    fit.objective = best;
    fit.fell_back_to_constant = true;
    fit.warnings.push_back("classifier does not beat the best constant policy; using action " +
                           std::to_string(best_constant) + " for every unit");
  }
  return fit;
}

}  // namespace

PolicyFit LearnPolicyBinary(const DrScoreMatrix& scores, const Table& features,
                            const LearnerSpec& classifier) {
  if (scores.n_actions != 2) throw ArgumentError("binary policy learning needs exactly two actions");
  return LearnPairwise(scores, features, classifier);
}

PolicyFit LearnPolicyMulti(const DrScoreMatrix& scores, const Table& features,
                           const LearnerSpec& classifier) {
  return LearnPairwise(scores, features, classifier);
}

RegretReport Regret(const Matrix& oracle_cates, std::span<const int> policy_actions,
                    std::span<const int> oracle_actions) {
  const std::size_t n = oracle_cates.rows();
  if (policy_actions.size() != n || oracle_actions.size() != n) {
    throw ArgumentError("regret inputs differ in length");
  }
  if (n == 0) throw ArgumentError("regret on empty data");
  RegretReport r;
  r.loss.assign(n, 0.0);
  std::size_t disagree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int p = policy_actions[i];
    const int o = oracle_actions[i];
    if (p < 0 || o < 0 || static_cast<std::size_t>(p) >= oracle_cates.cols() ||
        static_cast<std::size_t>(o) >= oracle_cates.cols()) {
      throw ArgumentError("regret: action outside the action set");
    }
    if (p == o) continue;
    ++disagree;
    r.loss[i] = oracle_cates(i, static_cast<std::size_t>(o)) - oracle_cates(i, static_cast<std::size_t>(p));
  }
  r.mean_regret = std::accumulate(r.loss.begin(), r.loss.end(), 0.0) / static_cast<double>(n);
  r.disagreement_rate = static_cast<double>(disagree) / static_cast<double>(n);
  return r;
}

Table SelectFeatures(const Table& features, const std::vector<std::string>& names) {
  if (names.empty()) return features;
  return features.Select(names);
}

PolicyPipelineResult FitPolicyPipeline(const ExperimentalDataset& exp, std::span<const double> outcomes,
                                       const PolicyPipelineConfig& config) {
  ExperimentalDataset outcome_view = exp;
  outcome_view.features = SelectFeatures(exp.features, config.outcome_features);
  auto mu = FitCrossFitOutcomeModel(outcome_view, outcomes, config.outcome_model, config.n_folds,
                                    DeriveSeed(config.seed, "outcome-model"));
  auto scores = DrScores(exp, outcomes, mu);
  LearnerSpec classifier = config.classifier;
  classifier.seed = DeriveSeed(config.seed, "policy-classifier");
  auto fit = LearnPolicyMulti(scores, SelectFeatures(exp.features, config.policy_features), classifier);
  for (const auto& w : mu.warnings) fit.warnings.push_back(w);
  return {std::move(mu), std::move(scores), std::move(fit)};
}

// ---- Persistence --------------------------------------------------------------

Json ToJson(const Policy& policy) {
  Json j;
  j["format_version"] = kModelFormatVersion;
  std::vector<int> action_set(static_cast<std::size_t>(policy.n_actions()));
  std::iota(action_set.begin(), action_set.end(), 0);
  switch (policy.kind()) {
    case Policy::Kind::kConstant:
      j["kind"] = "constant";
      j["action_set"] = action_set;
      j["constant_action"] = *policy.constant_action();
      break;
    case Policy::Kind::kDeterministicClassifier: {
      j["kind"] = "deterministic_classifier";
      j["action_set"] = action_set;
      Json pairs = Json::array();
      for (const auto& pc : policy.pairs()) {
        pairs.push_back({{"first", pc.first}, {"second", pc.second}, {"model", ToJson(pc.classifier)}});
      }
      j["classifier"] = pairs;
      j["feature_schema"] = ToJson(policy.schema());
      break;
    }
    case Policy::Kind::kStochasticTable: {
      j["kind"] = "stochastic_table";
      j["action_set"] = action_set;
      Json keys = Json::array();
      for (const auto& s : policy.key_columns()) keys.push_back({{"name", s.name}, {"kind", std::string(ToString(s.kind))}});
      j["key_columns"] = keys;
      Json rows = Json::array();
      for (const auto& [key, probs] : policy.table()) rows.push_back({{"key", key}, {"probs", probs}});
      j["rows"] = rows;
      break;
    }
  }
  j["tie_rule"] = "lowest_action";
  return j;
}

Policy PolicyFromJson(const Json& j) {
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion) throw DataError("unsupported policy format_version");
    const auto kind = j.at("kind").get<std::string>();
    const int k = static_cast<int>(j.at("action_set").size());
    if (kind == "constant") return Policy::ConstantAction(k, j.at("constant_action").get<int>());
    if (kind == "deterministic_classifier") {
      std::vector<PairClassifier> pairs;
      for (const auto& pc : j.at("classifier")) {
        pairs.push_back({pc.at("first").get<int>(), pc.at("second").get<int>(), ClassifierFromJson(pc.at("model"))});
      }
      return Policy::Classifier(k, FeatureSchemaFromJson(j.at("feature_schema")), std::move(pairs));
    }
    if (kind == "stochastic_table") {
      std::vector<ColumnSpec> keys;
      for (const auto& s : j.at("key_columns")) {
        keys.push_back({s.at("name").get<std::string>(), ParseColumnKind(s.at("kind").get<std::string>())});
      }
      std::map<std::string, std::vector<double>> rows;
      for (const auto& r : j.at("rows")) rows[r.at("key").get<std::string>()] = r.at("probs").get<std::vector<double>>();
      return Policy::StochasticTable(k, std::move(keys), std::move(rows));
    }
    throw DataError("unknown policy kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("policy JSON: ") + e.what());
  }
}

}  // namespace longhorizon

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

#include "longhorizon/ope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "longhorizon/error.hpp"
#include "longhorizon/kernels.hpp"
#include "longhorizon/parallel.hpp"
#include "longhorizon/rng.hpp"
#include "longhorizon/stats.hpp"

namespace longhorizon {

// ---- PolicySnapshot --------------------------------------------------------

PolicySnapshot PolicySnapshot::FromActions(std::span<const int> actions, int n_actions) {
  PolicySnapshot s;
  s.kind = Kind::kDeterministic;
  s.probs = Matrix(actions.size(), static_cast<std::size_t>(n_actions), 0.0);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 0 || actions[i] >= n_actions) {
      throw ArgumentError("action " + std::to_string(actions[i]) + " outside 0.." +
                          std::to_string(n_actions - 1));
    }
    s.probs(i, static_cast<std::size_t>(actions[i])) = 1.0;
  }
  return s;
}

PolicySnapshot PolicySnapshot::Constant(std::size_t n, int n_actions, int action) {
  return FromActions(std::vector<int>(n, action), n_actions);
}

PolicySnapshot PolicySnapshot::Stochastic(Matrix probs) {
  PolicySnapshot s;
  s.kind = Kind::kStochastic;
  s.probs = std::move(probs);
  s.Validate();
  return s;
}

void PolicySnapshot::Validate() const {
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double sum = 0.0;
    int ones = 0;
    for (double p : probs.row(i)) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ArgumentError("policy probability outside [0, 1] at row " + std::to_string(i));
      }
      sum += p;
      if (p == 1.0) ++ones;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ArgumentError("policy probabilities at row " + std::to_string(i) + " sum to " +
                          std::to_string(sum));
    }
    if (kind == Kind::kDeterministic && ones != 1) {
      throw ArgumentError("deterministic policy row " + std::to_string(i) + " is not one-hot");
    }
  }
}

std::vector<int> PolicySnapshot::Actions() const {
  std::vector<int> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < probs.cols(); ++a) {
      if (probs(i, a) > probs(i, best)) best = a;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::string_view ToString(Estimator e) {
  switch (e) {
    case Estimator::kHt:
      return "ht";
    case Estimator::kHajek:
      return "hajek";
    case Estimator::kDr:
      return "dr";
  }
  return "dr";
}

Estimator ParseEstimator(std::string_view text) {
  if (text == "ht") return Estimator::kHt;
  if (text == "hajek") return Estimator::kHajek;
  if (text == "dr") return Estimator::kDr;
  throw ArgumentError("unknown estimator '" + std::string(text) + "' (expected ht, hajek or dr)");
}

std::string_view ToString(Estimand e) { return e == Estimand::kAte ? "ate" : "att"; }

Estimand ParseEstimand(std::string_view text) {
  if (text == "ate") return Estimand::kAte;
  if (text == "att") return Estimand::kAtt;
  throw ArgumentError("unknown estimand '" + std::string(text) + "' (expected ate or att)");
}

// ---- Point estimators -------------------------------------------------------

namespace {

void CheckInputs(const ExperimentalDataset& exp, std::span<const double> outcomes,
                 const PolicySnapshot& target, const Matrix* mu) {
  const std::size_t n = exp.size();
  const auto k = static_cast<std::size_t>(exp.n_actions);
  if (outcomes.size() != n) throw ArgumentError("outcomes length does not match the experiment");
  if (exp.propensities.rows() != n || exp.propensities.cols() != k) {
    throw ArgumentError("propensity matrix must be N x K");
  }
  if (target.probs.rows() != n || target.probs.cols() != k) {
    throw ArgumentError("target policy snapshot must be N x K");
  }
  if (mu != nullptr && (mu->rows() != n || mu->cols() != k)) {
    throw ArgumentError("outcome-model predictions must be N x K");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int a = exp.actions[i];
    if (a < 0 || static_cast<std::size_t>(a) >= k) {
      throw DataError("action " + std::to_string(a) + " out of range at row " + std::to_string(i));
    }
    const double p = exp.propensities(i, static_cast<std::size_t>(a));
    if (!(p > 0.0)) {
      throw PositivityError("design propensity of the observed action is " + std::to_string(p) +
                            " at row " + std::to_string(i));
    }
    if (!std::isfinite(outcomes[i])) throw DataError("non-finite outcome at row " + std::to_string(i));
  }
}

kernels::EstimatorInputs Inputs(const ExperimentalDataset& exp, std::span<const double> outcomes,
                                const PolicySnapshot& target, const Matrix* mu) {
  kernels::EstimatorInputs in;
  in.actions = exp.actions;
  in.propensities = &exp.propensities;
  in.target = &target.probs;
  in.outcomes = outcomes;
  in.mu = mu;
  return in;
}

double EffectiveN(const kernels::EstimatorSums& s) {
  return s.sum_w2 > 0.0 ? s.sum_w * s.sum_w / s.sum_w2 : 0.0;
}

// Estimate from sums; NaN when undefined (Hajek without overlap).
double FromSums(Estimator e, const kernels::EstimatorSums& s) {
  const auto n = static_cast<double>(s.n);
  switch (e) {
    case Estimator::kHt:
      return s.sum_wy / n;
    case Estimator::kHajek:
      return s.sum_w > 0.0 ? s.sum_wy / s.sum_w : std::numeric_limits<double>::quiet_NaN();
    case Estimator::kDr:
      return s.sum_dr / n;
  }
  return 0.0;
}

ValueEstimate PointEstimate(Estimator e, const ExperimentalDataset& exp,
                            std::span<const double> outcomes, const PolicySnapshot& target,
                            const Matrix* mu) {
  CheckInputs(exp, outcomes, target, mu);
  if (exp.size() == 0) throw ArgumentError("cannot estimate a value on an empty experiment");
  const auto in = Inputs(exp, outcomes, target, mu);
  const auto sums = kernels::parallel::AccumulateEstimator(in, kernels::AllRows(exp.size()));
  ValueEstimate v;
  v.estimator = e;
  v.n_effective = EffectiveN(sums);
  if (e == Estimator::kHajek && !(sums.sum_w > 0.0)) {
    throw NumericError("Hajek estimate undefined: the target policy gives zero probability to every observed action");
  }
  v.point = FromSums(e, sums);
  if (sums.sum_w == 0.0 && e != Estimator::kHajek) {
    v.warnings.emplace_back("all importance weights are zero");
  }
  return v;
}

}  // namespace

ValueEstimate ValueHt(const ExperimentalDataset& exp, std::span<const double> outcomes,
                      const PolicySnapshot& target) {
  return PointEstimate(Estimator::kHt, exp, outcomes, target, nullptr);
}

ValueEstimate ValueHajek(const ExperimentalDataset& exp, std::span<const double> outcomes,
                         const PolicySnapshot& target) {
  return PointEstimate(Estimator::kHajek, exp, outcomes, target, nullptr);
}

ValueEstimate ValueDr(const ExperimentalDataset& exp, std::span<const double> outcomes,
                      const PolicySnapshot& target, const Matrix& mu) {
  return PointEstimate(Estimator::kDr, exp, outcomes, target, &mu);
}

ValueEstimate ValueDr(const ExperimentalDataset& exp, std::span<const double> outcomes,
                      const PolicySnapshot& target, const CrossFitOutcomeModel& mu) {
  return ValueDr(exp, outcomes, target, mu.predictions);
}

// ---- Cross-fitting -----------------------------------------------------------

namespace {

std::vector<std::string> ActionLevels(int n_actions) {
  std::vector<std::string> levels;
  for (int a = 0; a < n_actions; ++a) levels.push_back(std::to_string(a));
  return levels;
}

}  // namespace

Table WithActionColumn(const Table& features, std::span<const int> actions, int n_actions) {
  if (actions.size() != features.n_rows()) throw ArgumentError("actions length does not match rows");
  if (features.Has(kActionColumn)) {
    throw SchemaError("feature name '" + std::string(kActionColumn) + "' is reserved");
  }
  return features.WithColumn(Column::Categorical(std::string(kActionColumn),
                                                 std::vector<int>(actions.begin(), actions.end()),
                                                 ActionLevels(n_actions)));
}

Table WithActionColumn(const Table& features, int action, int n_actions) {
  return WithActionColumn(features, std::vector<int>(features.n_rows(), action), n_actions);
}

CrossFitOutcomeModel FitCrossFitOutcomeModel(const ExperimentalDataset& exp,
                                             std::span<const double> outcomes,
                                             const LearnerSpec& spec, int n_folds,
                                             std::uint64_t seed) {
  if (n_folds < 2) throw ArgumentError("cross-fitting needs n_folds >= 2");
  if (outcomes.size() != exp.size()) throw ArgumentError("outcomes length does not match the experiment");
  const int k = exp.n_actions;
  CrossFitOutcomeModel cf;
  cf.folds = MakeFolds(exp.size(), n_folds, seed);
  cf.predictions = Matrix(exp.size(), static_cast<std::size_t>(k));
  std::vector<std::optional<FittedRegressor>> models(static_cast<std::size_t>(n_folds));
  std::vector<std::vector<std::string>> fold_warnings(static_cast<std::size_t>(n_folds));

  parallel::ForEach(static_cast<std::size_t>(n_folds), [&](std::size_t f) {
    const auto train = cf.folds.Complement(static_cast<int>(f));
    const auto members = cf.folds.Members(static_cast<int>(f));
    std::vector<int> a_train(train.size());
    std::vector<double> y_train(train.size());
    std::vector<char> seen(static_cast<std::size_t>(k), 0);
    for (std::size_t r = 0; r < train.size(); ++r) {
      a_train[r] = exp.actions[train[r]];
      y_train[r] = outcomes[train[r]];
      seen[static_cast<std::size_t>(a_train[r])] = 1;
    }
    for (int a = 0; a < k; ++a) {
      if (!seen[static_cast<std::size_t>(a)]) {
        fold_warnings[f].push_back("fold " + std::to_string(f) + " training data has no unit with action " +
                                   std::to_string(a) + "; its predictions extrapolate");
      }
    }
    LearnerSpec fold_spec = spec;
    fold_spec.seed = DeriveSeed(seed, f);
    models[f].emplace(FitRegressor(fold_spec, WithActionColumn(exp.features.Take(train), a_train, k), y_train));
    const Table held = exp.features.Take(members);
    for (int a = 0; a < k; ++a) {
      const auto pred = models[f]->Predict(WithActionColumn(held, a, k));
      for (std::size_t r = 0; r < members.size(); ++r) {
        cf.predictions(members[r], static_cast<std::size_t>(a)) = pred[r];
      }
    }
  });
  for (int f = 0; f < n_folds; ++f) {
    cf.models.push_back(std::move(*models[static_cast<std::size_t>(f)]));
    for (auto& w : fold_warnings[static_cast<std::size_t>(f)]) cf.warnings.push_back(std::move(w));
  }
  return cf;
}

Matrix CrossFitOutcomeModel::Predict(const Table& features, int n_actions) const {
  Matrix out(features.n_rows(), static_cast<std::size_t>(n_actions), 0.0);
  for (const auto& m : models) {
    for (int a = 0; a < n_actions; ++a) {
      const auto pred = m.Predict(WithActionColumn(features, a, n_actions));
      for (std::size_t i = 0; i < pred.size(); ++i) {
        out(i, static_cast<std::size_t>(a)) += pred[i] / static_cast<double>(models.size());
      }
    }
  }
  return out;
}

// ---- Bootstrap -----------------------------------------------------------------

namespace {

std::vector<std::size_t> Resample(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = pick(rng);
  return rows;
}

void Summarise(ValueEstimate& v, std::vector<double> reps, const BootstrapConfig& config) {
  std::vector<double> ok;
  ok.reserve(reps.size());
  for (double r : reps) {
    if (std::isfinite(r)) ok.push_back(r);
  }
  v.replicates = config.replicates;
  v.dropped_replicates = static_cast<int>(reps.size() - ok.size());
  if (v.dropped_replicates > 0) {
    v.warnings.push_back(std::to_string(v.dropped_replicates) +
                         " bootstrap replicates had no overlap and were dropped");
  }
  if (ok.size() < 2) throw NumericError("bootstrap: fewer than two usable replicates");
  if (config.replicates < 100) v.warnings.emplace_back("fewer than 100 bootstrap replicates");
  std::sort(ok.begin(), ok.end());
  const double alpha = 1.0 - config.level;
  double lo = stats::SortedQuantile(ok, alpha / 2.0);
  double hi = stats::SortedQuantile(ok, 1.0 - alpha / 2.0);
  v.ci_low = std::min(lo, v.point);
  v.ci_high = std::max(hi, v.point);
  v.std_error = std::sqrt(stats::SampleVariance(ok));
}

void CheckConfig(const BootstrapConfig& config, const Matrix* mu) {
  if (config.replicates < 2) throw ArgumentError("bootstrap needs at least 2 replicates");
  if (!(config.level > 0.0 && config.level < 1.0)) throw ArgumentError("CI level must be in (0, 1)");
  if (config.estimator == Estimator::kDr && mu == nullptr) {
    throw ArgumentError("DR bootstrap needs outcome-model predictions");
  }
}

}  // namespace

ValueEstimate BootstrapValue(const ExperimentalDataset& exp, std::span<const double> outcomes,
                             const PolicySnapshot& target, const Matrix* mu,
                             const BootstrapConfig& config) {
  CheckConfig(config, mu);
  const Matrix* m = config.estimator == Estimator::kDr ? mu : nullptr;
  ValueEstimate v = PointEstimate(config.estimator, exp, outcomes, target, m);
  const auto in = Inputs(exp, outcomes, target, m);
  std::vector<double> reps(static_cast<std::size_t>(config.replicates));
  parallel::ForEach(reps.size(), [&](std::size_t r) {
    const auto rows = Resample(exp.size(), DeriveSeed(config.seed, r));
    reps[r] = FromSums(config.estimator, kernels::serial::AccumulateEstimator(in, rows));
  });
  Summarise(v, std::move(reps), config);
  return v;
}

ValueEstimate BootstrapValueDifference(const ExperimentalDataset& exp,
                                       std::span<const double> outcomes,
                                       const PolicySnapshot& first, const PolicySnapshot& second,
                                       const Matrix* mu, const BootstrapConfig& config) {
  CheckConfig(config, mu);
  const Matrix* m = config.estimator == Estimator::kDr ? mu : nullptr;
  const ValueEstimate a = PointEstimate(config.estimator, exp, outcomes, first, m);
  const ValueEstimate b = PointEstimate(config.estimator, exp, outcomes, second, m);
  ValueEstimate v;
  v.estimator = config.estimator;
  v.point = a.point - b.point;
  v.n_effective = std::min(a.n_effective, b.n_effective);
  const auto in_a = Inputs(exp, outcomes, first, m);
  const auto in_b = Inputs(exp, outcomes, second, m);
  std::vector<double> reps(static_cast<std::size_t>(config.replicates));
  parallel::ForEach(reps.size(), [&](std::size_t r) {
    const auto rows = Resample(exp.size(), DeriveSeed(config.seed, r));
    reps[r] = FromSums(config.estimator, kernels::serial::AccumulateEstimator(in_a, rows)) -
              FromSums(config.estimator, kernels::serial::AccumulateEstimator(in_b, rows));
  });
  Summarise(v, std::move(reps), config);
  return v;
}

// ---- ATE / ATT ---------------------------------------------------------------------

ValueEstimate EstimateContrast(std::span<const int> actions, std::span<const double> p_treated,
                               std::span<const double> p_comparison,
                               std::span<const double> outcomes, int treated, int comparison,
                               Estimand estimand) {
  const std::size_t n = actions.size();
  if (p_treated.size() != n || p_comparison.size() != n || outcomes.size() != n) {
    throw ArgumentError("contrast inputs differ in length");
  }
  if (treated == comparison) throw ArgumentError("contrast needs two different actions");
  double sw[2] = {0, 0}, swy[2] = {0, 0};
  std::size_t count[2] = {0, 0};
  auto weight = [&](std::size_t i, int g) {
    const double pt = p_treated[i];
    const double pc = p_comparison[i];
    if (!(pt > 0.0) || !(pc > 0.0)) {
      throw PositivityError("non-positive propensity at row " + std::to_string(i));
    }
    if (estimand == Estimand::kAte) return g == 0 ? 1.0 / pt : 1.0 / pc;
    return g == 0 ? 1.0 : pt / pc;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const int g = actions[i] == treated ? 0 : actions[i] == comparison ? 1 : -1;
    if (g < 0) continue;
    const double w = weight(i, g);
    sw[g] += w;
    swy[g] += w * outcomes[i];
    ++count[g];
  }
  if (count[0] == 0 || count[1] == 0) {
    throw DataError("contrast needs units with action " + std::to_string(treated) + " and action " +
                    std::to_string(comparison));
  }
  const double m[2] = {swy[0] / sw[0], swy[1] / sw[1]};
  double var[2] = {0, 0};
  double sw2[2] = {0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const int g = actions[i] == treated ? 0 : actions[i] == comparison ? 1 : -1;
    if (g < 0) continue;
    const double w = weight(i, g);
    const double d = outcomes[i] - m[g];
    var[g] += w * w * d * d;
    sw2[g] += w * w;
  }
  ValueEstimate v;
  v.estimator = Estimator::kHajek;
  v.point = m[0] - m[1];
  const double se = std::sqrt(var[0] / (sw[0] * sw[0]) + var[1] / (sw[1] * sw[1]));
  v.std_error = se;
  constexpr double kZ975 = 1.959963984540054;
  v.ci_low = v.point - kZ975 * se;
  v.ci_high = v.point + kZ975 * se;
  v.n_effective = std::min(sw[0] * sw[0] / sw2[0], sw[1] * sw[1] / sw2[1]);
  return v;
}

ValueEstimate EstimateContrast(const ExperimentalDataset& exp, std::span<const double> outcomes,
                               int treated, int comparison, Estimand estimand) {
  if (outcomes.size() != exp.size()) throw ArgumentError("outcomes length does not match the experiment");
  const int k = exp.n_actions;
  if (treated < 0 || treated >= k || comparison < 0 || comparison >= k) {
    throw ArgumentError("contrast actions outside the action set");
  }
  std::vector<double> pt(exp.size()), pc(exp.size());
  for (std::size_t i = 0; i < exp.size(); ++i) {
    pt[i] = exp.propensity(i, treated);
    pc[i] = exp.propensity(i, comparison);
  }
  return EstimateContrast(exp.actions, pt, pc, outcomes, treated, comparison, estimand);
}

}  // namespace longhorizon

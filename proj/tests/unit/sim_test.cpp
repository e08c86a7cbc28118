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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "longhorizon/error.hpp"
#include "longhorizon/ope.hpp"
#include "longhorizon/sim.hpp"
#include "longhorizon/stats.hpp"

namespace longhorizon {
namespace {

DgpConfig Small(DgpFamily family = DgpFamily::kStructural) {
  DgpConfig cfg;
  cfg.family = family;
  cfg.n_units = 2000;
  cfg.n_historical = 1500;
  cfg.seed = 17;
  return cfg;
}

bool SameMatrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

TEST(Generate, DeterministicForSeed) {
  for (auto family : {DgpFamily::kStructural, DgpFamily::kSubscriber}) {
    const auto a = Generate(Small(family));
    const auto b = Generate(Small(family));
    EXPECT_EQ(a.outcomes, b.outcomes);
    EXPECT_TRUE(a.experiment.features == b.experiment.features);
    EXPECT_TRUE(a.historical.surrogates == b.historical.surrogates);
    EXPECT_TRUE(SameMatrix(a.potential_outcomes, b.potential_outcomes));
    EXPECT_EQ(a.experiment.actions, b.experiment.actions);
  }
}

TEST(Generate, CoefficientSeedSharesStructureAcrossUnitDraws) {
  DgpConfig a = Small(), b = Small();
  a.coefficient_seed = b.coefficient_seed = 5;
  b.seed = 18;
  const auto sa = Generate(a), sb = Generate(b);
  EXPECT_TRUE(SameMatrix(sa.coefficients.base, sb.coefficients.base));
  EXPECT_EQ(sa.coefficients.beta, sb.coefficients.beta);
  EXPECT_NE(sa.outcomes, sb.outcomes);
  const auto sc = Generate(Small());
  EXPECT_NE(sc.coefficients.beta, sa.coefficients.beta);
}

TEST(Generate, RealisedOutcomesArePotentialOutcomesOfAssignedAction) {
  for (auto family : {DgpFamily::kStructural, DgpFamily::kSubscriber}) {
    const auto sim = Generate(Small(family));
    ASSERT_NO_THROW(sim.experiment.Validate());
    ASSERT_NO_THROW(sim.historical.Validate());
    for (std::size_t i = 0; i < sim.experiment.size(); ++i) {
      const auto a = static_cast<std::size_t>(sim.experiment.actions[i]);
      EXPECT_EQ(sim.outcomes[i], sim.potential_outcomes(i, a));
      EXPECT_EQ(sim.oracle_cates(i, 0), 0.0);
      double best = sim.potential_outcomes(i, 0);
      for (std::size_t k = 1; k < sim.potential_outcomes.cols(); ++k) best = std::max(best, sim.potential_outcomes(i, k));
      EXPECT_EQ(sim.potential_outcomes(i, static_cast<std::size_t>(sim.oracle_policy[i])), best);
    }
    // Unit ids are unique across the two datasets.
    EXPECT_EQ(sim.historical.unit_ids.front(), static_cast<std::int64_t>(sim.experiment.size()));
  }
}

TEST(Generate, BimodalProfileRespectsGap) {
  DgpConfig cfg = Small();
  cfg.min_gap = 0.75;
  const auto sim = Generate(cfg);
  bool both_signs[2] = {false, false};
  for (std::size_t i = 0; i < sim.experiment.size(); ++i) {
    EXPECT_GE(std::abs(sim.oracle_cates(i, 1)), 0.75 - 1e-12);
    both_signs[sim.oracle_cates(i, 1) > 0] = true;
  }
  EXPECT_TRUE(both_signs[0] && both_signs[1]);
}

TEST(Generate, MultiActionStructural) {
  DgpConfig cfg = Small();
  cfg.k_actions = 4;
  const auto sim = Generate(cfg);
  EXPECT_EQ(sim.experiment.propensities.cols(), 4u);
  EXPECT_EQ(sim.potential_surrogates.size(), 4u);
  EXPECT_NO_THROW(sim.experiment.Validate());
}

TEST(Generate, SurrogacyViolationShiftsOnlyTreatedOutcomes) {
  DgpConfig a = Small(), b = Small();
  b.surrogacy_violation = 0.5;
  const auto sa = Generate(a), sb = Generate(b);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(sa.potential_outcomes(i, 0), sb.potential_outcomes(i, 0));
    EXPECT_NEAR(sa.potential_outcomes(i, 1) - sb.potential_outcomes(i, 1), 0.5, 1e-12);
    EXPECT_EQ(sa.oracle_index(i, 1), sb.oracle_index(i, 1));
  }
}

TEST(Subscriber, OutcomeEqualsCumulativeRevenueAtFullHorizon) {
  DgpConfig cfg = Small(DgpFamily::kSubscriber);
  cfg.horizon = cfg.n_periods;
  cfg.surrogate_set = SurrogateSet::kRevenue;
  const auto sim = Generate(cfg);
  EXPECT_EQ(sim.proxy, sim.outcomes);
  const auto s = sim.experiment.surrogates.column(0).values();
  EXPECT_TRUE(std::equal(s.begin(), s.end(), sim.outcomes.begin()));
  EXPECT_EQ(sim.experiment.surrogates.n_cols(), 1u);
}

TEST(Subscriber, SurrogateSetsAndInvalidConfigs) {
  DgpConfig cfg = Small(DgpFamily::kSubscriber);
  cfg.surrogate_set = SurrogateSet::kBoth;
  EXPECT_EQ(Generate(cfg).experiment.surrogates.n_cols(), 2u);
  cfg.horizon = cfg.n_periods + 1;
  EXPECT_THROW(Generate(cfg), ArgumentError);
  cfg.horizon = 6;
  cfg.k_actions = 3;
  EXPECT_THROW(Generate(cfg), ArgumentError);
}

TEST(Oracle, TruePolicyValueAndBiasBounds) {
  const auto sim = Generate(Small());
  const auto none = PolicySnapshot::Constant(sim.experiment.size(), 2, 0);
  double want = 0.0;
  for (std::size_t i = 0; i < sim.experiment.size(); ++i) want += sim.potential_outcomes(i, 0);
  EXPECT_NEAR(TruePolicyValue(sim, none), want / static_cast<double>(sim.experiment.size()), 1e-12);
  const auto b = ConditionalBiasBounds(sim);
  ASSERT_EQ(b.size(), sim.experiment.size());
  for (double v : b) EXPECT_GE(v, 0.0);

  DgpConfig multi = Small();
  multi.k_actions = 3;
  EXPECT_THROW(ConditionalBiasBounds(Generate(multi)), ArgumentError);
}

TEST(Enums, RoundTrip) {
  for (auto v : {DgpFamily::kStructural, DgpFamily::kSubscriber}) EXPECT_EQ(ParseDgpFamily(ToString(v)), v);
  for (auto v : {EffectProfile::kBimodalGap, EffectProfile::kContinuousNearZero})
    EXPECT_EQ(ParseEffectProfile(ToString(v)), v);
  for (auto v : {SurrogateSet::kBoth, SurrogateSet::kRevenue, SurrogateSet::kConsumption})
    EXPECT_EQ(ParseSurrogateSet(ToString(v)), v);
  EXPECT_THROW(ParseDgpFamily("nope"), ArgumentError);
}

TEST(Churn, PanelAndCalibration) {
  const auto panel = SyntheticChurnPanel(20000, 3);
  EXPECT_NEAR(stats::Mean(panel.risk), 0.2, 0.05);
  for (double c : panel.churn) EXPECT_TRUE(c == 0.0 || c == 1.0);
  const double t = CalibrateDesignThreshold(panel.risk, 0.01, 0.003, 0.5);
  double mean = 0.0;
  for (double r : panel.risk) mean += std::min(0.5, stats::NormalCdf((r - t) / 0.003));
  EXPECT_NEAR(mean / static_cast<double>(panel.risk.size()), 0.01, 1e-6);
}

TEST(Power, NullEffectAndDeterminism) {
  const auto panel = SyntheticChurnPanel(5000, 4);
  PowerConfig cfg;
  cfg.q = 0.05;
  cfg.n_reps = 40;
  cfg.tau_effect = 0.0;
  const auto cell = PowerSimulation(panel.churn, panel.risk, cfg, 9);
  EXPECT_EQ(cell.mean_true_att, 0.0);
  EXPECT_LE(cell.power, 0.3);
  EXPECT_NEAR(cell.mean_treated_fraction, 0.05, 0.01);
  const auto again = PowerSimulation(panel.churn, panel.risk, cfg, 9);
  EXPECT_EQ(again.n_significant, cell.n_significant);
  EXPECT_EQ(again.mean_estimate, cell.mean_estimate);

  const std::vector<double> taus{0.0, 0.3, 0.6, 0.9};
  const auto grid = PowerGrid(panel.churn, panel.risk, taus, cfg, 9);
  EXPECT_EQ(grid[0].n_significant, cell.n_significant);
  for (std::size_t t = 1; t < grid.size(); ++t) EXPECT_GE(grid[t].power, grid[t - 1].power);
  EXPECT_GT(grid.back().power, 0.5);

  cfg.q = 0.6;
  EXPECT_THROW(PowerSimulation(panel.churn, panel.risk, cfg, 9), ArgumentError);
}

TEST(DesignVsUniform, TreatsTargetFraction) {
  const auto panel = SyntheticChurnPanel(5000, 5);
  const auto r = DesignVsUniform(panel.risk, 0.0, 50, 6, 0.05);
  EXPECT_EQ(r.churn_design.size(), 50u);
  EXPECT_NEAR(r.mean_treated_design, 0.05, 0.01);
  EXPECT_NEAR(r.mean_treated_uniform, 0.05, 0.01);
  EXPECT_LE(r.median_churn_design, r.median_churn_uniform);
}

TEST(Validation, IdentityIndexAtFullHorizon) {
  DgpConfig cfg = Small(DgpFamily::kSubscriber);
  ValidationOptions opt;
  opt.bootstrap = 20;
  const std::vector<int> horizons{6, cfg.n_periods};
  const std::vector<SurrogateSet> sets{SurrogateSet::kRevenue};
  const auto report = ValidationExperiment(cfg, horizons, sets, opt);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_FALSE(report.rows[0].identity_index);
  EXPECT_TRUE(report.rows[1].identity_index);
  EXPECT_EQ(report.rows[1].value_index_policy, report.rows[1].value_true_policy);
  EXPECT_EQ(report.rows[1].agreement, 1.0);
  EXPECT_EQ(report.rows[1].att_index.point, report.rows[1].att_true.point);
}

}  // namespace
}  // namespace longhorizon

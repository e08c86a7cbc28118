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

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "longhorizon/error.hpp"
#include "longhorizon/ope.hpp"
#include "longhorizon/parallel.hpp"

namespace longhorizon {
namespace {

struct Instance {
  ExperimentalDataset exp;
  std::vector<double> y;
  Matrix target, mu;
};

Instance RandomInstance(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<int> a(n);
  for (auto& v : a) v = static_cast<int>(rng() % k);
  Instance inst{lhtest::MakeExperiment(a, lhtest::RandomPropensities(n, k, rng)), {},
                lhtest::RandomPropensities(n, k, rng), lhtest::RandomMatrix(n, k, rng)};
  const Matrix y = lhtest::RandomMatrix(n, 1, rng);
  inst.y.assign(y.data().begin(), y.data().end());
  return inst;
}

TEST(Estimators, AgreeWithDefiningSums) {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng() % 60, k = 2 + rng() % 3;
    const auto inst = RandomInstance(n, k, rng);
    double sw = 0.0, swy = 0.0, sdr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = static_cast<std::size_t>(inst.exp.actions[i]);
      const double w = inst.target(i, a) / inst.exp.propensities(i, a);
      sw += w;
      swy += w * inst.y[i];
      sdr += w * (inst.y[i] - inst.mu(i, a));
      for (std::size_t b = 0; b < k; ++b) sdr += inst.target(i, b) * inst.mu(i, b);
    }
    const auto snap = PolicySnapshot::Stochastic(inst.target);
    const double tol = 1e-12 * (1.0 + std::abs(swy) + std::abs(sdr));
    EXPECT_NEAR(ValueHt(inst.exp, inst.y, snap).point, swy / static_cast<double>(n), tol);
    EXPECT_NEAR(ValueHajek(inst.exp, inst.y, snap).point, swy / sw, tol);
    EXPECT_NEAR(ValueDr(inst.exp, inst.y, snap, inst.mu).point, sdr / static_cast<double>(n), tol);
  }
}

TEST(Estimators, DrWithZeroModelIsHt) {
  Rng rng(12);
  const auto inst = RandomInstance(40, 3, rng);
  const auto snap = PolicySnapshot::Stochastic(inst.target);
  EXPECT_NEAR(ValueDr(inst.exp, inst.y, snap, Matrix(40, 3, 0.0)).point, ValueHt(inst.exp, inst.y, snap).point,
              1e-12);
}

TEST(Estimators, DrIsExactWithCorrectNoiselessModel) {
  // y = mu(i, A_i) exactly, so every residual vanishes.
  Rng rng(13);
  auto inst = RandomInstance(30, 3, rng);
  double want = 0.0;
  for (std::size_t i = 0; i < 30; ++i) {
    inst.y[i] = inst.mu(i, static_cast<std::size_t>(inst.exp.actions[i]));
    for (std::size_t a = 0; a < 3; ++a) want += inst.target(i, a) * inst.mu(i, a);
  }
  const auto snap = PolicySnapshot::Stochastic(inst.target);
  EXPECT_NEAR(ValueDr(inst.exp, inst.y, snap, inst.mu).point, want / 30.0, 1e-12);
}

TEST(Estimators, HajekIsShiftEquivariant) {
  Rng rng(14);
  auto inst = RandomInstance(25, 2, rng);
  const auto snap = PolicySnapshot::Stochastic(inst.target);
  const double base = ValueHajek(inst.exp, inst.y, snap).point;
  for (auto& v : inst.y) v += 10.0;
  EXPECT_NEAR(ValueHajek(inst.exp, inst.y, snap).point, base + 10.0, 1e-10);
}

TEST(Estimators, HajekWithoutOverlapThrows) {
  Rng rng(15);
  const auto exp = lhtest::MakeExperiment({0, 0, 0}, lhtest::RandomPropensities(3, 2, rng));
  const auto snap = PolicySnapshot::Constant(3, 2, 1);
  const std::vector<double> y{1.0, 2.0, 3.0};
  EXPECT_THROW(ValueHajek(exp, y, snap), NumericError);
  EXPECT_EQ(ValueHt(exp, y, snap).point, 0.0);
}

TEST(Estimators, RejectsMismatchedInputs) {
  Rng rng(16);
  const auto inst = RandomInstance(5, 2, rng);
  const std::vector<double> short_y{1.0};
  EXPECT_THROW(ValueHt(inst.exp, short_y, PolicySnapshot::Constant(5, 2, 0)), ArgumentError);
  EXPECT_THROW(ValueHt(inst.exp, inst.y, PolicySnapshot::Constant(5, 3, 0)), ArgumentError);
  Matrix bad(5, 2, 0.5);
  bad(0, 0) = 0.7;
  EXPECT_THROW(PolicySnapshot::Stochastic(bad), ArgumentError);
  const std::vector<int> out_of_range{0, 2};
  EXPECT_THROW(PolicySnapshot::FromActions(out_of_range, 2), ArgumentError);
}

TEST(Estimators, EffectiveSampleSize) {
  Rng rng(17);
  const auto inst = RandomInstance(20, 2, rng);
  const auto snap = PolicySnapshot::Stochastic(inst.target);
  double sw = 0.0, sw2 = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto a = static_cast<std::size_t>(inst.exp.actions[i]);
    const double w = inst.target(i, a) / inst.exp.propensities(i, a);
    sw += w;
    sw2 += w * w;
  }
  EXPECT_NEAR(ValueHajek(inst.exp, inst.y, snap).n_effective, sw * sw / sw2, 1e-12);
}

TEST(CrossFit, PredictionsComeFromHeldOutFold) {
  Rng rng(18);
  auto inst = RandomInstance(90, 2, rng);
  const auto model = FitCrossFitOutcomeModel(inst.exp, inst.y, LearnerSpec::Ridge(), 3, 5);
  ASSERT_EQ(model.models.size(), 3u);
  for (int f = 0; f < 3; ++f) {
    const auto members = model.folds.Members(f);
    const Table x = inst.exp.features.Take(members);
    for (int a = 0; a < 2; ++a) {
      const auto pred = model.models[static_cast<std::size_t>(f)].Predict(WithActionColumn(x, a, 2));
      for (std::size_t r = 0; r < members.size(); ++r) {
        EXPECT_EQ(model.predictions(members[r], static_cast<std::size_t>(a)), pred[r]);
      }
    }
  }
  // Same seed, same folds and predictions.
  const auto again = FitCrossFitOutcomeModel(inst.exp, inst.y, LearnerSpec::Ridge(), 3, 5);
  EXPECT_EQ(again.folds.fold_of_unit, model.folds.fold_of_unit);
  EXPECT_TRUE(std::equal(again.predictions.data().begin(), again.predictions.data().end(),
                         model.predictions.data().begin()));
}

class BootstrapFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(19);
    inst_ = RandomInstance(300, 2, rng);
    cfg_.replicates = 200;
    cfg_.seed = 77;
  }
  void TearDown() override { parallel::SetMaxThreads(0); }
  Instance inst_;
  BootstrapConfig cfg_;
};

TEST_F(BootstrapFixture, DeterministicAcrossThreadCounts) {
  const auto snap = PolicySnapshot::Stochastic(inst_.target);
  parallel::SetMaxThreads(1);
  const auto a = BootstrapValue(inst_.exp, inst_.y, snap, &inst_.mu, cfg_);
  parallel::SetMaxThreads(3);
  const auto b = BootstrapValue(inst_.exp, inst_.y, snap, &inst_.mu, cfg_);
  EXPECT_EQ(a.point, b.point);
  EXPECT_EQ(*a.ci_low, *b.ci_low);
  EXPECT_EQ(*a.ci_high, *b.ci_high);
  EXPECT_EQ(*a.std_error, *b.std_error);
  cfg_.seed = 78;
  const auto c = BootstrapValue(inst_.exp, inst_.y, snap, &inst_.mu, cfg_);
  EXPECT_EQ(c.point, a.point);
  EXPECT_NE(*c.ci_low, *a.ci_low);
}

TEST_F(BootstrapFixture, IntervalContainsPointAndMatchesEstimator) {
  const auto snap = PolicySnapshot::Stochastic(inst_.target);
  for (Estimator e : {Estimator::kHt, Estimator::kHajek, Estimator::kDr}) {
    cfg_.estimator = e;
    const auto v = BootstrapValue(inst_.exp, inst_.y, snap, &inst_.mu, cfg_);
    EXPECT_LE(*v.ci_low, v.point);
    EXPECT_GE(*v.ci_high, v.point);
    EXPECT_EQ(v.replicates, 200);
    EXPECT_EQ(v.estimator, e);
  }
  cfg_.estimator = Estimator::kDr;
  EXPECT_THROW(BootstrapValue(inst_.exp, inst_.y, snap, nullptr, cfg_), ArgumentError);
  cfg_.level = 1.0;
  EXPECT_THROW(BootstrapValue(inst_.exp, inst_.y, snap, &inst_.mu, cfg_), ArgumentError);
}

TEST_F(BootstrapFixture, DifferenceOfPolicies) {
  const auto first = PolicySnapshot::Stochastic(inst_.target);
  const auto second = PolicySnapshot::Constant(300, 2, 0);
  const auto d = BootstrapValueDifference(inst_.exp, inst_.y, first, second, &inst_.mu, cfg_);
  EXPECT_NEAR(d.point,
              ValueDr(inst_.exp, inst_.y, first, inst_.mu).point - ValueDr(inst_.exp, inst_.y, second, inst_.mu).point,
              1e-12);
  const auto self = BootstrapValueDifference(inst_.exp, inst_.y, first, first, &inst_.mu, cfg_);
  EXPECT_EQ(self.point, 0.0);
  EXPECT_EQ(*self.ci_low, 0.0);
  EXPECT_EQ(*self.ci_high, 0.0);
}

TEST(Contrast, HandComputedAtt) {
  // Units: (A, p1, y) = (1, .5, 4), (1, .25, 2), (0, .5, 1), (0, .75, 3).
  Matrix p(4, 2);
  const double p1[4] = {0.5, 0.25, 0.5, 0.75};
  for (std::size_t i = 0; i < 4; ++i) p(i, 1) = p1[i], p(i, 0) = 1.0 - p1[i];
  const auto exp = lhtest::MakeExperiment({1, 1, 0, 0}, p);
  const std::vector<double> y{4.0, 2.0, 1.0, 3.0};
  const auto att = EstimateContrast(exp, y, 1, 0, Estimand::kAtt);
  // Comparison weights p1 / p0: 1 and 3.
  EXPECT_DOUBLE_EQ(att.point, 3.0 - (1.0 * 1.0 + 3.0 * 3.0) / 4.0);
  const auto ate = EstimateContrast(exp, y, 1, 0, Estimand::kAte);
  // Treated weights 2, 4; comparison weights 2, 4.
  EXPECT_DOUBLE_EQ(ate.point, (2.0 * 4.0 + 4.0 * 2.0) / 6.0 - (2.0 * 1.0 + 4.0 * 3.0) / 6.0);
  EXPECT_GT(*ate.std_error, 0.0);
  EXPECT_NEAR(*ate.ci_high - ate.point, 1.959963984540054 * *ate.std_error, 1e-12);
  const std::vector<double> y_none(4, 0.0);
  const auto single = lhtest::MakeExperiment({1, 1, 1, 1}, p);
  EXPECT_THROW(EstimateContrast(single, y, 1, 0, Estimand::kAte), DataError);
}

TEST(Contrast, LinearisedStandardError) {
  Matrix p(4, 2, 0.5);
  const auto exp = lhtest::MakeExperiment({1, 1, 0, 0}, p);
  const std::vector<double> y{1.0, 3.0, 0.0, 4.0};
  const auto ate = EstimateContrast(exp, y, 1, 0, Estimand::kAte);
  // Equal weights: var = sum d^2 / n^2 per group.
  EXPECT_DOUBLE_EQ(ate.point, 0.0);
  EXPECT_DOUBLE_EQ(*ate.std_error, std::sqrt((1.0 + 1.0) / 4.0 + (4.0 + 4.0) / 4.0));
}

}  // namespace
}  // namespace longhorizon

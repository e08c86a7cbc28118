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
#include "longhorizon/model_io.hpp"
#include "longhorizon/stats.hpp"
#include "longhorizon/surrogate.hpp"

namespace longhorizon {
namespace {

// Y = 1 + 2 s0 - s1 + 0.5 x0 exactly.
HistoricalDataset LinearHistory(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  HistoricalDataset h;
  std::vector<double> x0(n), s0(n), s1(n);
  h.outcomes.resize(n);
  h.unit_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    x0[i] = z(rng);
    s0[i] = z(rng) + x0[i];
    s1[i] = z(rng);
    h.outcomes[i] = 1.0 + 2.0 * s0[i] - s1[i] + 0.5 * x0[i];
    h.unit_ids[i] = static_cast<std::int64_t>(i);
  }
  h.features = Table({Column::Float("x0", x0)});
  h.surrogates = Table({Column::Float("s0", s0), Column::Float("s1", s1)});
  return h;
}

TEST(SurrogateIndex, RecoversLinearConditionalMean) {
  const auto hist = LinearHistory(300, 1);
  const auto model = FitSurrogateIndex(hist, {});
  EXPECT_NEAR(model.r2(), 1.0, 1e-12);
  EXPECT_EQ(model.n_train(), 300u);
  const auto other = LinearHistory(50, 2);
  const auto imputed = model.Impute(other.features, other.surrogates);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(imputed[i], other.outcomes[i], 1e-9);
}

TEST(SurrogateIndex, SurrogatesOnlyIgnoresCovariates) {
  const auto hist = LinearHistory(200, 3);
  SurrogateFitOptions opt;
  opt.include_covariates = false;
  const auto model = FitSurrogateIndex(hist, opt);
  EXPECT_TRUE(model.covariate_schema().empty());
  EXPECT_EQ(model.regressor().schema().columns().size(), 2u);
  // Without x0 the fit is no longer exact.
  EXPECT_LT(model.r2(), 1.0 - 1e-6);
  const Table no_features = Table::Empty(hist.size());
  EXPECT_NO_THROW(model.Impute(no_features, hist.surrogates));
}

TEST(SurrogateIndex, SchemaMismatchNamesColumns) {
  const auto model = FitSurrogateIndex(LinearHistory(50, 4), {});
  const Table surrogates({Column::Float("s0", std::vector<double>(3, 0.0)),
                          Column::Float("s9", std::vector<double>(3, 0.0))});
  const Table features({Column::Float("x0", std::vector<double>(3, 0.0))});
  try {
    model.Impute(features, surrogates);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("s1"), std::string::npos) << e.what();
  }
}

TEST(SurrogateIndex, DesignNameCollision) {
  const Table x({Column::Float("a", {1.0})});
  const Table s({Column::Float("a", {2.0})});
  EXPECT_THROW(SurrogateDesign(x, s, true), SchemaError);
  EXPECT_EQ(SurrogateDesign(x, s, false).n_cols(), 1u);
}

TEST(SurrogateIndex, CrossValidatedCandidates) {
  const auto hist = LinearHistory(240, 5);
  SurrogateFitOptions opt;
  opt.candidates = {LearnerSpec::Cart(2), LearnerSpec::Ridge(0.0)};
  const auto model = FitSurrogateIndex(hist, opt);
  EXPECT_EQ(model.regressor().spec().family, LearnerFamily::kRidgeLinear);
}

TEST(SurrogateIndex, JsonRoundTrip) {
  const auto hist = LinearHistory(80, 6);
  const auto model = FitSurrogateIndex(hist, {});
  const auto back = SurrogateModelFromJson(Json::parse(ToJson(model).dump()));
  EXPECT_EQ(back.Impute(hist.features, hist.surrogates), model.Impute(hist.features, hist.surrogates));
  EXPECT_EQ(back.surrogate_schema(), model.surrogate_schema());
  EXPECT_EQ(back.include_covariates(), model.include_covariates());
}

TEST(BiasBound, ClosedForm) {
  const auto r = BiasBoundFromMoments(4.0, 0.25, 0.5, 0.75);
  EXPECT_DOUBLE_EQ(r.bound, std::sqrt(4.0 / 0.25 * 0.5 * 0.25));
  EXPECT_DOUBLE_EQ(BiasBoundFromMoments(4.0, 0.25, 1.0, 0.0).bound, 0.0);
}

TEST(BiasBound, LinearR2AgainstSquaredCorrelation) {
  Rng rng(7);
  std::normal_distribution<double> z;
  std::vector<double> x(400), y(400);
  for (std::size_t i = 0; i < 400; ++i) {
    x[i] = z(rng);
    y[i] = 0.7 * x[i] + z(rng);
  }
  const double mx = stats::Mean(x), my = stats::Mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < 400; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const Table design({Column::Float("x", x)});
  EXPECT_NEAR(LinearR2(design, y), sxy * sxy / (sxx * syy), 1e-10);
  EXPECT_EQ(LinearR2(design, std::vector<double>(400, 3.0)), 0.0);
}

TEST(BiasBound, AteBoundComposesMoments) {
  const auto hist = LinearHistory(200, 8);
  Rng rng(9);
  std::vector<int> actions(100);
  for (auto& a : actions) a = static_cast<int>(rng() % 2);
  auto exp = lhtest::MakeExperiment(actions, Matrix(100, 2, 0.5));
  const auto sub = LinearHistory(100, 10);
  exp.features = sub.features;
  exp.surrogates = sub.surrogates;
  const auto r = AteBiasBound(hist, exp);
  std::vector<double> a(actions.begin(), actions.end());
  EXPECT_DOUBLE_EQ(r.var_a, stats::Variance(a));
  EXPECT_NEAR(r.r2_y_given_s, 1.0, 1e-12);
  EXPECT_NEAR(r.bound, 0.0, 1e-5);

  exp.actions.assign(100, 1);
  EXPECT_THROW(AteBiasBound(hist, exp), NumericError);
}

TEST(CovariateShift, FlagsDisjointRanges) {
  std::vector<double> a(100), b(100), c(100);
  for (std::size_t i = 0; i < 100; ++i) {
    a[i] = static_cast<double>(i);
    b[i] = static_cast<double>(i) + 1000.0;
    c[i] = static_cast<double>(i) + 10.0;
  }
  const Table d1({Column::Float("u", a), Column::Float("v", a)});
  const Table d2({Column::Float("u", b), Column::Float("v", c)});
  const auto r = CovariateShiftReport(d1, d2);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_FALSE(r.rows[0].overlap);
  EXPECT_TRUE(r.rows[1].overlap);
  EXPECT_DOUBLE_EQ(r.rows[0].p025_d1, stats::Quantile(a, 0.025));
}

}  // namespace
}  // namespace longhorizon

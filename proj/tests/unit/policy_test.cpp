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

#include <vector>

#include "fixtures.hpp"
#include "longhorizon/error.hpp"
#include "longhorizon/policy.hpp"

namespace longhorizon {
namespace {

// Scores whose best action is determined by x0: action 0 below -1, action 1
// in [-1, 1), action 2 from 1 upwards.
DrScoreMatrix RegionScores(const Table& x, int k) {
  const auto x0 = x.column("x0").values();
  DrScoreMatrix s;
  s.n_actions = k;
  s.scores = Matrix(x0.size(), static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const int best = x0[i] < -1.0 ? 0 : (x0[i] < 1.0 || k == 2 ? 1 : 2);
    s.scores(i, static_cast<std::size_t>(best)) = 1.0 + std::abs(x0[i]);
  }
  return s;
}

Table Grid(std::size_t n) {
  std::vector<double> x0(n), x1(n);
  for (std::size_t i = 0; i < n; ++i) {
    x0[i] = -3.0 + 6.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    x1[i] = static_cast<double>(i % 7);
  }
  return Table({Column::Float("x0", x0), Column::Float("x1", x1)});
}

TEST(DrScores, MatchDefinition) {
  Rng rng(1);
  const std::vector<int> a{0, 1, 2, 1, 0};
  const auto exp = lhtest::MakeExperiment(a, lhtest::RandomPropensities(5, 3, rng));
  const Matrix mu = lhtest::RandomMatrix(5, 3, rng);
  const std::vector<double> y{1.0, -2.0, 0.5, 3.0, 0.0};
  const auto s = DrScores(exp, y, mu);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const bool taken = static_cast<std::size_t>(a[i]) == k;
      const double want = mu(i, k) + (taken ? (y[i] - mu(i, k)) / exp.propensities(i, k) : 0.0);
      EXPECT_DOUBLE_EQ(s.scores(i, k), want);
    }
  }
  const auto cate = Cate(s);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(cate.raw(i, 0), 0.0);
    EXPECT_DOUBLE_EQ(cate.raw(i, 2), s.scores(i, 2) - s.scores(i, 0));
  }
  EXPECT_TRUE(cate.smoothed.empty());
}

TEST(PolicyLearning, BinaryRecoversThreshold) {
  const Table x = Grid(200);
  const auto fit = LearnPolicyBinary(RegionScores(x, 2), x, LearnerSpec::Cart(2));
  EXPECT_FALSE(fit.fell_back_to_constant);
  const auto actions = fit.policy.Actions(x);
  const auto x0 = x.column("x0").values();
  for (std::size_t i = 0; i < 200; ++i) EXPECT_EQ(actions[i], x0[i] < -1.0 ? 0 : 1);
  double mean = 0.0;
  for (std::size_t i = 0; i < 200; ++i) mean += 1.0 + std::abs(x0[i]);
  EXPECT_NEAR(fit.objective, mean / 200.0, 1e-12);
}

TEST(PolicyLearning, MultiActionVote) {
  const Table x = Grid(300);
  const auto fit = LearnPolicyMulti(RegionScores(x, 3), x, LearnerSpec::Cart(2));
  const auto actions = fit.policy.Actions(x);
  const auto x0 = x.column("x0").values();
  for (std::size_t i = 0; i < 300; ++i) EXPECT_EQ(actions[i], x0[i] < -1.0 ? 0 : (x0[i] < 1.0 ? 1 : 2));
  EXPECT_EQ(fit.policy.pairs().size(), 3u);
  EXPECT_THROW(LearnPolicyBinary(RegionScores(x, 3), x, LearnerSpec::Cart(2)), ArgumentError);
}

TEST(PolicyLearning, FallsBackToBestConstant) {
  const Table x = Grid(50);
  DrScoreMatrix s;
  s.scores = Matrix(50, 2, 0.0);
  for (std::size_t i = 0; i < 50; ++i) s.scores(i, 1) = 1.0;
  const auto fit = LearnPolicyBinary(s, x, LearnerSpec::Cart(2));
  EXPECT_TRUE(fit.fell_back_to_constant);
  EXPECT_EQ(fit.policy.kind(), Policy::Kind::kConstant);
  EXPECT_EQ(fit.policy.constant_action(), 1);
  EXPECT_EQ(fit.constant_objectives, (std::vector<double>{0.0, 1.0}));

  const auto zero = LearnPolicyBinary(DrScoreMatrix{Matrix(50, 2, 2.0), {}, 2}, x, LearnerSpec::Cart(2));
  EXPECT_TRUE(zero.fell_back_to_constant);
  EXPECT_EQ(zero.policy.constant_action(), 0);
  EXPECT_FALSE(zero.warnings.empty());
}

TEST(Policy, StochasticTableRequiresKnownProfiles) {
  const std::vector<std::string> seg{"a", "b", "a"};
  const Table x({Column::Categorical("segment", seg)});
  const std::vector<ColumnSpec> keys{{"segment", ColumnKind::kCategorical}};
  const auto p = Policy::StochasticTable(2, keys, {{"a", {0.25, 0.75}}, {"b", {1.0, 0.0}}});
  const auto snap = p.Assign(x);
  EXPECT_EQ(snap.kind, PolicySnapshot::Kind::kStochastic);
  EXPECT_EQ(snap.probs(2, 1), 0.75);
  EXPECT_EQ(snap.probs(1, 0), 1.0);
  const std::vector<std::string> other{"c"};
  EXPECT_THROW(p.Assign(Table({Column::Categorical("segment", other)})), DataError);
  EXPECT_THROW(Policy::StochasticTable(2, keys, {{"a", {0.5, 0.6}}}), ArgumentError);
}

TEST(Policy, JsonRoundTrip) {
  const Table x = Grid(120);
  const auto learned = LearnPolicyMulti(RegionScores(x, 3), x, LearnerSpec::Cart(3)).policy;
  const auto back = PolicyFromJson(Json::parse(ToJson(learned).dump()));
  EXPECT_EQ(back.Actions(x), learned.Actions(x));
  EXPECT_EQ(back.kind(), learned.kind());

  const auto constant = PolicyFromJson(ToJson(Policy::ConstantAction(3, 2)));
  EXPECT_EQ(constant.constant_action(), 2);
  EXPECT_EQ(constant.n_actions(), 3);

  const std::vector<ColumnSpec> keys{{"x1", ColumnKind::kFloat}};
  std::map<std::string, std::vector<double>> rows;
  for (int v = 0; v < 7; ++v) rows[std::to_string(v)] = {0.5, 0.5};
  const auto table = Policy::StochasticTable(2, keys, rows);
  const auto table_back = PolicyFromJson(ToJson(table));
  EXPECT_EQ(table_back.table(), table.table());
  const auto got = table_back.Assign(x), want = table.Assign(x);
  EXPECT_TRUE(std::equal(got.probs.data().begin(), got.probs.data().end(), want.probs.data().begin()));
}

TEST(Regret, HandComputed) {
  Matrix cates(3, 3, 0.0);
  cates(0, 1) = 2.0, cates(0, 2) = 1.0;
  cates(1, 1) = -1.0, cates(1, 2) = -0.5;
  cates(2, 1) = 0.5, cates(2, 2) = 3.0;
  const std::vector<int> oracle{1, 0, 2};
  const std::vector<int> chosen{2, 0, 1};
  const auto r = Regret(cates, chosen, oracle);
  EXPECT_DOUBLE_EQ(r.mean_regret, (1.0 + 0.0 + 2.5) / 3.0);
  EXPECT_DOUBLE_EQ(r.disagreement_rate, 2.0 / 3.0);
  EXPECT_EQ(r.loss, (std::vector<double>{1.0, 0.0, 2.5}));
}

TEST(Pipeline, DeterministicAndUsesSelectedFeatures) {
  Rng rng(4);
  const std::size_t n = 400;
  std::normal_distribution<double> z;
  std::vector<int> a(n);
  std::vector<double> y(n), x0(n), x1(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = static_cast<int>(rng() % 2);
    x0[i] = z(rng);
    x1[i] = z(rng);
    y[i] = x1[i] + (a[i] == 1 ? (x0[i] > 0 ? 1.0 : -1.0) : 0.0) + 0.1 * z(rng);
  }
  auto exp = lhtest::MakeExperiment(a, Matrix(n, 2, 0.5));
  exp.features = Table({Column::Float("x0", x0), Column::Float("x1", x1)});
  PolicyPipelineConfig cfg;
  cfg.seed = 3;
  cfg.policy_features = {"x0"};
  const auto r1 = FitPolicyPipeline(exp, y, cfg);
  const auto r2 = FitPolicyPipeline(exp, y, cfg);
  EXPECT_EQ(r1.fit.policy.Actions(exp.features), r2.fit.policy.Actions(exp.features));
  EXPECT_EQ(r1.fit.policy.schema().columns().size(), 1u);
  const auto actions = r1.fit.policy.Actions(exp.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) correct += actions[i] == (x0[i] > 0 ? 1 : 0);
  EXPECT_GT(correct, n * 9 / 10);
  cfg.policy_features = {"nope"};
  EXPECT_THROW(FitPolicyPipeline(exp, y, cfg), SchemaError);
}

}  // namespace
}  // namespace longhorizon

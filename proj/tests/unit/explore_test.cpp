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
#include <filesystem>
#include <vector>

#include "fixtures.hpp"
#include "longhorizon/csv.hpp"
#include "longhorizon/error.hpp"
#include "longhorizon/explore.hpp"
#include "longhorizon/stats.hpp"

namespace longhorizon {
namespace {

void ExpectRow(const std::vector<double>& got, const std::vector<double>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12) << "entry " << i;
}

TEST(Clip, KnownRows) {
  ExpectRow(ClipProbabilities(std::vector<double>{1.0, 0.0}, 0.05, 0.9), {0.9, 0.1});
  ExpectRow(ClipProbabilities(std::vector<double>{0.0, 0.0, 1.0}, 0.05, 0.9), {0.05, 0.05, 0.9});
  ExpectRow(ClipProbabilities(std::vector<double>{0.02, 0.49, 0.49}, 0.05, 1.0), {0.05, 0.475, 0.475});
  // Spreading the excess from the ceiling pushes a second entry over it.
  ExpectRow(ClipProbabilities(std::vector<double>{0.7, 0.3, 0.0}, 0.0, 0.5), {0.5, 0.5, 0.0});
  // Two entries end at the ceiling and the zero entry at the floor; the
  // remaining entry takes what is left.
  const double f = 0.17, c = 0.31;
  ExpectRow(ClipProbabilities(std::vector<double>{0.0, 0.1, 0.6, 0.3}, f, c), {f, 1.0 - f - 2 * c, c, c});
}

TEST(Clip, RowsInsideBoundsAreUnchanged) {
  const std::vector<double> row{0.2, 0.3, 0.5};
  EXPECT_EQ(ClipProbabilities(row, 0.1, 0.6), row);
}

TEST(Clip, InfeasibleOrInvalidBounds) {
  const std::vector<double> row{0.2, 0.3, 0.5};
  EXPECT_THROW(ClipProbabilities(row, 0.4, 1.0), ArgumentError);
  EXPECT_THROW(ClipProbabilities(row, 0.0, 0.3), ArgumentError);
  EXPECT_THROW(ClipProbabilities(row, 0.5, 0.4), ArgumentError);
  EXPECT_THROW(ClipProbabilities(std::vector<double>{0.5, 0.6}, 0.0, 1.0), ArgumentError);
}

TEST(Clip, RandomRowsLandInBoundsAndAreIdempotent) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::size_t k = 2 + rng() % 4;
    std::vector<double> row(k);
    double total = 0.0;
    for (auto& v : row) total += v = u(rng) < 0.3 ? 0.0 : u(rng);
    if (total == 0.0) row[0] = total = 1.0;
    for (auto& v : row) v /= total;
    const double floor = u(rng) * 0.9 / static_cast<double>(k);
    const double ceiling = std::max(floor + 1e-3, 1.0 / static_cast<double>(k) + u(rng) * (1.0 - 1.0 / static_cast<double>(k)));
    const auto out = ClipProbabilities(row, floor, ceiling);
    double sum = 0.0;
    for (double p : out) {
      EXPECT_GE(p, floor - 1e-12);
      EXPECT_LE(p, ceiling + 1e-12);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    // Entries strictly between the bounds share one scale factor.
    double scale = -1.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (row[i] == 0.0 || out[i] <= floor + 1e-12 || out[i] >= ceiling - 1e-12) continue;
      if (scale < 0.0) scale = out[i] / row[i];
      EXPECT_NEAR(out[i] / row[i], scale, 1e-9 * scale);
    }
    ExpectRow(ClipProbabilities(out, floor, ceiling), out);
  }
}

TEST(Bts, TalliesAndClipping) {
  // Unit 0 wins action 1 in 9 of 10 replicates, unit 1 always action 0.
  std::vector<std::vector<int>> reps(10, std::vector<int>{1, 0});
  reps[3][0] = 0;
  const auto r = BtsFromReplicateActions(reps, 2, 2, 0.05, 0.8);
  EXPECT_EQ(r.tallies(0, 1), 9.0);
  EXPECT_EQ(r.pre_clip(0, 1), 0.9);
  EXPECT_EQ(r.pre_clip(1, 0), 1.0);
  EXPECT_NEAR(r.snapshot.probs(0, 1), 0.8, 1e-12);
  EXPECT_NEAR(r.snapshot.probs(1, 1), 0.2, 1e-12);
  EXPECT_EQ(r.replicates, 10);
  EXPECT_THROW(BtsFromReplicateActions({{0, 5}}, 2, 2, 0.0, 1.0), ArgumentError);
}

TEST(Bts, ReplicatesRerunPipelineDeterministically) {
  Rng rng(6);
  const std::size_t n = 200;
  std::normal_distribution<double> z;
  std::vector<int> a(n);
  std::vector<double> y(n), x0(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = static_cast<int>(rng() % 2);
    x0[i] = z(rng);
    y[i] = (a[i] == 1 ? 2.0 * x0[i] : 0.0) + 0.5 * z(rng);
  }
  auto exp = lhtest::MakeExperiment(a, Matrix(n, 2, 0.5));
  exp.features = Table({Column::Float("x0", x0)});
  PolicyPipelineConfig pipe;
  BtsConfig cfg;
  cfg.replicates = 12;
  cfg.floor = 0.1;
  cfg.ceiling = 0.9;
  cfg.seed = 4;
  const auto r = BootstrapThompson(exp, y, pipe, cfg);
  EXPECT_EQ(r.replicates + r.dropped_replicates, 12);
  EXPECT_EQ(r.replicate_actions.size(), static_cast<std::size_t>(r.replicates));
  // Units far from the boundary are treated in (nearly) every replicate.
  std::size_t confident = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x0[i] > 1.0) confident += r.snapshot.probs(i, 1) == 0.9;
  }
  EXPECT_GT(confident, 0u);
  const auto again = BootstrapThompson(exp, y, pipe, cfg);
  EXPECT_EQ(again.replicate_actions, r.replicate_actions);
  cfg.floor = 0.6;
  EXPECT_THROW(BootstrapThompson(exp, y, pipe, cfg), ArgumentError);
}

TEST(DesignPolicy, ProbitOfRiskWithCapAndFloor) {
  const std::vector<double> risk{0.001, 0.0068, 0.01, 0.5};
  DesignPolicyConfig cfg;
  const auto snap = DesignPolicyFromRisk(risk, cfg);
  EXPECT_DOUBLE_EQ(snap.probs(0, 1), std::max(kDesignPolicyFloor, stats::NormalCdf((0.001 - 0.0068) / 0.003)));
  EXPECT_DOUBLE_EQ(snap.probs(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(snap.probs(3, 1), 0.5);
  EXPECT_DOUBLE_EQ(snap.probs(2, 0) + snap.probs(2, 1), 1.0);
  cfg.sigma = 0.0;
  EXPECT_THROW(DesignPolicyFromRisk(risk, cfg), ArgumentError);
}

TEST(Sampling, FrequenciesAndDeterminism) {
  const std::size_t n = 20000;
  Matrix p(n, 3);
  for (std::size_t i = 0; i < n; ++i) p(i, 0) = 0.2, p(i, 1) = 0.3, p(i, 2) = 0.5;
  const auto snap = PolicySnapshot::Stochastic(p);
  const auto a = SampleActions(snap, 9);
  EXPECT_EQ(a, SampleActions(snap, 9));
  std::vector<double> freq(3, 0.0);
  for (int v : a) freq[static_cast<std::size_t>(v)] += 1.0 / n;
  EXPECT_NEAR(freq[0], 0.2, 4 * std::sqrt(0.2 * 0.8 / n));
  EXPECT_NEAR(freq[2], 0.5, 4 * std::sqrt(0.25 / n));
}

TEST(Sampling, AssignmentFile) {
  const auto dir = std::filesystem::temp_directory_path() / "lh_explore_test";
  std::filesystem::create_directories(dir);
  const std::vector<std::int64_t> ids{7, 8};
  Matrix p(2, 2);
  p(0, 0) = 0.25, p(0, 1) = 0.75, p(1, 0) = 1.0, p(1, 1) = 0.0;
  const auto snap = PolicySnapshot::Stochastic(p);
  const std::vector<int> sampled{1, 0};
  WriteAssignment(dir / "a.csv", ids, snap, sampled, 42);
  const auto doc = ReadCsvFile(dir / "a.csv");
  EXPECT_EQ(doc.header, (std::vector<std::string>{"unit_id", "p0", "p1", "sampled_action", "seed"}));
  EXPECT_EQ(doc.rows[0], (std::vector<std::string>{"7", "0.25", "0.75", "1", "42"}));
}

}  // namespace
}  // namespace longhorizon

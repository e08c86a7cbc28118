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

#include "longhorizon/error.hpp"
#include "longhorizon/rng.hpp"
#include "longhorizon/stats.hpp"

namespace longhorizon {
namespace {

TEST(Stats, MeanAndVariances) {
  const std::vector<double> x{1.0, 2.0, 4.0, 7.0};
  EXPECT_DOUBLE_EQ(stats::Mean(x), 3.5);
  // sum of squared deviations: 6.25 + 2.25 + 0.25 + 12.25 = 21
  EXPECT_DOUBLE_EQ(stats::Variance(x), 21.0 / 4.0);
  EXPECT_DOUBLE_EQ(stats::SampleVariance(x), 21.0 / 3.0);
}

TEST(Stats, QuantileType7) {
  const std::vector<double> x{5.0, 1.0, 3.0, 2.0, 4.0};
  EXPECT_DOUBLE_EQ(stats::Quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(stats::Quantile(x, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(stats::Quantile(x, 0.5), 3.0);
  // h = (n - 1) p = 0.4 -> 1 + 0.4 * (2 - 1)
  EXPECT_DOUBLE_EQ(stats::Quantile(x, 0.1), 1.4);
  const std::vector<double> sorted{1.0, 2.0, 3.0, 4.0, 5.0};
  EXPECT_DOUBLE_EQ(stats::SortedQuantile(sorted, 0.975), 4.9);
}

TEST(Stats, NormalQuantileInvertsCdf) {
  for (double p : {1e-6, 0.01, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999}) {
    EXPECT_NEAR(stats::NormalCdf(stats::NormalQuantile(p)), p, 1e-12 + 1e-9 * p);
  }
  EXPECT_NEAR(stats::NormalQuantile(0.975), 1.959963984540054, 1e-9);
  EXPECT_DOUBLE_EQ(stats::NormalCdf(0.0), 0.5);
}

TEST(Stats, WeightedMean) {
  const std::vector<double> x{1.0, 3.0};
  const std::vector<double> w{3.0, 1.0};
  EXPECT_DOUBLE_EQ(stats::WeightedMean(x, w), 1.5);
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_THROW(stats::WeightedMean(x, zero), NumericError);
}

TEST(Rng, DerivedSeedsAreDistinctAndStable) {
  EXPECT_EQ(DeriveSeed(1, "policy"), DeriveSeed(1, "policy"));
  EXPECT_NE(DeriveSeed(1, "policy"), DeriveSeed(1, "split"));
  EXPECT_NE(DeriveSeed(1, std::uint64_t{0}), DeriveSeed(2, std::uint64_t{0}));
  EXPECT_NE(DeriveSeed(1, std::uint64_t{0}), DeriveSeed(1, std::uint64_t{1}));
  static_assert(Fnv1a64("") == 0xcbf29ce484222325ULL);
}

}  // namespace
}  // namespace longhorizon

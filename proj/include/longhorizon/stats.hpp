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

#ifndef LONGHORIZON_STATS_HPP_
#define LONGHORIZON_STATS_HPP_

#include <span>
#include <vector>

namespace longhorizon::stats {

double Mean(std::span<const double> x);
// Population variance (divides by n).
double Variance(std::span<const double> x);
// Unbiased sample variance (divides by n - 1).
double SampleVariance(std::span<const double> x);

// Linear-interpolation quantile (Hyndman-Fan type 7) of an unsorted sample.
double Quantile(std::span<const double> x, double p);
// Same on an already sorted sample.
double SortedQuantile(std::span<const double> sorted, double p);

double NormalCdf(double z);
double NormalQuantile(double p);

// Weighted mean; throws NumericError when the weights sum to zero.
double WeightedMean(std::span<const double> x, std::span<const double> w);

}  // namespace longhorizon::stats

#endif  // LONGHORIZON_STATS_HPP_

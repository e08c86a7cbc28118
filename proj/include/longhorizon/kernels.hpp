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

#ifndef LONGHORIZON_KERNELS_HPP_
#define LONGHORIZON_KERNELS_HPP_

// Row-parallel inner loops of the estimators. Every kernel exists twice:
// `serial` is the plain reference loop kept for testing, `parallel` is the
// OpenMP version used by the library. Parallel reductions sum fixed-size row
// chunks and combine the partials in chunk order, so the result does not
// depend on the number of threads.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "longhorizon/matrix.hpp"

namespace longhorizon::kernels {

inline constexpr std::size_t kChunkRows = 1024;

// Views over one experiment. `target` and `mu` may be null: a null target is
// only allowed for DrScores, a null `mu` means mu == 0.
struct EstimatorInputs {
  std::span<const int> actions;
  const Matrix* propensities = nullptr;
  const Matrix* target = nullptr;
  std::span<const double> outcomes;
  const Matrix* mu = nullptr;
};

// Sums over a row subset of w_i = target(i, A_i) / propensity(i, A_i),
// w_i^2, w_i y_i and the DR contribution
// sum_a target(i, a) mu(i, a) + w_i (y_i - mu(i, A_i)).
struct EstimatorSums {
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  double sum_wy = 0.0;
  double sum_dr = 0.0;
  std::size_t n = 0;

  EstimatorSums& operator+=(const EstimatorSums& o) {
    sum_w += o.sum_w;
    sum_w2 += o.sum_w2;
    sum_wy += o.sum_wy;
    sum_dr += o.sum_dr;
    n += o.n;
    return *this;
  }
};

namespace serial {

EstimatorSums AccumulateEstimator(const EstimatorInputs& in,
                                  std::span<const std::size_t> rows);
// Per-unit DR contributions (same expression as sum_dr, one entry per unit).
void DrContributions(const EstimatorInputs& in, std::span<double> out);
// Doubly-robust score matrix: out(i, a) = mu(i, a) + 1{A_i = a} (y_i - mu(i, a)) / p(i, a).
// `out` is resized to N x K when its shape differs.
void DrScores(const EstimatorInputs& in, Matrix& out);
// counts(i, a) = number of replicates assigning unit i to action a.
Matrix TallyActions(std::span<const std::vector<int>> replicate_actions,
                    std::size_t n_units, std::size_t n_actions);

}  // namespace serial

namespace parallel {

EstimatorSums AccumulateEstimator(const EstimatorInputs& in,
                                  std::span<const std::size_t> rows);
void DrContributions(const EstimatorInputs& in, std::span<double> out);
void DrScores(const EstimatorInputs& in, Matrix& out);
Matrix TallyActions(std::span<const std::vector<int>> replicate_actions,
                    std::size_t n_units, std::size_t n_actions);

}  // namespace parallel

// Identity row list 0..n-1.
std::vector<std::size_t> AllRows(std::size_t n);

}  // namespace longhorizon::kernels

#endif  // LONGHORIZON_KERNELS_HPP_

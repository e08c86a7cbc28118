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

#ifndef LONGHORIZON_TESTS_FIXTURES_HPP_
#define LONGHORIZON_TESTS_FIXTURES_HPP_

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "longhorizon/data.hpp"
#include "longhorizon/matrix.hpp"
#include "longhorizon/rng.hpp"

namespace lhtest {

using longhorizon::Column;
using longhorizon::ExperimentalDataset;
using longhorizon::Matrix;
using longhorizon::Table;

// Experiment with one float feature and one float surrogate, both filled with
// the row index.
inline ExperimentalDataset MakeExperiment(std::vector<int> actions, Matrix propensities) {
  const std::size_t n = actions.size();
  std::vector<double> idx(n);
  std::iota(idx.begin(), idx.end(), 0.0);
  ExperimentalDataset exp;
  exp.unit_ids.resize(n);
  std::iota(exp.unit_ids.begin(), exp.unit_ids.end(), std::int64_t{0});
  exp.features = Table({Column::Float("x0", idx)});
  exp.surrogates = Table({Column::Float("s0", idx)});
  exp.n_actions = static_cast<int>(propensities.cols());
  exp.actions = std::move(actions);
  exp.propensities = std::move(propensities);
  return exp;
}

// Random strictly positive N x K propensity rows.
inline Matrix RandomPropensities(std::size_t n, std::size_t k, longhorizon::Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix p(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t a = 0; a < k; ++a) total += p(i, a) = u(rng);
    for (std::size_t a = 0; a < k; ++a) p(i, a) /= total;
  }
  return p;
}

inline Matrix RandomMatrix(std::size_t n, std::size_t k, longhorizon::Rng& rng, double lo = -3.0,
                           double hi = 3.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(n, k);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

inline double Logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace lhtest

#endif  // LONGHORIZON_TESTS_FIXTURES_HPP_

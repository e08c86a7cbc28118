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

#include "longhorizon/kernels.hpp"

#include <numeric>

#include "longhorizon/parallel.hpp"

namespace longhorizon::kernels {
namespace {

inline double MuAt(const EstimatorInputs& in, std::size_t i, std::size_t a) {
  return in.mu == nullptr ? 0.0 : (*in.mu)(i, a);
}

inline void AddRow(const EstimatorInputs& in, std::size_t i, EstimatorSums& s) {
  const auto a = static_cast<std::size_t>(in.actions[i]);
  const double w = (*in.target)(i, a) / (*in.propensities)(i, a);
  const double y = in.outcomes[i];
  double model_term = 0.0;
  if (in.mu != nullptr) {
    const auto t = in.target->row(i);
    const auto m = in.mu->row(i);
    for (std::size_t k = 0; k < t.size(); ++k) model_term += t[k] * m[k];
  }
  s.sum_w += w;
  s.sum_w2 += w * w;
  s.sum_wy += w * y;
  s.sum_dr += model_term + w * (y - MuAt(in, i, a));
  s.n += 1;
}

inline double DrContribution(const EstimatorInputs& in, std::size_t i) {
  EstimatorSums s;
  AddRow(in, i, s);
  return s.sum_dr;
}

inline void ScoreRow(const EstimatorInputs& in, std::size_t i, Matrix& out) {
  const auto taken = static_cast<std::size_t>(in.actions[i]);
  for (std::size_t a = 0; a < out.cols(); ++a) {
    const double m = MuAt(in, i, a);
    out(i, a) = a == taken ? m + (in.outcomes[i] - m) / (*in.propensities)(i, a) : m;
  }
}

void ShapeScores(const EstimatorInputs& in, Matrix& out) {
  const std::size_t n = in.actions.size(), k = in.propensities->cols();
  if (out.rows() != n || out.cols() != k) out = Matrix(n, k);
}

}  // namespace

std::vector<std::size_t> AllRows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

namespace serial {

EstimatorSums AccumulateEstimator(const EstimatorInputs& in,
                                  std::span<const std::size_t> rows) {
  EstimatorSums s;
  for (std::size_t i : rows) AddRow(in, i, s);
  return s;
}

void DrContributions(const EstimatorInputs& in, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = DrContribution(in, i);
}

void DrScores(const EstimatorInputs& in, Matrix& out) {
  ShapeScores(in, out);
  for (std::size_t i = 0; i < out.rows(); ++i) ScoreRow(in, i, out);
}

Matrix TallyActions(std::span<const std::vector<int>> replicate_actions,
                    std::size_t n_units, std::size_t n_actions) {
  Matrix counts(n_units, n_actions, 0.0);
  for (const auto& acts : replicate_actions)
    for (std::size_t i = 0; i < n_units; ++i) counts(i, static_cast<std::size_t>(acts[i])) += 1.0;
  return counts;
}

}  // namespace serial

namespace parallel {

EstimatorSums AccumulateEstimator(const EstimatorInputs& in,
                                  std::span<const std::size_t> rows) {
  const std::size_t n_chunks = (rows.size() + kChunkRows - 1) / kChunkRows;
  std::vector<EstimatorSums> partial(n_chunks);
  const auto n = static_cast<long long>(n_chunks);
#pragma omp parallel for schedule(static) num_threads(longhorizon::parallel::MaxThreads())
  for (long long c = 0; c < n; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunkRows;
    const std::size_t end = std::min(rows.size(), begin + kChunkRows);
    EstimatorSums s;
    for (std::size_t j = begin; j < end; ++j) AddRow(in, rows[j], s);
    partial[static_cast<std::size_t>(c)] = s;
  }
  EstimatorSums total;
  for (const auto& p : partial) total += p;
  return total;
}

void DrContributions(const EstimatorInputs& in, std::span<double> out) {
  const auto n = static_cast<long long>(out.size());
#pragma omp parallel for schedule(static) num_threads(longhorizon::parallel::MaxThreads())
  for (long long i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = DrContribution(in, static_cast<std::size_t>(i));
  }
}

void DrScores(const EstimatorInputs& in, Matrix& out) {
  ShapeScores(in, out);
  const auto n = static_cast<long long>(out.rows());
#pragma omp parallel for schedule(static) num_threads(longhorizon::parallel::MaxThreads())
  for (long long i = 0; i < n; ++i) ScoreRow(in, static_cast<std::size_t>(i), out);
}

Matrix TallyActions(std::span<const std::vector<int>> replicate_actions,
                    std::size_t n_units, std::size_t n_actions) {
  Matrix counts(n_units, n_actions, 0.0);
  const auto n = static_cast<long long>(n_units);
#pragma omp parallel for schedule(static) num_threads(longhorizon::parallel::MaxThreads())
  for (long long ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (const auto& acts : replicate_actions) counts(i, static_cast<std::size_t>(acts[i])) += 1.0;
  }
  return counts;
}

}  // namespace parallel
}  // namespace longhorizon::kernels

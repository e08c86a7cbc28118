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

#include "longhorizon/explore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>

#include "longhorizon/csv.hpp"
#include "longhorizon/error.hpp"
#include "longhorizon/kernels.hpp"
#include "longhorizon/parallel.hpp"
#include "longhorizon/rng.hpp"
#include "longhorizon/stats.hpp"

namespace longhorizon {

namespace {

constexpr double kFeasibilityTol = 1e-12;

void CheckBounds(double floor, double ceiling, std::size_t k) {
  if (!(floor >= 0.0 && floor < ceiling && ceiling <= 1.0)) {
    throw ArgumentError("clipping bounds must satisfy 0 <= floor < ceiling <= 1");
  }
  if (static_cast<double>(k) * floor > 1.0 + kFeasibilityTol) {
    throw ArgumentError("infeasible floor: K * floor exceeds 1");
  }
  if (static_cast<double>(k) * ceiling < 1.0 - kFeasibilityTol) {
    throw ArgumentError("infeasible ceiling: K * ceiling is below 1");
  }
}

}  // namespace

void BtsConfig::Validate(int n_actions) const {
  if (replicates < 1) throw ArgumentError("BTS needs at least one replicate");
  CheckBounds(floor, ceiling, static_cast<std::size_t>(n_actions));
}

std::vector<double> ClipProbabilities(std::span<const double> row, double floor, double ceiling) {
  const std::size_t k = row.size();
  if (k == 0) throw ArgumentError("cannot clip an empty probability row");
  CheckBounds(floor, ceiling, k);
  double total = 0.0;
  bool inside = true;
  for (double p : row) {
    if (!(p >= 0.0)) throw ArgumentError("probabilities must be non-negative");
    total += p;
    inside = inside && p >= floor && p <= ceiling;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("probability row does not sum to 1");
  std::vector<double> out(row.begin(), row.end());
  if (inside) return out;

  auto clamp_sum = [&](double lambda) {
    double sum = 0.0;
    for (double p : row) sum += p > 0.0 ? std::clamp(lambda * p, floor, ceiling) : floor;
    return sum;
  };
  std::vector<double> knots{0.0};
  std::size_t n_zero = 0;
  for (double p : row) {
    if (p > 0.0) {
      knots.push_back(floor / p);
      knots.push_back(ceiling / p);
    } else {
      ++n_zero;
    }
  }
  std::sort(knots.begin(), knots.end());
  if (clamp_sum(knots.back()) < 1.0) {
    // Positive entries all sit at the ceiling; the zero entries share the rest.
    const double rest = (1.0 - static_cast<double>(k - n_zero) * ceiling) / static_cast<double>(n_zero);
    for (std::size_t i = 0; i < k; ++i) out[i] = row[i] > 0.0 ? ceiling : rest;
  } else {
    // The clamped sum is piecewise linear in lambda between knots.
    double lambda = knots.back();
    double g_lo = clamp_sum(knots[0]);
    for (std::size_t j = 1; j < knots.size(); ++j) {
      const double g_hi = clamp_sum(knots[j]);
      if (g_hi >= 1.0) {
        lambda = g_hi > g_lo ? knots[j - 1] + (1.0 - g_lo) * (knots[j] - knots[j - 1]) / (g_hi - g_lo) : knots[j];
        break;
      }
      g_lo = g_hi;
    }
    for (std::size_t i = 0; i < k; ++i) out[i] = row[i] > 0.0 ? std::clamp(lambda * row[i], floor, ceiling) : floor;
  }
  const double sum = std::accumulate(out.begin(), out.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) throw NumericError("probability clipping did not reach a unit row sum");
  return out;
}

BtsResult BtsFromReplicateActions(std::vector<std::vector<int>> replicate_actions,
                                  std::size_t n_units, int n_actions, double floor,
                                  double ceiling) {
  if (replicate_actions.empty()) throw NumericError("BTS: no successful replicates");
  CheckBounds(floor, ceiling, static_cast<std::size_t>(n_actions));
  for (const auto& acts : replicate_actions) {
    if (acts.size() != n_units) throw ArgumentError("BTS replicate has the wrong number of units");
    for (int a : acts) {
      if (a < 0 || a >= n_actions) throw ArgumentError("BTS replicate action outside the action set");
    }
  }
  BtsResult res;
  res.replicates = static_cast<int>(replicate_actions.size());
  res.tallies = kernels::parallel::TallyActions(replicate_actions, n_units, static_cast<std::size_t>(n_actions));
  res.pre_clip = Matrix(n_units, static_cast<std::size_t>(n_actions));
  Matrix clipped(n_units, static_cast<std::size_t>(n_actions));
  const auto r = static_cast<double>(res.replicates);
  for (std::size_t i = 0; i < n_units; ++i) {
    for (std::size_t a = 0; a < res.tallies.cols(); ++a) res.pre_clip(i, a) = res.tallies(i, a) / r;
    const auto row = ClipProbabilities(res.pre_clip.row(i), floor, ceiling);
    std::copy(row.begin(), row.end(), clipped.row(i).begin());
  }
  res.snapshot = PolicySnapshot::Stochastic(std::move(clipped));
  res.replicate_actions = std::move(replicate_actions);
  return res;
}

BtsResult BootstrapThompson(const ExperimentalDataset& exp, std::span<const double> outcomes,
                            const PolicyPipelineConfig& pipeline, const BtsConfig& config,
                            const Table* assign_features) {
  config.Validate(exp.n_actions);
  if (outcomes.size() != exp.size()) throw ArgumentError("outcomes length does not match the experiment");
  if (exp.size() == 0) throw ArgumentError("BTS on an empty experiment");
  const Table& target = assign_features != nullptr ? *assign_features : exp.features;
  const auto reps = static_cast<std::size_t>(config.replicates);
  std::vector<std::optional<std::vector<int>>> actions(reps);
  std::vector<std::string> failures(reps);
  parallel::ForEach(reps, [&](std::size_t r) {
    const std::uint64_t rep_seed = DeriveSeed(config.seed, r);
    try {
      Rng rng(rep_seed);
      std::uniform_int_distribution<std::size_t> pick(0, exp.size() - 1);
      std::vector<std::size_t> rows(exp.size());
      for (auto& v : rows) v = pick(rng);
      const ExperimentalDataset sample = exp.Subset(rows);
      std::vector<double> y(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) y[i] = outcomes[rows[i]];
      PolicyPipelineConfig cfg = pipeline;
      cfg.seed = DeriveSeed(rep_seed, "pipeline");
      const auto fit = FitPolicyPipeline(sample, y, cfg);
      actions[r] = fit.fit.policy.Actions(SelectFeatures(target, pipeline.policy_features));
    } catch (const Error& e) {
      failures[r] = e.what();
    }
  });
  std::vector<std::vector<int>> ok;
  std::vector<std::string> warnings;
  for (std::size_t r = 0; r < reps; ++r) {
    if (actions[r]) {
      ok.push_back(std::move(*actions[r]));
    } else {
      warnings.push_back("replicate " + std::to_string(r) + " dropped: " + failures[r]);
    }
  }
  if (ok.empty()) throw NumericError("BTS: every replicate failed");
  BtsResult res = BtsFromReplicateActions(std::move(ok), target.n_rows(), exp.n_actions, config.floor,
                                          config.ceiling);
  res.dropped_replicates = static_cast<int>(reps) - res.replicates;
  res.warnings = std::move(warnings);
  return res;
}

void DesignPolicyConfig::Validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ArgumentError("design policy sigma must be > 0");
  if (!(cap > 0.0 && cap <= 1.0)) throw ArgumentError("design policy cap must be in (0, 1]");
  if (!std::isfinite(tau)) throw ArgumentError("design policy tau must be finite");
}

PolicySnapshot DesignPolicyFromRisk(std::span<const double> risk, const DesignPolicyConfig& config) {
  config.Validate();
  Matrix probs(risk.size(), 2);
  for (std::size_t i = 0; i < risk.size(); ++i) {
    if (!(risk[i] > 0.0 && risk[i] < 1.0)) {
      throw ArgumentError("risk score outside (0, 1) at row " + std::to_string(i));
    }
    double p = std::min(config.cap, stats::NormalCdf((risk[i] - config.tau) / config.sigma));
    p = std::clamp(p, kDesignPolicyFloor, 1.0 - kDesignPolicyFloor);
    probs(i, 1) = p;
    probs(i, 0) = 1.0 - p;
  }
  return PolicySnapshot::Stochastic(std::move(probs));
}

std::vector<int> SampleActions(const PolicySnapshot& snapshot, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> out(snapshot.size());
  const auto k = static_cast<std::size_t>(snapshot.n_actions());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double u = unif(rng);
    double acc = 0.0;
    std::size_t chosen = k - 1;
    for (std::size_t a = 0; a < k; ++a) {
      acc += snapshot.probs(i, a);
      if (u < acc) {
        chosen = a;
        break;
      }
    }
    // Never pick a zero-probability action through rounding at the tail.
    while (chosen > 0 && snapshot.probs(i, chosen) == 0.0) --chosen;
    out[i] = static_cast<int>(chosen);
  }
  return out;
}

void WriteAssignment(const std::filesystem::path& path, std::span<const std::int64_t> unit_ids,
                     const PolicySnapshot& snapshot, std::span<const int> sampled, std::uint64_t seed) {
  if (unit_ids.size() != snapshot.size() || sampled.size() != snapshot.size()) {
    throw ArgumentError("assignment export: length mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  std::vector<std::string> header{"unit_id"};
  for (int a = 0; a < snapshot.n_actions(); ++a) header.push_back("p" + std::to_string(a));
  header.emplace_back("sampled_action");
  header.emplace_back("seed");
  WriteCsvRow(out, header);
  const std::string seed_text = std::to_string(seed);
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    cells.clear();
    cells.push_back(std::to_string(unit_ids[i]));
    for (double p : snapshot.probs.row(i)) cells.push_back(FormatDouble(p));
    cells.push_back(std::to_string(sampled[i]));
    cells.push_back(seed_text);
    WriteCsvRow(out, cells);
  }
}

}  // namespace longhorizon
